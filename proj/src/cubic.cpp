#include "bilevel/cubic.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace bilevel {

double cubic_model_value(const CubicModel& model, const Vector& s) {
  const double ns = s.norm();
  return model.g.dot(s) + 0.5 * s.dot(model.apply_H(s)) +
         model.M / 6.0 * ns * ns * ns;
}

Vector cubic_model_grad(const CubicModel& model, const Vector& s) {
  return model.g + model.apply_H(s) + 0.5 * model.M * s.norm() * s;
}

namespace {

// Canonical sign: make the largest-magnitude component positive, so the
// hard-case direction is deterministic.
Vector canonical_sign(Vector v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
  return v;
}

}  // namespace

CubicResult cubic_solve_exact(const CubicModel& model) {
  if (model.H == nullptr)
    throw std::invalid_argument("cubic_solve_exact: dense Hessian required");
  if (!(model.M > 0.0))
    throw std::invalid_argument("cubic_solve_exact: M must be positive");
  if (!model.g.allFinite() || !model.H->allFinite())
    throw std::invalid_argument("cubic_solve_exact: non-finite input");

  const double M = model.M;
  const Eigen::Index d = model.g.size();
  Eigen::SelfAdjointEigenSolver<Matrix> es(*model.H);
  const Vector lam = es.eigenvalues();
  const Matrix& V = es.eigenvectors();
  const Vector ghat = V.transpose() * model.g;
  const double lmin = lam[0];
  const double gnorm = model.g.norm();
  const double r_lb = std::max(0.0, -2.0 * lmin / M);

  CubicResult res;
  res.branch = CubicBranch::exact;

  // Work with the offset delta = r - r_lb.  The shifted denominators
  //   lam_i + (M/2) r = (lam_i - lmin) + c0 + (M/2) delta
  // avoid the catastrophic cancellation of lam_min + (M/2) r near the
  // hard-case boundary (c0 is the rounding residue of that cancellation,
  // clamped so denominators stay positive for delta > 0).
  const double c0 =
      lmin < 0.0 ? std::max(0.0, lmin + 0.5 * M * r_lb) : lmin;
  auto shat_at = [&](double delta) {
    Vector sh(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double denom = (lam[i] - lmin) + c0 + 0.5 * M * delta;
      sh[i] = denom > 0.0 ? -ghat[i] / denom : 0.0;
    }
    return sh;
  };
  auto norm_at = [&](double delta) { return shat_at(delta).norm(); };

  const double eig_tol = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  auto finish = [&](double delta, bool hard, double null_mag) {
    Vector sh = shat_at(delta);
    Vector s = V * sh;
    if (hard && null_mag > 0.0)
      s += null_mag * canonical_sign(V.col(0));
    res.s = std::move(s);
    res.hard_case = hard;
    res.delta = cubic_model_value(model, res.s);
    return res;
  };

  if (gnorm == 0.0) {
    if (lmin >= 0.0) {
      res.s = Vector::Zero(d);
      res.delta = 0.0;
      return res;
    }
    return finish(0.0, true, r_lb);
  }

  // Hard case: gradient orthogonal to the bottom eigenspace and the interior
  // equation infeasible at the boundary multiplier.
  if (lmin < 0.0) {
    bool orthogonal = true;
    for (Eigen::Index i = 0; i < d && lam[i] <= lmin + eig_tol; ++i)
      if (std::abs(ghat[i]) > 1e-12 * gnorm) {
        orthogonal = false;
        break;
      }
    if (orthogonal) {
      // drop the deficient components when probing the boundary
      Vector sh(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double denom = (lam[i] - lmin) + c0;
        sh[i] = (lam[i] > lmin + eig_tol && denom > 0.0) ? -ghat[i] / denom
                                                         : 0.0;
      }
      const double interior = sh.norm();
      if (interior <= r_lb) {
        const double null_mag =
            std::sqrt(std::max(0.0, r_lb * r_lb - interior * interior));
        Vector s = V * sh + null_mag * canonical_sign(V.col(0));
        res.s = std::move(s);
        res.hard_case = true;
        res.delta = cubic_model_value(model, res.s);
        return res;
      }
    }
  }

  // Regular case: psi(delta) = |shat(delta)| - (r_lb + delta) is strictly
  // decreasing.  Bracket in delta, then bisect (geometric when the bracket
  // spans decades) with Newton acceleration.
  double lo = std::numeric_limits<double>::min();
  if (norm_at(lo) <= r_lb + lo) {
    // numerically at the hard-case boundary even though the gradient is not
    // flagged orthogonal
    const double interior = norm_at(0.0);
    const double null_mag =
        std::sqrt(std::max(0.0, r_lb * r_lb - interior * interior));
    return finish(0.0, true, null_mag);
  }
  const double hnorm = lam.cwiseAbs().maxCoeff();
  double hi = 2.0 * std::sqrt(gnorm / M) + 2.0 * hnorm / M + 1.0;
  int grow = 0;
  while (norm_at(hi) > r_lb + hi) {
    hi *= 2.0;
    if (++grow > 200)
      throw std::runtime_error("cubic_solve_exact: failed to bracket the "
                               "secular root (non-finite input?)");
  }

  const double resid_target = 1e-12 * (1.0 + gnorm);
  double best_delta = hi;
  double best_mismatch = std::numeric_limits<double>::infinity();
  double delta = std::sqrt(lo * hi);
  for (int it = 0; it < 400 && lo < hi; ++it) {
    if (!(delta > lo) || !(delta < hi))
      delta = hi / lo > 4.0 ? std::sqrt(lo) * std::sqrt(hi)
                            : 0.5 * (lo + hi);
    if (!(delta > lo) || !(delta < hi)) break;  // float resolution reached
    const Vector sh = shat_at(delta);
    const double u = sh.norm();
    const double r = r_lb + delta;
    const double psi = u - r;
    const double mism = 0.5 * M * std::abs(psi) * std::max(u, r);
    if (mism < best_mismatch) {
      best_mismatch = mism;
      best_delta = delta;
    }
    if (best_mismatch <= resid_target) break;
    if (psi > 0.0)
      lo = delta;
    else
      hi = delta;
    // Newton step on psi; u'(delta) = -(M/2) sum ghat^2 / denom^3 / u
    double du = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double denom = (lam[i] - lmin) + c0 + 0.5 * M * delta;
      if (denom > 0.0) du += sh[i] * sh[i] / denom;
    }
    du *= -0.5 * M / std::max(u, 1e-300);
    const double newton = delta - psi / (du - 1.0);
    if (newton > lo && newton < hi)
      delta = newton;
    else
      delta = hi / lo > 4.0 ? std::sqrt(lo) * std::sqrt(hi)
                            : 0.5 * (lo + hi);
  }
  return finish(best_delta, false, 0.0);
}

long cubic_gd_iteration_count(double L, double M, double eps,
                              double delta_prime, double C_sigma,
                              double C_H_tilde, int d_x) {
  const double sqme = std::sqrt(M * eps);
  const double lead = 19200.0 * L / (C_sigma * sqme);
  const double logs =
      6.0 * std::log(3.0 + 9.0 * std::sqrt(static_cast<double>(d_x)) /
                               delta_prime) +
      18.0 * std::log(6.0 * L / sqme) +
      14.0 * std::log(48.0 * (L + C_H_tilde * sqme) / (C_sigma * sqme) +
                      24.0 / C_sigma);
  const double k = std::ceil(lead * std::max(logs, 1.0));
  return static_cast<long>(std::min(k, 1e15));
}

CubicResult cubic_solve_gd(const CubicModel& model, double L, double eps,
                           double delta_prime, double C_sigma,
                           std::mt19937_64& rng, const CubicGdOptions& opts) {
  if (!(L > 0.0) || !(eps > 0.0) || !(delta_prime > 0.0) || delta_prime >= 1.0)
    throw std::invalid_argument("cubic_solve_gd: invalid parameters");
  const double M = model.M;
  const double gnorm = model.g.norm();

  CubicResult res;
  if (gnorm >= L * L / M) {
    // Cauchy step along -g
    const double q = model.g.dot(model.apply_H(model.g)) / (gnorm * gnorm);
    const double R_C =
        -q / M + std::sqrt(q * q / (M * M) + 2.0 * gnorm / M);
    res.s = -(R_C / gnorm) * model.g;
    res.branch = CubicBranch::cauchy;
    res.delta = -R_C * gnorm + 0.5 * R_C * R_C * q +
                M / 6.0 * R_C * R_C * R_C;
    return res;
  }

  const double sqme = std::sqrt(M * eps);
  const double sigma = C_sigma * M * M * std::pow(eps / M, 1.5) /
                       (4608.0 * (4.0 * L + sqme));
  const double C_H_tilde = opts.C_H_tilde.value_or(1.0 / 200.0);
  long K = cubic_gd_iteration_count(L, M, eps, delta_prime, C_sigma, C_H_tilde,
                                    static_cast<int>(model.g.size()));
  if (opts.max_iters > 0) K = std::min(K, opts.max_iters);

  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector zeta(model.g.size());
  for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta[i] = gauss(rng);
  const double zn = zeta.norm();
  if (zn > 0.0) zeta /= zn;
  const Vector g_tilde = model.g + sigma * zeta;

  const double eta = 1.0 / (20.0 * L);
  Vector s = Vector::Zero(model.g.size());
  double best_grad = std::numeric_limits<double>::infinity();
  long since_improve = 0;
  for (long k = 0; k < K; ++k) {
    const Vector grad = g_tilde + model.apply_H(s) + 0.5 * M * s.norm() * s;
    if (!grad.allFinite())
      throw std::runtime_error("cubic_solve_gd: non-finite iterate");
    const double gn = grad.norm();
    if (opts.stall_grad_tol > 0.0 && gn <= opts.stall_grad_tol) break;
    if (opts.stall_patience > 0) {
      if (gn < best_grad * (1.0 - 1e-3)) {
        best_grad = gn;
        since_improve = 0;
      } else if (++since_improve >= opts.stall_patience) {
        break;
      }
    }
    s -= eta * grad;
  }
  res.s = std::move(s);
  res.branch = CubicBranch::perturbed_gd;
  res.delta = cubic_model_value(model, res.s);
  return res;
}

FinalCubicResult cubic_solve_final(const CubicModel& model, double eps,
                                   double L) {
  if (!(L > 0.0) || !(eps > 0.0))
    throw std::invalid_argument("cubic_solve_final: invalid parameters");
  const double M = model.M;
  const double eta = 1.0 / (20.0 * L);
  const double cap_d = 10.0 * std::ceil(400.0 * L * L / (M * eps));
  const long cap = static_cast<long>(std::min(cap_d, 1e15));

  FinalCubicResult out;
  Vector s = Vector::Zero(model.g.size());
  Vector g_t = model.g;
  for (long t = 0; t <= cap; ++t) {
    if (g_t.norm() <= 0.5 * eps) {
      out.s = std::move(s);
      out.converged = true;
      return out;
    }
    s -= eta * g_t;
    if (!s.allFinite())
      throw std::runtime_error("cubic_solve_final: non-finite iterate");
    g_t = model.g + model.apply_H(s) + 0.5 * M * s.norm() * s;
  }
  out.s = std::move(s);
  out.converged = false;
  return out;
}

}  // namespace bilevel
