#include "bilevel/ground_truth.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "bilevel/agd.hpp"
#include "bilevel/quadratic.hpp"
#include "bilevel/synthetic_minimax.hpp"

namespace bilevel {

Vector solve_strongly_convex(const std::function<Vector(const Vector&)>& grad,
                             const Vector& z0, double mu, double ell,
                             double tol, int max_restarts) {
  const double kappa = ell / mu;
  // enough AGD steps per round to contract the error by ~1e3
  const long K = std::max<long>(
      8, static_cast<long>(std::ceil(2.0 * std::sqrt(kappa) *
                                     (std::log(1e3) + 0.5 * std::log(kappa + 1.0)))));
  const AgdConfig cfg = AgdConfig::for_condition(ell, kappa, K);
  Vector z = z0;
  for (int r = 0; r < max_restarts; ++r) {
    if (grad(z).norm() <= tol) return z;
    z = agd_run(grad, z, cfg);
  }
  if (grad(z).norm() <= tol) return z;
  throw std::runtime_error(
      "solve_strongly_convex: inner solve exceeded the iteration cap");
}

namespace {

GroundTruth generic_bilevel_ground_truth(const BilevelOracle& o,
                                         const Vector& x, double tol) {
  const SmoothnessParams p = o.smoothness();
  auto inner = [&](const Vector& xq) {
    auto grad = [&](const Vector& y) { return o.grad_g_y(xq, y); };
    return solve_strongly_convex(grad, Vector::Zero(o.dim_y()), p.mu, p.ell,
                                 tol);
  };
  auto hyper_grad = [&](const Vector& xq) {
    const Vector ys = inner(xq);
    const Matrix gyy = o.hess_g_yy(xq, ys);
    const Vector corr = gyy.ldlt().solve(o.grad_f_y(xq, ys));
    return Vector(o.grad_f_x(xq, ys) - o.hess_g_xy(xq, ys) * corr);
  };

  GroundTruth gt;
  gt.y_star = inner(x);
  gt.phi = o.f_val(x, gt.y_star);
  gt.grad_phi = hyper_grad(x);

  // lambda_min(hess phi) by central differences of the hypergradient
  const double h = std::sqrt(tol);
  const int d = o.dim_x();
  Matrix H(d, d);
  for (int j = 0; j < d; ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    H.col(j) = (hyper_grad(xp) - hyper_grad(xm)) / (2.0 * h);
  }
  H = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  gt.hess_phi_min_eig = es.eigenvalues().minCoeff();
  gt.xi = positive_part(-gt.hess_phi_min_eig);
  return gt;
}

GroundTruth generic_minimax_ground_truth(const MinimaxOracle& o,
                                         const Vector& x, double tol) {
  const SmoothnessParams p = o.smoothness();
  auto inner = [&](const Vector& xq) {
    auto grad = [&](const Vector& y) { return Vector(-o.grad_f_y(xq, y)); };
    return solve_strongly_convex(grad, Vector::Zero(o.dim_y()), p.mu, p.ell,
                                 tol);
  };
  auto hyper_grad = [&](const Vector& xq) {
    return o.grad_f_x(xq, inner(xq));  // Danskin
  };

  GroundTruth gt;
  gt.y_star = inner(x);
  gt.phi = o.f_val(x, gt.y_star);
  gt.grad_phi = hyper_grad(x);

  const double h = std::sqrt(tol);
  const int d = o.dim_x();
  Matrix H(d, d);
  for (int j = 0; j < d; ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    H.col(j) = (hyper_grad(xp) - hyper_grad(xm)) / (2.0 * h);
  }
  H = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  gt.hess_phi_min_eig = es.eigenvalues().minCoeff();
  gt.xi = positive_part(-gt.hess_phi_min_eig);
  return gt;
}

}  // namespace

GroundTruth ground_truth_eval(const BilevelOracle& oracle, const Vector& x,
                              double tol) {
  if (!(tol > 0.0))
    throw std::invalid_argument("ground_truth_eval: tol must be positive");
  if (const auto* quad = dynamic_cast<const QuadraticBilevel*>(&oracle)) {
    GroundTruth gt;
    gt.y_star = quad->y_star(x);
    gt.phi = quad->phi(x);
    gt.grad_phi = quad->grad_phi(x);
    Eigen::SelfAdjointEigenSolver<Matrix> es(quad->hess_phi(),
                                             Eigen::EigenvaluesOnly);
    gt.hess_phi_min_eig = es.eigenvalues().minCoeff();
    gt.xi = positive_part(-gt.hess_phi_min_eig);
    return gt;
  }
  return generic_bilevel_ground_truth(oracle, x, tol);
}

GroundTruth ground_truth_eval(const MinimaxOracle& oracle, const Vector& x,
                              double tol) {
  if (!(tol > 0.0))
    throw std::invalid_argument("ground_truth_eval: tol must be positive");
  if (const auto* syn = dynamic_cast<const SyntheticMinimax*>(&oracle))
    return syn->ground_truth(x);
  return generic_minimax_ground_truth(oracle, x, tol);
}

}  // namespace bilevel
