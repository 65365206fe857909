#include "bilevel/estimators.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace bilevel {

LagrangianContext::LagrangianContext(const CountingBilevel& o, double lam,
                                     const SmoothnessParams& p)
    : oracle(&o), lambda(lam), params(p) {
  validate();
}

void LagrangianContext::validate() const {
  params.validate();
  if (lambda < 2.0 * params.ell / params.mu - 1e-12)
    throw std::invalid_argument(
        "LagrangianContext: lambda must be >= 2 ell / mu");
}

double LagrangianContext::L() const {
  if (L_override) return *L_override;
  const double k = params.kappa();
  return 8.0 * params.ell_bar() * k * k * k;
}

double LagrangianContext::rho_bar() const {
  if (rho_bar_override) return *rho_bar_override;
  const double k = params.kappa();
  return 8.0 * params.ell_bar() * k * k * k * k * k;
}

double LagrangianContext::C1() const {
  const double mu = params.mu, ell = params.ell, rho = params.rho;
  return lambda * rho + 2.0 * ell * rho / mu + ell * ell * rho / (mu * mu);
}

double LagrangianContext::C2() const {
  const double mu = params.mu, ell = params.ell, rho = params.rho;
  const double rho_l = rho + lambda * rho;
  const double ell_l = ell + lambda * ell;
  return rho_l + ell_l * (4.0 * rho_l / (lambda * mu) +
                          4.0 * rho_l * ell_l / (lambda * lambda * mu * mu));
}

std::function<Vector(const Vector&)> lagrangian_inner_oracle(
    const LagrangianContext& ctx, const Vector& x) {
  const CountingBilevel* o = ctx.oracle;
  const double lambda = ctx.lambda;
  return [o, lambda, x](const Vector& y) { return o->grad_L_y(x, y, lambda); };
}

Vector grad_estimate(const LagrangianContext& ctx, const Vector& x,
                     const Vector& y, const Vector& w) {
  const CountingBilevel& o = *ctx.oracle;
  return o.grad_f_x(x, y) +
         ctx.lambda * (o.grad_g_x(x, y) - o.grad_g_x(x, w));
}

namespace {
Eigen::LLT<Matrix> checked_llt(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(what) +
                             ": yy block is not positive definite");
  return llt;
}
}  // namespace

Matrix hess_estimate(const LagrangianContext& ctx, const Vector& x,
                     const Vector& y, const Vector& w) {
  const CountingBilevel& o = *ctx.oracle;
  const double lambda = ctx.lambda;
  const Matrix Lxx = o.hess_L_xx(x, y, lambda);
  const Matrix Lxy = o.hess_L_xy(x, y, lambda);
  const Matrix Lyy = o.hess_L_yy(x, y, lambda);
  const Matrix Gxx = o.hess_g_xx(x, w);
  const Matrix Gxy = o.hess_g_xy(x, w);
  const Matrix Gyy = o.hess_g_yy(x, w);

  const auto llt_L = checked_llt(Lyy, "hess_estimate (Lagrangian)");
  const auto llt_g = checked_llt(Gyy, "hess_estimate (lower level)");

  Matrix h = Lxx - lambda * Gxx - Lxy * llt_L.solve(Lxy.transpose()) +
             lambda * Gxy * llt_g.solve(Gxy.transpose());
  return 0.5 * (h + h.transpose());
}

// ---------------------------------------------------------------------------
// Chebyshev inverse approximation

namespace {
struct ChebScaling {
  double mu_p;    // scaled lower bound
  double ell_p;   // scaled upper bound (= 1/2)
  double scale;   // 1 / (2 ell_X)
  double ratio;   // coefficient ratio (sqrt(mu'/ell') - 1)/(sqrt(mu'/ell') + 1)
  double c0;
  double z_a;     // Z' = z_a * Xhat + z_b * I, with Xhat = scale * X
  double z_b;
};

ChebScaling cheb_scaling(double mu_X, double ell_X) {
  if (!(mu_X > 0.0))
    throw std::invalid_argument("cheb_inverse: mu_X must be positive");
  if (ell_X < mu_X)
    throw std::invalid_argument("cheb_inverse: need mu_X <= ell_X");
  ChebScaling s;
  s.scale = 1.0 / (2.0 * ell_X);
  s.mu_p = mu_X * s.scale;
  s.ell_p = 0.5;
  const double q = std::sqrt(s.mu_p / s.ell_p);
  s.ratio = (q - 1.0) / (q + 1.0);
  s.c0 = 2.0 / std::sqrt(s.ell_p * s.mu_p);
  const double denom = s.ell_p - s.mu_p;
  if (denom > 0.0) {
    s.z_a = 2.0 / denom;
    s.z_b = -(s.ell_p + s.mu_p) / denom;
  } else {
    // degenerate spectrum (mu_X == ell_X): all higher coefficients vanish
    s.z_a = 0.0;
    s.z_b = 0.0;
  }
  return s;
}
}  // namespace

Matrix cheb_inverse_apply(const Matrix& X, double mu_X, double ell_X,
                          int K_prime) {
  if (K_prime < 0)
    throw std::invalid_argument("cheb_inverse_apply: negative order");
  const ChebScaling s = cheb_scaling(mu_X, ell_X);
  const Eigen::Index d = X.rows();
  Matrix acc = (s.c0 / 2.0) * Matrix::Identity(d, d);
  if (K_prime >= 1 && s.ratio != 0.0) {
    const Matrix Z = s.z_a * s.scale * X + s.z_b * Matrix::Identity(d, d);
    Matrix t_prev = Matrix::Identity(d, d);  // T_0
    Matrix t_cur = Z;                        // T_1
    double ck = s.c0 * s.ratio;
    acc += ck * t_cur;
    for (int k = 2; k <= K_prime; ++k) {
      Matrix t_next = 2.0 * Z * t_cur - t_prev;
      t_prev = std::move(t_cur);
      t_cur = std::move(t_next);
      ck *= s.ratio;
      acc += ck * t_cur;
    }
  }
  return s.scale * acc;
}

double cheb_inverse_error_bound(double mu_X, double ell_X, int K_prime) {
  const ChebScaling s = cheb_scaling(mu_X, ell_X);
  const double r = std::sqrt(s.ell_p / s.mu_p);
  const double rate = 1.0 - 2.0 / (r + 1.0);
  return s.scale * (r - 1.0) / std::sqrt(s.ell_p * s.mu_p) *
         std::pow(rate, K_prime);
}

Vector cheb_inverse_apply_vec(const std::function<Vector(const Vector&)>& apply,
                              double mu_X, double ell_X, int K_prime,
                              const Vector& v) {
  if (K_prime < 0)
    throw std::invalid_argument("cheb_inverse_apply_vec: negative order");
  const ChebScaling s = cheb_scaling(mu_X, ell_X);
  Vector acc = (s.c0 / 2.0) * v;
  if (K_prime >= 1 && s.ratio != 0.0) {
    auto apply_Z = [&](const Vector& q) {
      return Vector(s.z_a * s.scale * apply(q) + s.z_b * q);
    };
    Vector t_prev = v;
    Vector t_cur = apply_Z(v);
    double ck = s.c0 * s.ratio;
    acc += ck * t_cur;
    for (int k = 2; k <= K_prime; ++k) {
      Vector t_next = 2.0 * apply_Z(t_cur) - t_prev;
      t_prev = std::move(t_cur);
      t_cur = std::move(t_next);
      ck *= s.ratio;
      acc += ck * t_cur;
    }
  }
  return s.scale * acc;
}

Matrix hess_estimate_cheb(const LagrangianContext& ctx, const Vector& x,
                          const Vector& y, const Vector& w, int K1, int K2) {
  const CountingBilevel& o = *ctx.oracle;
  const double lambda = ctx.lambda;
  const double mu = ctx.params.mu, ell = ctx.params.ell;
  const Matrix Lxx = o.hess_L_xx(x, y, lambda);
  const Matrix Lxy = o.hess_L_xy(x, y, lambda);
  const Matrix Lyy = o.hess_L_yy(x, y, lambda);
  const Matrix Gxx = o.hess_g_xx(x, w);
  const Matrix Gxy = o.hess_g_xy(x, w);
  const Matrix Gyy = o.hess_g_yy(x, w);

  const Matrix C1m = cheb_inverse_apply(Gyy, mu, ell, K1);
  const Matrix C2m = cheb_inverse_apply(Lyy, ctx.mu2(), ctx.ell2(), K2);
  Matrix h = Lxx - lambda * Gxx - Lxy * C2m * Lxy.transpose() +
             lambda * Gxy * C1m * Gxy.transpose();
  return 0.5 * (h + h.transpose());
}

std::function<Vector(const Vector&)> hess_cheb_operator(
    const LagrangianContext& ctx, const Vector& x, const Vector& y,
    const Vector& w, int K1, int K2) {
  const CountingBilevel* o = ctx.oracle;
  const double lambda = ctx.lambda;
  const double mu = ctx.params.mu, ell = ctx.params.ell;
  const double mu2 = ctx.mu2(), ell2 = ctx.ell2();
  return [o, lambda, mu, ell, mu2, ell2, x, y, w, K1, K2](const Vector& v) {
    const Vector head = o->hvp_L_xx(x, y, lambda, v) -
                        lambda * o->hvp_g_xx(x, w, v);
    const Vector ly = o->hvp_L_yx(x, y, lambda, v);
    const Vector ls = cheb_inverse_apply_vec(
        [&](const Vector& q) { return o->hvp_L_yy(x, y, lambda, q); }, mu2,
        ell2, K2, ly);
    const Vector l_term = o->hvp_L_xy(x, y, lambda, ls);
    const Vector gy = o->hvp_g_yx(x, w, v);
    const Vector gs = cheb_inverse_apply_vec(
        [&](const Vector& q) { return o->hvp_g_yy(x, w, q); }, mu, ell, K1,
        gy);
    const Vector g_term = o->hvp_g_xy(x, w, gs);
    return Vector(head - l_term + lambda * g_term);
  };
}

double hess_cheb_error_bound(const LagrangianContext& ctx, int K1, int K2) {
  // The lower-level Schur term enters the estimate scaled by lambda, so its
  // truncation error carries the same factor.
  const double kappa = ctx.params.kappa();
  const double ell = ctx.params.ell;
  const double r1 = 1.0 - 2.0 / (std::sqrt(kappa) + 1.0);
  const double r2 = 1.0 - 2.0 / (std::sqrt(3.0 * kappa) + 1.0);
  return ctx.lambda * kappa * ell * std::pow(r1, K1) +
         6.0 * (ctx.lambda + 1.0) * kappa * ell * std::pow(r2, K2);
}

// ---------------------------------------------------------------------------

Vector minimax_grad(const CountingMinimax& oracle, const Vector& x,
                    const Vector& y) {
  return oracle.grad_f_x(x, y);
}

Matrix minimax_hess(const CountingMinimax& oracle, const Vector& x,
                    const Vector& y) {
  const Matrix fxx = oracle.hess_f_xx(x, y);
  const Matrix fxy = oracle.hess_f_xy(x, y);
  const Matrix neg_fyy = -oracle.hess_f_yy(x, y);
  Eigen::LLT<Matrix> llt(neg_fyy);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "minimax_hess: hess_f_yy is not negative definite");
  Matrix h = fxx + fxy * llt.solve(fxy.transpose());
  return 0.5 * (h + h.transpose());
}

}  // namespace bilevel
