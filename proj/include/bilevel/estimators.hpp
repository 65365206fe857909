#pragma once

#include <functional>
#include <optional>

#include "bilevel/oracles.hpp"

namespace bilevel {

/// Penalty-Lagrangian working context: the oracle, the multiplier and every
/// derived constant the estimators and schedules need.
///
/// The inner objective f(x,.) + lambda g(x,.) is mu2-strongly convex and
/// ell2-smooth once lambda >= 2 ell / mu.  C1 and C2 are the exact estimator
/// error coefficients
///   C1 = lambda rho + 2 ell rho / mu + ell^2 rho / mu^2
///   C2 = rho + lambda rho
///        + (ell + lambda ell) (4(rho + lambda rho)/(lambda mu)
///                              + 4(rho + lambda rho)(ell + lambda ell)/(lambda mu)^2).
/// The hidden constants in L and rho_bar are not specified anywhere, so we
/// default to L = 8 ell_bar kappa^3 and rho_bar = 8 ell_bar kappa^5 and let
/// callers override (quadratic instances know their true values).
struct LagrangianContext {
  const CountingBilevel* oracle = nullptr;
  double lambda = 0.0;
  SmoothnessParams params;
  std::optional<double> L_override;
  std::optional<double> rho_bar_override;

  LagrangianContext() = default;
  LagrangianContext(const CountingBilevel& o, double lam,
                    const SmoothnessParams& p);

  double ell2() const { return (1.0 + lambda) * params.ell; }
  double mu2() const { return lambda * params.mu / 2.0; }
  double L() const;
  double rho_bar() const;
  double C1() const;
  double C2() const;
  void validate() const;
};

/// y |-> grad_y [f(x, y) + lambda g(x, y)], the gradient oracle of the inner
/// problem behind y*_lambda(x).
std::function<Vector(const Vector&)> lagrangian_inner_oracle(
    const LagrangianContext& ctx, const Vector& x);

/// Hypergradient estimate
///   g(x; y, w) = grad_x f(x,y) + lambda (grad_x g(x,y) - grad_x g(x,w)).
/// Three unit gradient costs.
Vector grad_estimate(const LagrangianContext& ctx, const Vector& x,
                     const Vector& y, const Vector& w);

/// Hyper-Hessian estimate with exact dense block inverses,
///   H(x; y, w) = hess_xx L(x,y) - lambda hess_xx g(x,w)
///                - L_xy L_yy^{-1} L_yx + lambda g_xy g_yy^{-1} g_yx,
/// symmetrized.  Six block costs: the three Lagrangian blocks at (x, y) plus
/// the three g blocks at (x, w).  Throws if a yy block is not positive
/// definite (violated strong convexity).
Matrix hess_estimate(const LagrangianContext& ctx, const Vector& x,
                     const Vector& y, const Vector& w);

/// Chebyshev approximation of X^{-1} for symmetric X with spectrum in
/// [mu_X, ell_X].  X is scaled internally by 1/(2 ell_X) so its spectrum lies
/// in (0, 1/2]; the polynomial uses the three-term recurrence
/// T_k = 2 Z' T_{k-1} - T_{k-2}.  Rejects mu_X <= 0.
Matrix cheb_inverse_apply(const Matrix& X, double mu_X, double ell_X,
                          int K_prime);

/// Spectral-norm error bound of cheb_inverse_apply (scaled-problem bound of
/// the underlying polynomial, divided by 2 ell_X).
double cheb_inverse_error_bound(double mu_X, double ell_X, int K_prime);

/// Matrix-free Chebyshev inverse application: approximates X^{-1} v using
/// K_prime + O(1) products v |-> X v supplied by `apply`.
Vector cheb_inverse_apply_vec(const std::function<Vector(const Vector&)>& apply,
                              double mu_X, double ell_X, int K_prime,
                              const Vector& v);

/// Dense Chebyshev hyper-Hessian estimate: block inverses replaced by order
/// K1 (for g_yy, spectrum [mu, ell]) and K2 (for L_yy, spectrum
/// [lambda mu / 2, (1+lambda) ell]) Chebyshev polynomials.  Six block costs.
Matrix hess_estimate_cheb(const LagrangianContext& ctx, const Vector& x,
                          const Vector& y, const Vector& w, int K1, int K2);

/// Matrix-free variant: returns an operator v |-> C(x; y, w) v realized purely
/// via HVPs and the vector three-term recurrence; never touches a dense block.
/// Each application costs 6 + K1 + K2 HVP units.
std::function<Vector(const Vector&)> hess_cheb_operator(
    const LagrangianContext& ctx, const Vector& x, const Vector& y,
    const Vector& w, int K1, int K2);

/// Upper bound on |H(x;y,w) - C(x;y,w)| for the Chebyshev orders used.
double hess_cheb_error_bound(const LagrangianContext& ctx, int K1, int K2);

/// Minimax estimators: g(x; y) = grad_x f(x, y) (one gradient cost) and the
/// Schur-complement Hessian
///   H(x; y) = f_xx - f_xy f_yy^{-1} f_yx,
/// symmetrized (three block costs).  minimax_hess throws if f_yy is not
/// negative definite.
Vector minimax_grad(const CountingMinimax& oracle, const Vector& x,
                    const Vector& y);
Matrix minimax_hess(const CountingMinimax& oracle, const Vector& x,
                    const Vector& y);

}  // namespace bilevel
