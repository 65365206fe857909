#pragma once

#include <functional>
#include <optional>
#include <random>

#include "bilevel/types.hpp"

namespace bilevel {

/// Cubic-regularized quadratic model  m(s) = g's + s'Hs/2 + M |s|^3 / 6.
/// H is available either densely, as an operator, or both.  The exact solver
/// requires the dense form; the gradient-based solvers use only the operator.
struct CubicModel {
  Vector g;
  double M = 1.0;
  const Matrix* H = nullptr;
  std::function<Vector(const Vector&)> hvp;

  Vector apply_H(const Vector& v) const {
    if (hvp) return hvp(v);
    return (*H) * v;
  }
};

enum class CubicBranch { exact, cauchy, perturbed_gd, final_gd };

struct CubicResult {
  Vector s;
  double delta = 0.0;  // g's + s'Hs/2 + M|s|^3/6 at the output
  CubicBranch branch = CubicBranch::exact;
  bool hard_case = false;
};

double cubic_model_value(const CubicModel& model, const Vector& s);
/// Gradient of the model: g + Hs + (M/2)|s|s.
Vector cubic_model_grad(const CubicModel& model, const Vector& s);

/// Global minimizer via eigendecomposition plus a safeguarded
/// bisection/Newton solve of the secular equation
///   sum_i (v_i'g)^2 / (lambda_i + M r / 2)^2 = r^2
/// on r > max(0, -2 lambda_min / M).  The hard case (gradient orthogonal to
/// the bottom eigenspace with the interior root infeasible) is resolved by
/// adding the null-direction component of the required magnitude, with a
/// deterministic sign convention.  The output satisfies
///   g + H s + (M/2)|s| s = 0            (stationarity)
///   H + (M/2)|s| I >= 0                 (global optimality)
///   m(s) <= -(M/12) |s|^3.
CubicResult cubic_solve_exact(const CubicModel& model);

struct CubicGdOptions {
  /// Early exit once the model-gradient norm falls below this absolute
  /// threshold; at large penalty multipliers the matrix-free operator has a
  /// float noise floor, so callers pass the gradient accuracy they actually
  /// need.  0 disables (run the count verbatim).
  double stall_grad_tol = 0.0;
  /// Early exit when the best model-gradient norm seen has not improved for
  /// this many consecutive iterations.  0 disables.
  long stall_patience = 0;
  /// Optional hard cap on iterations (0 = none beyond the schedule).
  long max_iters = 0;
  std::optional<double> C_H_tilde;  // constant inside the iteration count
};

/// Iteration budget K(eps, delta') of the perturbed gradient branch.
long cubic_gd_iteration_count(double L, double M, double eps,
                              double delta_prime, double C_sigma,
                              double C_H_tilde, int d_x);

/// Gradient-based solver: Cauchy step when |g| >= L^2 / M, otherwise
/// perturbed gradient descent on the model with eta = 1/(20 L) from s_0 = 0
/// (the perturbation sigma * zeta, zeta uniform on the sphere, makes the
/// success event high-probability).  Applies H only through hvp.
CubicResult cubic_solve_gd(const CubicModel& model, double L, double eps,
                           double delta_prime, double C_sigma,
                           std::mt19937_64& rng,
                           const CubicGdOptions& opts = {});

struct FinalCubicResult {
  Vector s;
  bool converged = true;
};

/// Gradient descent on the model from s_0 = 0 until the model gradient norm
/// drops to eps / 2.  Iteration cap 10 * ceil(400 L^2 / (M eps)); a tripped
/// cap is reported through `converged` rather than thrown.
FinalCubicResult cubic_solve_final(const CubicModel& model, double eps,
                                   double L);

}  // namespace bilevel
