#pragma once

#include <memory>

#include "bilevel/oracles.hpp"

namespace bilevel {

/// Value and first two derivatives of the piecewise saddle profile w.
struct WEval {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Six-branch piecewise polynomial with breakpoints at +-sqrt(eps) and
/// +-L*sqrt(eps).  C^1 everywhere; the second derivative jumps only at the
/// breakpoints.  w has a strict saddle at 0 (w''(0) = -2 sqrt(eps)) and two
/// valleys at +-(L+1) sqrt(eps) of depth -(3L+1) eps^{3/2} / 3.
WEval w_piecewise(double x, double eps, double L);

/// Synthetic strongly-concave minimax test problem
///   f(x, y) = w(x3) - 10 y1^2 + x1 y1 - 5 y2^2 + x2 y2,  d_x = 3, d_y = 2,
/// with analytic best response y*(x) = (x1/20, x2/10) and hyper-objective
/// phi(x) = w(x3) + x1^2/40 + x2^2/20.
class SyntheticMinimax final : public MinimaxOracle {
 public:
  SyntheticMinimax(double eps, double L);

  int dim_x() const override { return 3; }
  int dim_y() const override { return 2; }
  SmoothnessParams smoothness() const override { return params_; }

  double f_val(const Vector& x, const Vector& y) const override;
  Vector grad_f_x(const Vector& x, const Vector& y) const override;
  Vector grad_f_y(const Vector& x, const Vector& y) const override;
  Matrix hess_f_xx(const Vector& x, const Vector& y) const override;
  Matrix hess_f_xy(const Vector& x, const Vector& y) const override;
  Matrix hess_f_yy(const Vector& x, const Vector& y) const override;

  // ---- analytic ground truth ----------------------------------------------
  Vector y_star(const Vector& x) const;
  double phi(const Vector& x) const;
  Vector grad_phi(const Vector& x) const;
  Matrix hess_phi(const Vector& x) const;
  GroundTruth ground_truth(const Vector& x) const;
  double phi_star() const;

  double eps_w() const { return eps_; }
  double L_w() const { return L_; }

 private:
  double eps_;
  double L_;
  SmoothnessParams params_;
};

std::unique_ptr<SyntheticMinimax> make_synthetic_minimax(double eps, double L);

}  // namespace bilevel
