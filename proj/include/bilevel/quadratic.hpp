#pragma once

#include <cstdint>
#include <memory>

#include "bilevel/oracles.hpp"

namespace bilevel {

/// Quadratic bilevel verification family:
///   f(x, y) = 1/2 x'Ax + x'By + 1/2 y'Cy + a'x + b'y
///   g(x, y) = 1/2 y'Qy + y'Px + q'y,   Q symmetric positive definite.
/// Everything about the instance is available in closed form, which makes it
/// the main oracle for correctness tests.  rho = nu = 0 for this family.
class QuadraticBilevel final : public BilevelOracle {
 public:
  QuadraticBilevel(Matrix A, Matrix B, Matrix C, Matrix Q, Matrix P, Vector a,
                   Vector b, Vector q);

  int dim_x() const override { return static_cast<int>(A_.rows()); }
  int dim_y() const override { return static_cast<int>(Q_.rows()); }
  SmoothnessParams smoothness() const override { return params_; }

  double f_val(const Vector& x, const Vector& y) const override;
  double g_val(const Vector& x, const Vector& y) const override;
  Vector grad_f_x(const Vector& x, const Vector& y) const override;
  Vector grad_f_y(const Vector& x, const Vector& y) const override;
  Vector grad_g_x(const Vector& x, const Vector& y) const override;
  Vector grad_g_y(const Vector& x, const Vector& y) const override;
  Matrix hess_f_xx(const Vector&, const Vector&) const override { return A_; }
  Matrix hess_f_xy(const Vector&, const Vector&) const override { return B_; }
  Matrix hess_f_yy(const Vector&, const Vector&) const override { return C_; }
  Matrix hess_g_xx(const Vector&, const Vector&) const override;
  Matrix hess_g_xy(const Vector&, const Vector&) const override;
  Matrix hess_g_yy(const Vector&, const Vector&) const override { return Q_; }

  Vector hvp_f_xx(const Vector&, const Vector&, const Vector& v) const override;
  Vector hvp_f_xy(const Vector&, const Vector&, const Vector& v) const override;
  Vector hvp_f_yx(const Vector&, const Vector&, const Vector& v) const override;
  Vector hvp_f_yy(const Vector&, const Vector&, const Vector& v) const override;
  Vector hvp_g_xx(const Vector&, const Vector&, const Vector& v) const override;
  Vector hvp_g_xy(const Vector&, const Vector&, const Vector& v) const override;
  Vector hvp_g_yx(const Vector&, const Vector&, const Vector& v) const override;
  Vector hvp_g_yy(const Vector&, const Vector&, const Vector& v) const override;

  // ---- closed-form solver -------------------------------------------------
  Vector y_star(const Vector& x) const;
  Vector y_star_lambda(double lambda, const Vector& x) const;
  double phi(const Vector& x) const;
  Vector grad_phi(const Vector& x) const;
  const Matrix& hess_phi() const { return hess_phi_; }
  /// L*_lambda(x) = f(x, y*_l) + lambda (g(x, y*_l) - g(x, y*)).
  double lagrangian_value(double lambda, const Vector& x) const;
  Vector lagrangian_grad(double lambda, const Vector& x) const;
  Matrix lagrangian_hess(double lambda) const;
  /// argmin/min of phi (the family is generated with hess_phi positive
  /// definite so the hyper-objective has a unique minimizer).
  Vector x_star() const;
  double phi_star() const;

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }
  const Matrix& Q() const { return Q_; }
  const Matrix& P() const { return P_; }

 private:
  Matrix A_, B_, C_, Q_, P_;
  Vector a_, b_, q_;
  Matrix S_;        // dy*/dx = -Q^{-1} P
  Vector s0_;       // -Q^{-1} q
  Matrix hess_phi_; // constant
  SmoothnessParams params_;
};

/// Seed-deterministic random instance.  Q eigenvalues are log-uniform in
/// [1, cond] with the endpoints pinned, so mu = 1 and the reported condition
/// number tracks cond.  The couplings are scaled so that hess_phi stays
/// positive definite (a quadratic hyper-objective with negative curvature has
/// no minimizer).
std::unique_ptr<QuadraticBilevel> make_quadratic_bilevel(std::uint64_t seed,
                                                         int d_x, int d_y,
                                                         double cond);

}  // namespace bilevel
