#pragma once

#include "bilevel/telemetry.hpp"
#include "bilevel/types.hpp"

namespace bilevel {

/// Oracle bundle for the bilevel problem
///   min_x f(x, y*(x))  s.t.  y*(x) = argmin_y g(x, y),
/// with g mu-strongly convex in y.  Implementations are immutable after
/// construction and safe to share read-only across threads; every evaluation
/// is a pure function of its arguments.
///
/// Block orientation: hess_*_xy is d_x x d_y (the yx block is its transpose).
/// The hvp_*_xy variants take a y-space vector and return an x-space vector;
/// hvp_*_yx the reverse.
class BilevelOracle {
 public:
  virtual ~BilevelOracle() = default;

  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;
  virtual SmoothnessParams smoothness() const = 0;

  virtual double f_val(const Vector& x, const Vector& y) const = 0;
  virtual double g_val(const Vector& x, const Vector& y) const = 0;

  virtual Vector grad_f_x(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_f_y(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_g_x(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_g_y(const Vector& x, const Vector& y) const = 0;

  virtual Matrix hess_f_xx(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_f_xy(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_f_yy(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_g_xx(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_g_xy(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_g_yy(const Vector& x, const Vector& y) const = 0;

  // Matrix-free products. Defaults fall back to the dense blocks; the
  // concrete families override with O(nnz) implementations.
  virtual Vector hvp_f_xx(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_f_xy(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_f_yx(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_f_yy(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_g_xx(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_g_yx(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const;
};

/// Oracle bundle for min_x max_y f(x, y) with f mu-strongly concave in y.
class MinimaxOracle {
 public:
  virtual ~MinimaxOracle() = default;

  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;
  virtual SmoothnessParams smoothness() const = 0;

  virtual double f_val(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_f_x(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_f_y(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_f_xx(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_f_xy(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_f_yy(const Vector& x, const Vector& y) const = 0;

  virtual Vector hvp_f_xx(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_f_xy(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_f_yx(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Vector hvp_f_yy(const Vector& x, const Vector& y, const Vector& v) const;
};

/// Counting view over a BilevelOracle.  All estimator and solver code goes
/// through this wrapper so the cost model lives in one place.  Lagrangian
/// accessors evaluate blocks of f + lambda*g in a single pass and charge one
/// block (or HVP) accordingly.
class CountingBilevel {
 public:
  CountingBilevel(const BilevelOracle& o, const OracleCounter& c)
      : o_(o), c_(c) {}

  const BilevelOracle& raw() const { return o_; }
  const OracleCounter& counter() const { return c_; }
  int dim_x() const { return o_.dim_x(); }
  int dim_y() const { return o_.dim_y(); }

  // First-order oracle, unit cost each.
  Vector grad_f_x(const Vector& x, const Vector& y) const;
  Vector grad_f_y(const Vector& x, const Vector& y) const;
  Vector grad_g_x(const Vector& x, const Vector& y) const;
  Vector grad_g_y(const Vector& x, const Vector& y) const;
  /// grad_y of f + lambda*g; two unit costs (one f, one g gradient).
  Vector grad_L_y(const Vector& x, const Vector& y, double lambda) const;

  // Dense second-order blocks, one block cost each.
  Matrix hess_g_xx(const Vector& x, const Vector& y) const;
  Matrix hess_g_xy(const Vector& x, const Vector& y) const;
  Matrix hess_g_yy(const Vector& x, const Vector& y) const;
  Matrix hess_L_xx(const Vector& x, const Vector& y, double lambda) const;
  Matrix hess_L_xy(const Vector& x, const Vector& y, double lambda) const;
  Matrix hess_L_yy(const Vector& x, const Vector& y, double lambda) const;

  // HVPs, unit cost each.
  Vector hvp_g_xx(const Vector& x, const Vector& y, const Vector& v) const;
  Vector hvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const;
  Vector hvp_g_yx(const Vector& x, const Vector& y, const Vector& v) const;
  Vector hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const;
  Vector hvp_L_xx(const Vector& x, const Vector& y, double lambda, const Vector& v) const;
  Vector hvp_L_xy(const Vector& x, const Vector& y, double lambda, const Vector& v) const;
  Vector hvp_L_yx(const Vector& x, const Vector& y, double lambda, const Vector& v) const;
  Vector hvp_L_yy(const Vector& x, const Vector& y, double lambda, const Vector& v) const;

 private:
  const BilevelOracle& o_;
  const OracleCounter& c_;
};

/// Counting view over a MinimaxOracle.
class CountingMinimax {
 public:
  CountingMinimax(const MinimaxOracle& o, const OracleCounter& c)
      : o_(o), c_(c) {}

  const MinimaxOracle& raw() const { return o_; }
  const OracleCounter& counter() const { return c_; }
  int dim_x() const { return o_.dim_x(); }
  int dim_y() const { return o_.dim_y(); }

  Vector grad_f_x(const Vector& x, const Vector& y) const;
  Vector grad_f_y(const Vector& x, const Vector& y) const;
  Matrix hess_f_xx(const Vector& x, const Vector& y) const;
  Matrix hess_f_xy(const Vector& x, const Vector& y) const;
  Matrix hess_f_yy(const Vector& x, const Vector& y) const;
  Vector hvp_f_yy(const Vector& x, const Vector& y, const Vector& v) const;

 private:
  const MinimaxOracle& o_;
  const OracleCounter& c_;
};

}  // namespace bilevel
