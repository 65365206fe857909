#include "bilevel/oracles.hpp"

namespace bilevel {

Vector BilevelOracle::hvp_f_xx(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_f_xx(x, y) * v;
}
Vector BilevelOracle::hvp_f_xy(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_f_xy(x, y) * v;
}
Vector BilevelOracle::hvp_f_yx(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_f_xy(x, y).transpose() * v;
}
Vector BilevelOracle::hvp_f_yy(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_f_yy(x, y) * v;
}
Vector BilevelOracle::hvp_g_xx(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_g_xx(x, y) * v;
}
Vector BilevelOracle::hvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_g_xy(x, y) * v;
}
Vector BilevelOracle::hvp_g_yx(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_g_xy(x, y).transpose() * v;
}
Vector BilevelOracle::hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_g_yy(x, y) * v;
}

Vector MinimaxOracle::hvp_f_xx(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_f_xx(x, y) * v;
}
Vector MinimaxOracle::hvp_f_xy(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_f_xy(x, y) * v;
}
Vector MinimaxOracle::hvp_f_yx(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_f_xy(x, y).transpose() * v;
}
Vector MinimaxOracle::hvp_f_yy(const Vector& x, const Vector& y, const Vector& v) const {
  return hess_f_yy(x, y) * v;
}

// ---------------------------------------------------------------------------

Vector CountingBilevel::grad_f_x(const Vector& x, const Vector& y) const {
  c_.add_grad();
  return o_.grad_f_x(x, y);
}
Vector CountingBilevel::grad_f_y(const Vector& x, const Vector& y) const {
  c_.add_grad();
  return o_.grad_f_y(x, y);
}
Vector CountingBilevel::grad_g_x(const Vector& x, const Vector& y) const {
  c_.add_grad();
  return o_.grad_g_x(x, y);
}
Vector CountingBilevel::grad_g_y(const Vector& x, const Vector& y) const {
  c_.add_grad();
  return o_.grad_g_y(x, y);
}
Vector CountingBilevel::grad_L_y(const Vector& x, const Vector& y,
                                 double lambda) const {
  c_.add_grad(2);
  return o_.grad_f_y(x, y) + lambda * o_.grad_g_y(x, y);
}

Matrix CountingBilevel::hess_g_xx(const Vector& x, const Vector& y) const {
  c_.add_hess_block();
  return o_.hess_g_xx(x, y);
}
Matrix CountingBilevel::hess_g_xy(const Vector& x, const Vector& y) const {
  c_.add_hess_block();
  return o_.hess_g_xy(x, y);
}
Matrix CountingBilevel::hess_g_yy(const Vector& x, const Vector& y) const {
  c_.add_hess_block();
  return o_.hess_g_yy(x, y);
}
Matrix CountingBilevel::hess_L_xx(const Vector& x, const Vector& y,
                                  double lambda) const {
  c_.add_hess_block();
  return o_.hess_f_xx(x, y) + lambda * o_.hess_g_xx(x, y);
}
Matrix CountingBilevel::hess_L_xy(const Vector& x, const Vector& y,
                                  double lambda) const {
  c_.add_hess_block();
  return o_.hess_f_xy(x, y) + lambda * o_.hess_g_xy(x, y);
}
Matrix CountingBilevel::hess_L_yy(const Vector& x, const Vector& y,
                                  double lambda) const {
  c_.add_hess_block();
  return o_.hess_f_yy(x, y) + lambda * o_.hess_g_yy(x, y);
}

Vector CountingBilevel::hvp_g_xx(const Vector& x, const Vector& y, const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_g_xx(x, y, v);
}
Vector CountingBilevel::hvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_g_xy(x, y, v);
}
Vector CountingBilevel::hvp_g_yx(const Vector& x, const Vector& y, const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_g_yx(x, y, v);
}
Vector CountingBilevel::hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_g_yy(x, y, v);
}
Vector CountingBilevel::hvp_L_xx(const Vector& x, const Vector& y, double lambda,
                                 const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_f_xx(x, y, v) + lambda * o_.hvp_g_xx(x, y, v);
}
Vector CountingBilevel::hvp_L_xy(const Vector& x, const Vector& y, double lambda,
                                 const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_f_xy(x, y, v) + lambda * o_.hvp_g_xy(x, y, v);
}
Vector CountingBilevel::hvp_L_yx(const Vector& x, const Vector& y, double lambda,
                                 const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_f_yx(x, y, v) + lambda * o_.hvp_g_yx(x, y, v);
}
Vector CountingBilevel::hvp_L_yy(const Vector& x, const Vector& y, double lambda,
                                 const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_f_yy(x, y, v) + lambda * o_.hvp_g_yy(x, y, v);
}

// ---------------------------------------------------------------------------

Vector CountingMinimax::grad_f_x(const Vector& x, const Vector& y) const {
  c_.add_grad();
  return o_.grad_f_x(x, y);
}
Vector CountingMinimax::grad_f_y(const Vector& x, const Vector& y) const {
  c_.add_grad();
  return o_.grad_f_y(x, y);
}
Matrix CountingMinimax::hess_f_xx(const Vector& x, const Vector& y) const {
  c_.add_hess_block();
  return o_.hess_f_xx(x, y);
}
Matrix CountingMinimax::hess_f_xy(const Vector& x, const Vector& y) const {
  c_.add_hess_block();
  return o_.hess_f_xy(x, y);
}
Matrix CountingMinimax::hess_f_yy(const Vector& x, const Vector& y) const {
  c_.add_hess_block();
  return o_.hess_f_yy(x, y);
}
Vector CountingMinimax::hvp_f_yy(const Vector& x, const Vector& y, const Vector& v) const {
  c_.add_hvp();
  return o_.hvp_f_yy(x, y, v);
}

}  // namespace bilevel
