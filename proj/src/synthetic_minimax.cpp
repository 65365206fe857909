#include "bilevel/synthetic_minimax.hpp"

#include <cmath>
#include <stdexcept>

namespace bilevel {

WEval w_piecewise(double x, double eps, double L) {
  if (!(eps > 0.0)) throw std::invalid_argument("w_piecewise: eps must be > 0");
  if (!(L >= 1.0)) throw std::invalid_argument("w_piecewise: L must be >= 1");
  const double se = std::sqrt(eps);
  const double e32 = eps * se;
  WEval out;
  if (x <= -L * se) {
    const double u = x + (L + 1.0) * se;
    out.value = se * u * u - u * u * u / 3.0 - (3.0 * L + 1.0) * e32 / 3.0;
    out.d1 = 2.0 * se * u - u * u;
    out.d2 = 2.0 * se - 2.0 * u;
  } else if (x <= -se) {
    out.value = eps * x + e32 / 3.0;
    out.d1 = eps;
    out.d2 = 0.0;
  } else if (x <= 0.0) {
    out.value = -se * x * x - x * x * x / 3.0;
    out.d1 = -2.0 * se * x - x * x;
    out.d2 = -2.0 * se - 2.0 * x;
  } else if (x <= se) {
    out.value = -se * x * x + x * x * x / 3.0;
    out.d1 = -2.0 * se * x + x * x;
    out.d2 = -2.0 * se + 2.0 * x;
  } else if (x <= L * se) {
    out.value = -eps * x + e32 / 3.0;
    out.d1 = -eps;
    out.d2 = 0.0;
  } else {
    const double u = x - (L + 1.0) * se;
    out.value = se * u * u + u * u * u / 3.0 - (3.0 * L + 1.0) * e32 / 3.0;
    out.d1 = 2.0 * se * u + u * u;
    out.d2 = 2.0 * se + 2.0 * u;
  }
  return out;
}

SyntheticMinimax::SyntheticMinimax(double eps, double L) : eps_(eps), L_(L) {
  if (!(eps > 0.0) || !(L >= 1.0))
    throw std::invalid_argument("SyntheticMinimax: need eps > 0, L >= 1");
  // |hess f| is dominated by the (x1, y1) coupling block [[0, 1], [1, -20]];
  // w'' stays small on the operating range |x3| <= (L+3) sqrt(eps).
  const double block_norm = (20.0 + std::sqrt(400.0 + 4.0)) / 2.0;
  params_.mu = 10.0;
  params_.ell = std::max(block_norm, 6.0 * std::sqrt(eps));
  params_.rho = 2.0;  // |w'''| = 2 on the cubic branches
  params_.nu = 0.0;
  params_.c_lip = params_.ell;
}

double SyntheticMinimax::f_val(const Vector& x, const Vector& y) const {
  return w_piecewise(x[2], eps_, L_).value - 10.0 * y[0] * y[0] +
         x[0] * y[0] - 5.0 * y[1] * y[1] + x[1] * y[1];
}

Vector SyntheticMinimax::grad_f_x(const Vector& x, const Vector& y) const {
  Vector g(3);
  g << y[0], y[1], w_piecewise(x[2], eps_, L_).d1;
  return g;
}

Vector SyntheticMinimax::grad_f_y(const Vector& x, const Vector& y) const {
  Vector g(2);
  g << -20.0 * y[0] + x[0], -10.0 * y[1] + x[1];
  return g;
}

Matrix SyntheticMinimax::hess_f_xx(const Vector& x, const Vector&) const {
  Matrix h = Matrix::Zero(3, 3);
  h(2, 2) = w_piecewise(x[2], eps_, L_).d2;
  return h;
}

Matrix SyntheticMinimax::hess_f_xy(const Vector&, const Vector&) const {
  Matrix h = Matrix::Zero(3, 2);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return h;
}

Matrix SyntheticMinimax::hess_f_yy(const Vector&, const Vector&) const {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = -20.0;
  h(1, 1) = -10.0;
  return h;
}

Vector SyntheticMinimax::y_star(const Vector& x) const {
  Vector y(2);
  y << x[0] / 20.0, x[1] / 10.0;
  return y;
}

double SyntheticMinimax::phi(const Vector& x) const {
  return w_piecewise(x[2], eps_, L_).value + x[0] * x[0] / 40.0 +
         x[1] * x[1] / 20.0;
}

Vector SyntheticMinimax::grad_phi(const Vector& x) const {
  Vector g(3);
  g << x[0] / 20.0, x[1] / 10.0, w_piecewise(x[2], eps_, L_).d1;
  return g;
}

Matrix SyntheticMinimax::hess_phi(const Vector& x) const {
  Matrix h = Matrix::Zero(3, 3);
  h(0, 0) = 1.0 / 20.0;
  h(1, 1) = 1.0 / 10.0;
  h(2, 2) = w_piecewise(x[2], eps_, L_).d2;
  return h;
}

GroundTruth SyntheticMinimax::ground_truth(const Vector& x) const {
  GroundTruth gt;
  gt.phi = phi(x);
  gt.grad_phi = grad_phi(x);
  const double w2 = w_piecewise(x[2], eps_, L_).d2;
  gt.hess_phi_min_eig = std::min({1.0 / 20.0, 1.0 / 10.0, w2});
  gt.xi = positive_part(-gt.hess_phi_min_eig);
  gt.y_star = y_star(x);
  return gt;
}

double SyntheticMinimax::phi_star() const {
  // global minimum at x1 = x2 = 0, x3 = +-(L+1) sqrt(eps)
  return -(3.0 * L_ + 1.0) * eps_ * std::sqrt(eps_) / 3.0;
}

std::unique_ptr<SyntheticMinimax> make_synthetic_minimax(double eps, double L) {
  return std::make_unique<SyntheticMinimax>(eps, L);
}

}  // namespace bilevel
