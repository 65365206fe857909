#include "bilevel/quadratic.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace bilevel {

namespace {
double sym_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}
}  // namespace

QuadraticBilevel::QuadraticBilevel(Matrix A, Matrix B, Matrix C, Matrix Q,
                                   Matrix P, Vector a, Vector b, Vector q)
    : A_(std::move(A)),
      B_(std::move(B)),
      C_(std::move(C)),
      Q_(std::move(Q)),
      P_(std::move(P)),
      a_(std::move(a)),
      b_(std::move(b)),
      q_(std::move(q)) {
  const Eigen::Index dx = A_.rows();
  const Eigen::Index dy = Q_.rows();
  if (A_.cols() != dx || B_.rows() != dx || B_.cols() != dy ||
      C_.rows() != dy || C_.cols() != dy || Q_.cols() != dy ||
      P_.rows() != dy || P_.cols() != dx || a_.size() != dx ||
      b_.size() != dy || q_.size() != dy)
    throw std::invalid_argument("QuadraticBilevel: dimension mismatch");

  S_ = -Q_.ldlt().solve(P_);
  s0_ = -Q_.ldlt().solve(q_);
  hess_phi_ = A_ + B_ * S_ + S_.transpose() * B_.transpose() +
              S_.transpose() * C_ * S_;
  hess_phi_ = 0.5 * (hess_phi_ + hess_phi_.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> esq(Q_, Eigen::EigenvaluesOnly);
  const double mu = esq.eigenvalues().minCoeff();
  if (mu <= 0.0)
    throw std::invalid_argument("QuadraticBilevel: Q must be positive definite");

  Matrix fh(dx + dy, dx + dy);
  fh << A_, B_, B_.transpose(), C_;
  Matrix gh(dx + dy, dx + dy);
  gh << Matrix::Zero(dx, dx), P_.transpose(), P_, Q_;
  const double ell = std::max(sym_norm(fh), sym_norm(gh));
  params_.mu = mu;
  params_.ell = ell;
  params_.rho = 0.0;
  params_.nu = 0.0;
  params_.c_lip = ell;  // nominal; keeps ell_bar = ell for this family
}

double QuadraticBilevel::f_val(const Vector& x, const Vector& y) const {
  return 0.5 * x.dot(A_ * x) + x.dot(B_ * y) + 0.5 * y.dot(C_ * y) +
         a_.dot(x) + b_.dot(y);
}
double QuadraticBilevel::g_val(const Vector& x, const Vector& y) const {
  return 0.5 * y.dot(Q_ * y) + y.dot(P_ * x) + q_.dot(y);
}
Vector QuadraticBilevel::grad_f_x(const Vector& x, const Vector& y) const {
  return A_ * x + B_ * y + a_;
}
Vector QuadraticBilevel::grad_f_y(const Vector& x, const Vector& y) const {
  return B_.transpose() * x + C_ * y + b_;
}
Vector QuadraticBilevel::grad_g_x(const Vector& x, const Vector& y) const {
  (void)x;
  return P_.transpose() * y;
}
Vector QuadraticBilevel::grad_g_y(const Vector& x, const Vector& y) const {
  return Q_ * y + P_ * x + q_;
}
Matrix QuadraticBilevel::hess_g_xx(const Vector&, const Vector&) const {
  return Matrix::Zero(dim_x(), dim_x());
}
Matrix QuadraticBilevel::hess_g_xy(const Vector&, const Vector&) const {
  return P_.transpose();
}

Vector QuadraticBilevel::hvp_f_xx(const Vector&, const Vector&, const Vector& v) const {
  return A_ * v;
}
Vector QuadraticBilevel::hvp_f_xy(const Vector&, const Vector&, const Vector& v) const {
  return B_ * v;
}
Vector QuadraticBilevel::hvp_f_yx(const Vector&, const Vector&, const Vector& v) const {
  return B_.transpose() * v;
}
Vector QuadraticBilevel::hvp_f_yy(const Vector&, const Vector&, const Vector& v) const {
  return C_ * v;
}
Vector QuadraticBilevel::hvp_g_xx(const Vector&, const Vector&, const Vector& v) const {
  return Vector::Zero(v.size());
}
Vector QuadraticBilevel::hvp_g_xy(const Vector&, const Vector&, const Vector& v) const {
  return P_.transpose() * v;
}
Vector QuadraticBilevel::hvp_g_yx(const Vector&, const Vector&, const Vector& v) const {
  return P_ * v;
}
Vector QuadraticBilevel::hvp_g_yy(const Vector&, const Vector&, const Vector& v) const {
  return Q_ * v;
}

Vector QuadraticBilevel::y_star(const Vector& x) const { return S_ * x + s0_; }

Vector QuadraticBilevel::y_star_lambda(double lambda, const Vector& x) const {
  const Matrix Hyy = C_ + lambda * Q_;
  const Vector rhs = (B_.transpose() + lambda * P_) * x + b_ + lambda * q_;
  return -Hyy.ldlt().solve(rhs);
}

double QuadraticBilevel::phi(const Vector& x) const {
  return f_val(x, y_star(x));
}

Vector QuadraticBilevel::grad_phi(const Vector& x) const {
  const Vector ys = y_star(x);
  return grad_f_x(x, ys) + S_.transpose() * grad_f_y(x, ys);
}

double QuadraticBilevel::lagrangian_value(double lambda, const Vector& x) const {
  const Vector yl = y_star_lambda(lambda, x);
  return f_val(x, yl) + lambda * (g_val(x, yl) - g_val(x, y_star(x)));
}

Vector QuadraticBilevel::lagrangian_grad(double lambda, const Vector& x) const {
  const Vector yl = y_star_lambda(lambda, x);
  const Vector ys = y_star(x);
  return grad_f_x(x, yl) + lambda * (grad_g_x(x, yl) - grad_g_x(x, ys));
}

Matrix QuadraticBilevel::lagrangian_hess(double lambda) const {
  const Matrix Lxy = B_ + lambda * P_.transpose();
  const Matrix Lyy = C_ + lambda * Q_;
  Matrix h = A_ - Lxy * Lyy.ldlt().solve(Lxy.transpose()) +
             lambda * P_.transpose() * Q_.ldlt().solve(P_);
  return 0.5 * (h + h.transpose());
}

Vector QuadraticBilevel::x_star() const {
  const Vector g0 = grad_phi(Vector::Zero(dim_x()));
  return -hess_phi_.ldlt().solve(g0);
}

double QuadraticBilevel::phi_star() const { return phi(x_star()); }

std::unique_ptr<QuadraticBilevel> make_quadratic_bilevel(std::uint64_t seed,
                                                         int d_x, int d_y,
                                                         double cond) {
  if (d_x < 1 || d_y < 1)
    throw std::invalid_argument("make_quadratic_bilevel: dimensions must be >= 1");
  if (cond < 1.0)
    throw std::invalid_argument("make_quadratic_bilevel: cond must be >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto randn_mat = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gauss(rng);
    return m;
  };
  auto randn_vec = [&](Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };
  auto random_orthogonal = [&](Eigen::Index n) {
    const Matrix g = randn_mat(n, n);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix Qm = qr.householderQ() * Matrix::Identity(n, n);
    return Qm;
  };

  // Q: eigenvalues log-uniform in [1, cond] with the endpoints pinned, so
  // mu = 1 and |Q| = cond exactly.
  Vector eigs(d_y);
  if (d_y == 1) {
    eigs[0] = 1.0;
  } else {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < d_y; ++i)
      eigs[i] = std::exp(unif(rng) * std::log(cond));
    eigs[0] = 1.0;
    eigs[d_y - 1] = cond;
  }
  const Matrix Vq = random_orthogonal(d_y);
  const Matrix Q = Vq * eigs.asDiagonal() * Vq.transpose();

  // Couplings scaled well below |Q| so the instance conditioning is driven by
  // cond and the generated hyper-objective stays benign.
  const double coupling = 0.25 * cond / std::sqrt(static_cast<double>(d_x * d_y));
  const Matrix P = coupling * randn_mat(d_y, d_x);
  const Matrix B = (0.25 / std::sqrt(static_cast<double>(d_x * d_y))) *
                   randn_mat(d_x, d_y);
  Matrix C0 = randn_mat(d_y, d_y);
  Matrix C = (0.25 / d_y) * (C0 * C0.transpose());  // PSD, modest norm

  Matrix A0 = randn_mat(d_x, d_x);
  Matrix A = (0.5 / d_x) * (A0 + A0.transpose());

  const Vector a = 0.5 * randn_vec(d_x);
  const Vector b = 0.5 * randn_vec(d_y);
  const Vector q = 0.5 * randn_vec(d_y);

  // Shift A so the (constant) hyper-Hessian is positive definite: a quadratic
  // hyper-objective with negative curvature is unbounded below and has no
  // stationary target to verify against.
  const Matrix S = -Q.ldlt().solve(P);
  Matrix hphi = A + B * S + S.transpose() * B.transpose() + S.transpose() * C * S;
  hphi = 0.5 * (hphi + hphi.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hphi, Eigen::EigenvaluesOnly);
  const double margin = 0.5;
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < margin)
    A += (margin - lmin) * Matrix::Identity(d_x, d_x);

  return std::make_unique<QuadraticBilevel>(A, B, C, Q, P, a, b, q);
}

}  // namespace bilevel
