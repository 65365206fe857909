#include "bilevel/hypercleaning.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bilevel/ground_truth.hpp"
#include "bilevel/kernels.hpp"

namespace bilevel {

namespace {

using kernels::logistic_loss;
using kernels::sigmoid;

double sigmoid_d1(double t) {
  const double s = sigmoid(t);
  return s * (1.0 - s);
}
double sigmoid_d2(double t) {
  const double s = sigmoid(t);
  return s * (1.0 - s) * (1.0 - 2.0 * s);
}

double gram_max_eig(const SparseMatrix& a) {
  Matrix gram;
  kernels::weighted_gram(
      a, Vector::Constant(static_cast<Eigen::Index>(a.rows()), 1.0), gram);
  gram /= static_cast<double>(a.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

HypercleaningProblem::HypercleaningProblem(SparseMatrix train_features,
                                           Vector train_labels,
                                           SparseMatrix val_features,
                                           Vector val_labels, double noise_rate,
                                           double c, std::uint64_t seed)
    : train_(std::move(train_features)),
      val_(std::move(val_features)),
      tr_labels_(std::move(train_labels)),
      val_labels_(std::move(val_labels)),
      c_(c) {
  if (noise_rate < 0.0 || noise_rate >= 1.0)
    throw std::invalid_argument("hypercleaning: noise rate must be in [0, 1)");
  if (!(c > 0.0))
    throw std::invalid_argument("hypercleaning: ridge weight must be positive");
  if (train_.rows() < 2 || val_.rows() < 2)
    throw std::invalid_argument("hypercleaning: need at least 2 samples per split");
  if (train_.cols() != val_.cols())
    throw std::invalid_argument("hypercleaning: train/val feature dim mismatch");

  clean_labels_ = tr_labels_;
  const auto n = static_cast<int>(train_.rows());
  const int n_flip = static_cast<int>(std::floor(noise_rate * n));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::shuffle(idx.begin(), idx.end(), rng);
  flipped_.assign(idx.begin(), idx.begin() + n_flip);
  std::sort(flipped_.begin(), flipped_.end());
  for (int i : flipped_) tr_labels_[i] = 1.0 - tr_labels_[i];

  // Smoothness estimates from the data (reference region; exact worst-case
  // constants for logistic objectives are unbounded in |y|).
  const double gm_tr = gram_max_eig(train_);
  const double gm_val = gram_max_eig(val_);
  double mean_cube = 0.0;
  for (std::size_t i = 0; i < train_.rows(); ++i)
    mean_cube += std::pow(train_.row_squared_norm(i), 1.5);
  mean_cube /= static_cast<double>(train_.rows());

  params_.mu = 2.0 * c_;
  params_.ell = std::max({0.25 * gm_tr + 2.0 * c_, 0.25 * gm_val, 1.0});
  params_.rho = std::max(0.1 * mean_cube, 0.25);
  params_.nu = params_.rho;
  params_.c_lip = params_.ell;
}

double HypercleaningProblem::f_val(const Vector&, const Vector& y) const {
  Vector z, resid, curv;
  kernels::row_products(val_, y, z);
  double loss = 0.0;
  const auto nv = static_cast<Eigen::Index>(val_.rows());
  kernels::logistic_moments(z, val_labels_, Vector::Constant(nv, 1.0 / nv),
                            loss, resid, curv);
  return loss;
}

double HypercleaningProblem::g_val(const Vector& x, const Vector& y) const {
  Vector z;
  kernels::row_products(train_, y, z);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Vector weights(n);
  for (Eigen::Index i = 0; i < n; ++i) weights[i] = sigmoid(x[i]) / n;
  Vector resid, curv;
  double loss = 0.0;
  kernels::logistic_moments(z, tr_labels_, weights, loss, resid, curv);
  return loss + c_ * y.squaredNorm();
}

Vector HypercleaningProblem::grad_f_x(const Vector&, const Vector&) const {
  return Vector::Zero(dim_x());
}

Vector HypercleaningProblem::grad_f_y(const Vector&, const Vector& y) const {
  Vector z, resid, curv;
  kernels::row_products(val_, y, z);
  const auto nv = static_cast<Eigen::Index>(val_.rows());
  double loss = 0.0;
  kernels::logistic_moments(z, val_labels_, Vector::Constant(nv, 1.0 / nv),
                            loss, resid, curv);
  Vector g;
  kernels::weighted_row_sum(val_, resid, g);
  return g;
}

Vector HypercleaningProblem::grad_g_x(const Vector& x, const Vector& y) const {
  Vector z;
  kernels::row_products(train_, y, z);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i)
    g[i] = sigmoid_d1(x[i]) * logistic_loss(z[i], tr_labels_[i]) / n;
  return g;
}

Vector HypercleaningProblem::grad_g_y(const Vector& x, const Vector& y) const {
  Vector z;
  kernels::row_products(train_, y, z);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Vector weights(n);
  for (Eigen::Index i = 0; i < n; ++i) weights[i] = sigmoid(x[i]) / n;
  Vector resid, curv;
  double loss = 0.0;
  kernels::logistic_moments(z, tr_labels_, weights, loss, resid, curv);
  Vector g;
  kernels::weighted_row_sum(train_, resid, g);
  return g + 2.0 * c_ * y;
}

Matrix HypercleaningProblem::hess_f_xx(const Vector&, const Vector&) const {
  return Matrix::Zero(dim_x(), dim_x());
}
Matrix HypercleaningProblem::hess_f_xy(const Vector&, const Vector&) const {
  return Matrix::Zero(dim_x(), dim_y());
}

Matrix HypercleaningProblem::hess_f_yy(const Vector&, const Vector& y) const {
  Vector z, resid, curv;
  kernels::row_products(val_, y, z);
  const auto nv = static_cast<Eigen::Index>(val_.rows());
  double loss = 0.0;
  kernels::logistic_moments(z, val_labels_, Vector::Constant(nv, 1.0 / nv),
                            loss, resid, curv);
  Matrix h;
  kernels::weighted_gram(val_, curv, h);
  return h;
}

Matrix HypercleaningProblem::hess_g_xx(const Vector& x, const Vector& y) const {
  Vector z;
  kernels::row_products(train_, y, z);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Matrix h = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    h(i, i) = sigmoid_d2(x[i]) * logistic_loss(z[i], tr_labels_[i]) / n;
  return h;
}

Matrix HypercleaningProblem::hess_g_xy(const Vector& x, const Vector& y) const {
  Vector z;
  kernels::row_products(train_, y, z);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Matrix h = Matrix::Zero(n, dim_y());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale =
        sigmoid_d1(x[i]) * (sigmoid(z[i]) - tr_labels_[i]) / n;
    Vector row = Vector::Zero(dim_y());
    train_.add_scaled_row(static_cast<std::size_t>(i), scale, row);
    h.row(i) = row.transpose();
  }
  return h;
}

Matrix HypercleaningProblem::hess_g_yy(const Vector& x, const Vector& y) const {
  Vector z;
  kernels::row_products(train_, y, z);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Vector weights(n);
  for (Eigen::Index i = 0; i < n; ++i)
    weights[i] = sigmoid(x[i]) * sigmoid_d1(z[i]) / n;
  Matrix h;
  kernels::weighted_gram(train_, weights, h);
  h += 2.0 * c_ * Matrix::Identity(dim_y(), dim_y());
  return h;
}

Vector HypercleaningProblem::hvp_f_yy(const Vector&, const Vector& y,
                                      const Vector& v) const {
  Vector z, zv;
  kernels::row_products(val_, y, z);
  kernels::row_products(val_, v, zv);
  const auto nv = static_cast<Eigen::Index>(val_.rows());
  Vector coeff(nv);
  for (Eigen::Index i = 0; i < nv; ++i)
    coeff[i] = sigmoid_d1(z[i]) * zv[i] / nv;
  Vector out;
  kernels::weighted_row_sum(val_, coeff, out);
  return out;
}

Vector HypercleaningProblem::hvp_g_xx(const Vector& x, const Vector& y,
                                      const Vector& v) const {
  Vector z;
  kernels::row_products(train_, y, z);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = sigmoid_d2(x[i]) * logistic_loss(z[i], tr_labels_[i]) * v[i] / n;
  return out;
}

Vector HypercleaningProblem::hvp_g_xy(const Vector& x, const Vector& y,
                                      const Vector& v) const {
  Vector z, zv;
  kernels::row_products(train_, y, z);
  kernels::row_products(train_, v, zv);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = sigmoid_d1(x[i]) * (sigmoid(z[i]) - tr_labels_[i]) * zv[i] / n;
  return out;
}

Vector HypercleaningProblem::hvp_g_yx(const Vector& x, const Vector& y,
                                      const Vector& v) const {
  Vector z;
  kernels::row_products(train_, y, z);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Vector coeff(n);
  for (Eigen::Index i = 0; i < n; ++i)
    coeff[i] = sigmoid_d1(x[i]) * (sigmoid(z[i]) - tr_labels_[i]) * v[i] / n;
  Vector out;
  kernels::weighted_row_sum(train_, coeff, out);
  return out;
}

Vector HypercleaningProblem::hvp_g_yy(const Vector& x, const Vector& y,
                                      const Vector& v) const {
  Vector z, zv;
  kernels::row_products(train_, y, z);
  kernels::row_products(train_, v, zv);
  const auto n = static_cast<Eigen::Index>(train_.rows());
  Vector coeff(n);
  for (Eigen::Index i = 0; i < n; ++i)
    coeff[i] = sigmoid(x[i]) * sigmoid_d1(z[i]) * zv[i] / n;
  Vector out;
  kernels::weighted_row_sum(train_, coeff, out);
  return out + 2.0 * c_ * v;
}

double HypercleaningProblem::flip_auc(const Vector& x) const {
  std::vector<char> is_flipped(train_.rows(), 0);
  for (int i : flipped_) is_flipped[i] = 1;
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < train_.rows(); ++i) {
    if (is_flipped[i]) continue;
    for (std::size_t j = 0; j < train_.rows(); ++j) {
      if (!is_flipped[j]) continue;
      ++pairs;
      const double xi = x[static_cast<Eigen::Index>(i)];
      const double xj = x[static_cast<Eigen::Index>(j)];
      if (xi > xj)
        wins += 1.0;
      else if (xi == xj)
        wins += 0.5;
    }
  }
  return pairs > 0 ? wins / static_cast<double>(pairs) : 0.5;
}

std::unique_ptr<HypercleaningProblem> make_hypercleaning(
    const SparseMatrix& features, const Vector& labels, double val_split,
    double noise_rate, double c, std::uint64_t seed) {
  if (val_split <= 0.0 || val_split >= 1.0)
    throw std::invalid_argument("hypercleaning: val_split must be in (0, 1)");
  const auto n = features.rows();
  const auto n_val = static_cast<std::size_t>(std::round(val_split * n));
  if (n_val < 2 || n - n_val < 2)
    throw std::invalid_argument("hypercleaning: empty or degenerate split");
  const std::size_t n_tr = n - n_val;
  SparseMatrix tr = features.slice_rows(0, n_tr);
  SparseMatrix va = features.slice_rows(n_tr, n);
  Vector trl = labels.head(static_cast<Eigen::Index>(n_tr));
  Vector val = labels.tail(static_cast<Eigen::Index>(n_val));
  return std::make_unique<HypercleaningProblem>(std::move(tr), std::move(trl),
                                                std::move(va), std::move(val),
                                                noise_rate, c, seed);
}

void make_synthetic_logistic_data(std::uint64_t seed, int n, int n_features,
                                  SparseMatrix& features, Vector& labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector y_true(n_features);
  for (int j = 0; j < n_features; ++j)
    y_true[j] = 2.0 * gauss(rng) / std::sqrt(static_cast<double>(n_features));
  features = SparseMatrix(static_cast<std::size_t>(n_features));
  labels.resize(n);
  std::vector<std::pair<int, double>> row(n_features);
  for (int i = 0; i < n; ++i) {
    double z = 0.0;
    for (int j = 0; j < n_features; ++j) {
      const double v = gauss(rng);
      row[j] = {j, v};
      z += v * y_true[j];
    }
    features.push_row(row);
    labels[i] = unif(rng) < sigmoid(z) ? 1.0 : 0.0;
  }
}

double ridge_baseline_val_loss(const HypercleaningProblem& prob,
                               double inner_tol) {
  const Vector x_unit = Vector::Constant(prob.dim_x(), 20.0);
  const SmoothnessParams p = prob.smoothness();
  auto grad = [&](const Vector& y) { return prob.grad_g_y(x_unit, y); };
  const Vector y_hat = solve_strongly_convex(grad, Vector::Zero(prob.dim_y()),
                                             p.mu, p.ell, inner_tol);
  return prob.f_val(x_unit, y_hat);
}

}  // namespace bilevel
