#include "bilevel/exp_ridge.hpp"

#include <cmath>
#include <random>

namespace bilevel {

namespace {
// softmax probabilities of the c logits u, overflow-safe
Vector softmax(const Vector& u) {
  const double m = u.maxCoeff();
  Vector p = (u.array() - m).exp();
  return p / p.sum();
}
double logsumexp(const Vector& u) {
  const double m = u.maxCoeff();
  return m + std::log((u.array() - m).exp().sum());
}
}  // namespace

ExpRidgeTuning::ExpRidgeTuning(SparseMatrix train_features,
                               std::vector<int> train_labels,
                               SparseMatrix val_features,
                               std::vector<int> val_labels, int n_classes)
    : train_(std::move(train_features)),
      val_(std::move(val_features)),
      tr_labels_(std::move(train_labels)),
      val_labels_(std::move(val_labels)),
      n_classes_(n_classes) {
  if (n_classes_ < 2)
    throw std::invalid_argument("exp_ridge: need at least 2 classes");
  if (train_.cols() < 1)
    throw std::invalid_argument("exp_ridge: need at least 1 feature");
  if (train_.rows() < 2 || val_.rows() < 2)
    throw std::invalid_argument("exp_ridge: degenerate dataset");
  if (tr_labels_.size() != train_.rows() || val_labels_.size() != val_.rows())
    throw std::invalid_argument("exp_ridge: label count mismatch");
  for (int b : tr_labels_)
    if (b < 0 || b >= n_classes_)
      throw std::invalid_argument("exp_ridge: label out of range");
  for (int b : val_labels_)
    if (b < 0 || b >= n_classes_)
      throw std::invalid_argument("exp_ridge: label out of range");

  const double cp = static_cast<double>(n_classes_) * train_.cols();
  double gram = 0.0;
  for (std::size_t i = 0; i < train_.rows(); ++i)
    gram = std::max(gram, train_.row_squared_norm(i));
  // reference box |x_k| <= 1 for the x-dependent regularizer curvature
  params_.mu = std::exp(-1.0) / cp;
  params_.ell = std::max(0.5 * gram + std::exp(1.0) / cp, 1.0);
  params_.rho = std::max(0.5 * std::pow(gram, 1.5), std::exp(1.0) / cp);
  params_.nu = params_.rho;
  params_.c_lip = params_.ell;
}

double ExpRidgeTuning::ce_value(const SparseMatrix& a,
                                const std::vector<int>& lab,
                                const Vector& y) const {
  const int p = n_features();
  double total = 0.0;
  Vector u(n_classes_);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < n_classes_; ++j)
      u[j] = a.row_dot(i, y.segment(static_cast<Eigen::Index>(j) * p, p));
    total += logsumexp(u) - u[lab[i]];
  }
  return total / static_cast<double>(a.rows());
}

Vector ExpRidgeTuning::ce_grad(const SparseMatrix& a,
                               const std::vector<int>& lab,
                               const Vector& y) const {
  const int p = n_features();
  Vector g = Vector::Zero(dim_y());
  Vector u(n_classes_);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < n_classes_; ++j)
      u[j] = a.row_dot(i, y.segment(static_cast<Eigen::Index>(j) * p, p));
    Vector pi = softmax(u);
    for (int j = 0; j < n_classes_; ++j) {
      const double coef = pi[j] - (j == lab[i] ? 1.0 : 0.0);
      Vector seg = Vector::Zero(p);
      a.add_scaled_row(i, coef, seg);
      g.segment(static_cast<Eigen::Index>(j) * p, p) += seg;
    }
  }
  return g / static_cast<double>(a.rows());
}

Matrix ExpRidgeTuning::ce_hess(const SparseMatrix& a,
                               const std::vector<int>& lab,
                               const Vector& y) const {
  (void)lab;
  const int p = n_features();
  Matrix h = Matrix::Zero(dim_y(), dim_y());
  Vector u(n_classes_);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < n_classes_; ++j)
      u[j] = a.row_dot(i, y.segment(static_cast<Eigen::Index>(j) * p, p));
    Vector pi = softmax(u);
    const Vector ai = a.row_dense(i);
    const Matrix outer = ai * ai.transpose();
    for (int j = 0; j < n_classes_; ++j)
      for (int j2 = 0; j2 < n_classes_; ++j2) {
        const double coef = pi[j] * ((j == j2 ? 1.0 : 0.0) - pi[j2]);
        h.block(static_cast<Eigen::Index>(j) * p,
                static_cast<Eigen::Index>(j2) * p, p, p) += coef * outer;
      }
  }
  return h / static_cast<double>(a.rows());
}

double ExpRidgeTuning::f_val(const Vector&, const Vector& y) const {
  return ce_value(val_, val_labels_, y);
}

double ExpRidgeTuning::g_val(const Vector& x, const Vector& y) const {
  const int p = n_features();
  const double cp = static_cast<double>(n_classes_) * p;
  double reg = 0.0;
  for (int j = 0; j < n_classes_; ++j)
    for (int k = 0; k < p; ++k) {
      const double yjk = y[static_cast<Eigen::Index>(j) * p + k];
      reg += std::exp(x[k]) * yjk * yjk;
    }
  return ce_value(train_, tr_labels_, y) + reg / (2.0 * cp);
}

Vector ExpRidgeTuning::grad_f_x(const Vector&, const Vector&) const {
  return Vector::Zero(dim_x());
}

Vector ExpRidgeTuning::grad_f_y(const Vector&, const Vector& y) const {
  return ce_grad(val_, val_labels_, y);
}

Vector ExpRidgeTuning::grad_g_x(const Vector& x, const Vector& y) const {
  const int p = n_features();
  const double cp = static_cast<double>(n_classes_) * p;
  Vector g = Vector::Zero(p);
  for (int k = 0; k < p; ++k) {
    double sq = 0.0;
    for (int j = 0; j < n_classes_; ++j) {
      const double yjk = y[static_cast<Eigen::Index>(j) * p + k];
      sq += yjk * yjk;
    }
    g[k] = std::exp(x[k]) * sq / (2.0 * cp);
  }
  return g;
}

Vector ExpRidgeTuning::grad_g_y(const Vector& x, const Vector& y) const {
  const int p = n_features();
  const double cp = static_cast<double>(n_classes_) * p;
  Vector g = ce_grad(train_, tr_labels_, y);
  for (int j = 0; j < n_classes_; ++j)
    for (int k = 0; k < p; ++k) {
      const Eigen::Index jk = static_cast<Eigen::Index>(j) * p + k;
      g[jk] += std::exp(x[k]) * y[jk] / cp;
    }
  return g;
}

Matrix ExpRidgeTuning::hess_f_xx(const Vector&, const Vector&) const {
  return Matrix::Zero(dim_x(), dim_x());
}
Matrix ExpRidgeTuning::hess_f_xy(const Vector&, const Vector&) const {
  return Matrix::Zero(dim_x(), dim_y());
}
Matrix ExpRidgeTuning::hess_f_yy(const Vector&, const Vector& y) const {
  return ce_hess(val_, val_labels_, y);
}

Matrix ExpRidgeTuning::hess_g_xx(const Vector& x, const Vector& y) const {
  const int p = n_features();
  const double cp = static_cast<double>(n_classes_) * p;
  Matrix h = Matrix::Zero(p, p);
  for (int k = 0; k < p; ++k) {
    double sq = 0.0;
    for (int j = 0; j < n_classes_; ++j) {
      const double yjk = y[static_cast<Eigen::Index>(j) * p + k];
      sq += yjk * yjk;
    }
    h(k, k) = std::exp(x[k]) * sq / (2.0 * cp);
  }
  return h;
}

Matrix ExpRidgeTuning::hess_g_xy(const Vector& x, const Vector& y) const {
  const int p = n_features();
  const double cp = static_cast<double>(n_classes_) * p;
  Matrix h = Matrix::Zero(p, dim_y());
  for (int k = 0; k < p; ++k)
    for (int j = 0; j < n_classes_; ++j) {
      const Eigen::Index jk = static_cast<Eigen::Index>(j) * p + k;
      h(k, jk) = std::exp(x[k]) * y[jk] / cp;
    }
  return h;
}

Matrix ExpRidgeTuning::hess_g_yy(const Vector& x, const Vector& y) const {
  const int p = n_features();
  const double cp = static_cast<double>(n_classes_) * p;
  Matrix h = ce_hess(train_, tr_labels_, y);
  for (int j = 0; j < n_classes_; ++j)
    for (int k = 0; k < p; ++k) {
      const Eigen::Index jk = static_cast<Eigen::Index>(j) * p + k;
      h(jk, jk) += std::exp(x[k]) / cp;
    }
  return h;
}

std::unique_ptr<ExpRidgeTuning> make_exp_ridge_tuning(std::uint64_t seed,
                                                      int n_train, int n_val,
                                                      int n_features,
                                                      int n_classes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix W(n_classes, n_features);
  for (int j = 0; j < n_classes; ++j)
    for (int k = 0; k < n_features; ++k) W(j, k) = gauss(rng);
  auto gen = [&](int n, SparseMatrix& a, std::vector<int>& lab) {
    a = SparseMatrix(static_cast<std::size_t>(n_features));
    lab.resize(n);
    std::vector<std::pair<int, double>> row(n_features);
    Vector ai(n_features);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n_features; ++k) {
        ai[k] = gauss(rng);
        row[k] = {k, ai[k]};
      }
      a.push_row(row);
      Vector u = W * ai;
      Vector p = softmax(u);
      double r = unif(rng);
      int cls = 0;
      double acc = 0.0;
      for (int j = 0; j < n_classes; ++j) {
        acc += p[j];
        if (r <= acc) {
          cls = j;
          break;
        }
        cls = j;
      }
      lab[i] = cls;
    }
  };
  SparseMatrix tr, va;
  std::vector<int> trl, val;
  gen(n_train, tr, trl);
  gen(n_val, va, val);
  return std::make_unique<ExpRidgeTuning>(std::move(tr), std::move(trl),
                                          std::move(va), std::move(val),
                                          n_classes);
}

}  // namespace bilevel
