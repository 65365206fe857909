#include "bilevel/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bilevel::kernels {

namespace {
Mode g_mode =
#ifdef _OPENMP
    Mode::Parallel;
#else
    Mode::Serial;
#endif
}  // namespace

Mode mode() { return g_mode; }
void set_mode(Mode m) { g_mode = m; }

int worker_blocks() {
#ifdef _OPENMP
  if (g_mode == Mode::Parallel) return omp_get_max_threads();
#endif
  return 1;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logistic_loss(double z, double b) {
  // log(1 + e^z) - b z, stable for large |z|
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z))
                                  : std::log1p(std::exp(z));
  return softplus - b * z;
}

// ---------------------------------------------------------------------------

void row_products_serial(const SparseMatrix& a, const Vector& y, Vector& z) {
  const std::size_t n = a.rows();
  z.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) z[static_cast<Eigen::Index>(i)] = a.row_dot(i, y);
}

void row_products_parallel(const SparseMatrix& a, const Vector& y, Vector& z) {
  const std::size_t n = a.rows();
  z.resize(static_cast<Eigen::Index>(n));
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    z[static_cast<Eigen::Index>(i)] = a.row_dot(static_cast<std::size_t>(i), y);
}

void row_products(const SparseMatrix& a, const Vector& y, Vector& z) {
  if (g_mode == Mode::Parallel)
    row_products_parallel(a, y, z);
  else
    row_products_serial(a, y, z);
}

// ---------------------------------------------------------------------------

void weighted_row_sum_serial(const SparseMatrix& a, const Vector& c,
                             Vector& out) {
  out = Vector::Zero(static_cast<Eigen::Index>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    a.add_scaled_row(i, c[static_cast<Eigen::Index>(i)], out);
}

void weighted_row_sum_parallel(const SparseMatrix& a, const Vector& c,
                               Vector& out) {
  const int nb = worker_blocks();
  const std::size_t n = a.rows();
  std::vector<Vector> partial(nb, Vector::Zero(static_cast<Eigen::Index>(a.cols())));
#pragma omp parallel num_threads(nb)
  {
#ifdef _OPENMP
    const int b = omp_get_thread_num();
#else
    const int b = 0;
#endif
    auto [lo, hi] = block_range(n, b, nb);
    for (std::size_t i = lo; i < hi; ++i)
      a.add_scaled_row(i, c[static_cast<Eigen::Index>(i)], partial[b]);
  }
  // fixed combine order keeps results reproducible for a given thread count
  out = Vector::Zero(static_cast<Eigen::Index>(a.cols()));
  for (int b = 0; b < nb; ++b) out += partial[b];
}

void weighted_row_sum(const SparseMatrix& a, const Vector& c, Vector& out) {
  if (g_mode == Mode::Parallel)
    weighted_row_sum_parallel(a, c, out);
  else
    weighted_row_sum_serial(a, c, out);
}

// ---------------------------------------------------------------------------

namespace {
void symmetrize_from_upper(Matrix& h) {
  for (Eigen::Index r = 0; r < h.rows(); ++r)
    for (Eigen::Index col = 0; col < r; ++col) h(r, col) = h(col, r);
}
}  // namespace

void weighted_gram_serial(const SparseMatrix& a, const Vector& c, Matrix& out) {
  const auto p = static_cast<Eigen::Index>(a.cols());
  out = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < a.rows(); ++i)
    a.add_scaled_row_outer_upper(i, c[static_cast<Eigen::Index>(i)], out);
  symmetrize_from_upper(out);
}

void weighted_gram_parallel(const SparseMatrix& a, const Vector& c,
                            Matrix& out) {
  const int nb = worker_blocks();
  const std::size_t n = a.rows();
  const auto p = static_cast<Eigen::Index>(a.cols());
  std::vector<Matrix> partial(nb, Matrix::Zero(p, p));
#pragma omp parallel num_threads(nb)
  {
#ifdef _OPENMP
    const int b = omp_get_thread_num();
#else
    const int b = 0;
#endif
    auto [lo, hi] = block_range(n, b, nb);
    for (std::size_t i = lo; i < hi; ++i)
      a.add_scaled_row_outer_upper(i, c[static_cast<Eigen::Index>(i)], partial[b]);
  }
  out = Matrix::Zero(p, p);
  for (int b = 0; b < nb; ++b) out += partial[b];
  symmetrize_from_upper(out);
}

void weighted_gram(const SparseMatrix& a, const Vector& c, Matrix& out) {
  if (g_mode == Mode::Parallel)
    weighted_gram_parallel(a, c, out);
  else
    weighted_gram_serial(a, c, out);
}

// ---------------------------------------------------------------------------

void logistic_moments_serial(const Vector& z, const Vector& b, const Vector& c,
                             double& loss, Vector& resid, Vector& curv) {
  const Eigen::Index n = z.size();
  resid.resize(n);
  curv.resize(n);
  loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = sigmoid(z[i]);
    loss += c[i] * logistic_loss(z[i], b[i]);
    resid[i] = c[i] * (s - b[i]);
    curv[i] = c[i] * s * (1.0 - s);
  }
}

void logistic_moments_parallel(const Vector& z, const Vector& b,
                               const Vector& c, double& loss, Vector& resid,
                               Vector& curv) {
  const Eigen::Index n = z.size();
  resid.resize(n);
  curv.resize(n);
  const int nb = worker_blocks();
  std::vector<double> partial(nb, 0.0);
#pragma omp parallel num_threads(nb)
  {
#ifdef _OPENMP
    const int bi = omp_get_thread_num();
#else
    const int bi = 0;
#endif
    auto [lo, hi] = block_range(static_cast<std::size_t>(n), bi, nb);
    double acc = 0.0;
    for (std::size_t u = lo; u < hi; ++u) {
      const auto i = static_cast<Eigen::Index>(u);
      const double s = sigmoid(z[i]);
      acc += c[i] * logistic_loss(z[i], b[i]);
      resid[i] = c[i] * (s - b[i]);
      curv[i] = c[i] * s * (1.0 - s);
    }
    partial[bi] = acc;
  }
  loss = 0.0;
  for (int bi = 0; bi < nb; ++bi) loss += partial[bi];
}

void logistic_moments(const Vector& z, const Vector& b, const Vector& c,
                      double& loss, Vector& resid, Vector& curv) {
  if (g_mode == Mode::Parallel)
    logistic_moments_parallel(z, b, c, loss, resid, curv);
  else
    logistic_moments_serial(z, b, c, loss, resid, curv);
}

}  // namespace bilevel::kernels
