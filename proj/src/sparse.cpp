#include "bilevel/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bilevel {

SparseMatrix SparseMatrix::from_dense(const Matrix& dense, double drop_tol) {
  SparseMatrix m(static_cast<std::size_t>(dense.cols()));
  std::vector<std::pair<int, double>> row;
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < dense.cols(); ++j)
      if (std::abs(dense(i, j)) > drop_tol)
        row.emplace_back(static_cast<int>(j), dense(i, j));
    m.push_row(row);
  }
  return m;
}

void SparseMatrix::push_row(const std::vector<std::pair<int, double>>& entries) {
  std::vector<std::pair<int, double>> sorted = entries;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [j, v] : sorted) {
    if (j < 0 || static_cast<std::size_t>(j) >= cols_)
      throw std::out_of_range("SparseMatrix: column index out of range");
    col_idx_.push_back(j);
    values_.push_back(v);
  }
  ++rows_;
  row_ptr_.push_back(values_.size());
}

void SparseMatrix::append_rows(const SparseMatrix& other) {
  if (other.cols_ != cols_)
    throw std::invalid_argument("SparseMatrix: column mismatch in append_rows");
  for (std::size_t i = 0; i < other.rows_; ++i) {
    for (std::size_t k = other.row_ptr_[i]; k < other.row_ptr_[i + 1]; ++k) {
      col_idx_.push_back(other.col_idx_[k]);
      values_.push_back(other.values_[k]);
    }
    ++rows_;
    row_ptr_.push_back(values_.size());
  }
}

SparseMatrix SparseMatrix::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_)
    throw std::out_of_range("SparseMatrix: bad row slice");
  SparseMatrix out(cols_);
  for (std::size_t i = begin; i < end; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      out.col_idx_.push_back(col_idx_[k]);
      out.values_.push_back(values_[k]);
    }
    ++out.rows_;
    out.row_ptr_.push_back(out.values_.size());
  }
  return out;
}

double SparseMatrix::row_dot(std::size_t i, const Vector& y) const {
  double acc = 0.0;
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    acc += values_[k] * y[col_idx_[k]];
  return acc;
}

void SparseMatrix::add_scaled_row(std::size_t i, double scale,
                                  Vector& out) const {
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    out[col_idx_[k]] += scale * values_[k];
}

void SparseMatrix::add_scaled_row_outer_upper(std::size_t i, double scale,
                                              Matrix& out) const {
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
    const double vk = scale * values_[k];
    for (std::size_t l = k; l < row_ptr_[i + 1]; ++l)
      out(col_idx_[k], col_idx_[l]) += vk * values_[l];
  }
}

double SparseMatrix::row_squared_norm(std::size_t i) const {
  double acc = 0.0;
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    acc += values_[k] * values_[k];
  return acc;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(rows_),
                          static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      d(static_cast<Eigen::Index>(i), col_idx_[k]) = values_[k];
  return d;
}

Vector SparseMatrix::row_dense(std::size_t i) const {
  Vector r = Vector::Zero(static_cast<Eigen::Index>(cols_));
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    r[col_idx_[k]] = values_[k];
  return r;
}

}  // namespace bilevel
