#pragma once

#include <cstddef>
#include <vector>

#include "bilevel/types.hpp"

namespace bilevel {

/// Row-compressed sparse matrix, the storage format for sample/feature data.
/// Column indices within a row are kept sorted.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  explicit SparseMatrix(std::size_t cols) : cols_(cols) {}

  static SparseMatrix from_dense(const Matrix& dense, double drop_tol = 0.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  /// Appends a row given (col, value) pairs; cols must be < cols().
  void push_row(const std::vector<std::pair<int, double>>& entries);
  /// Appends the rows of `other` (column counts must match).
  void append_rows(const SparseMatrix& other);
  /// Rows [begin, end) as a new matrix.
  SparseMatrix slice_rows(std::size_t begin, std::size_t end) const;

  double row_dot(std::size_t i, const Vector& y) const;
  /// out += scale * a_i
  void add_scaled_row(std::size_t i, double scale, Vector& out) const;
  /// out += scale * a_i a_i^T restricted to the upper triangle.
  void add_scaled_row_outer_upper(std::size_t i, double scale,
                                  Matrix& out) const;
  double row_squared_norm(std::size_t i) const;

  Matrix to_dense() const;
  Vector row_dense(std::size_t i) const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

}  // namespace bilevel
