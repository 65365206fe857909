#pragma once

#include "bilevel/parallel.hpp"
#include "bilevel/sparse.hpp"
#include "bilevel/types.hpp"

namespace bilevel::kernels {

// Data-parallel per-sample kernels used by the data-driven problem oracles.
// Each kernel has a serial reference implementation and an OpenMP variant;
// the unsuffixed entry point dispatches on the current Mode. The parallel
// variants split rows into contiguous blocks and merge the per-block partial
// sums in block order.

/// z_i = <a_i, y> for every row.
void row_products_serial(const SparseMatrix& a, const Vector& y, Vector& z);
void row_products_parallel(const SparseMatrix& a, const Vector& y, Vector& z);
void row_products(const SparseMatrix& a, const Vector& y, Vector& z);

/// sum_i c_i * <a_i, y>-free weighted feature sum: out = sum_i c_i a_i.
void weighted_row_sum_serial(const SparseMatrix& a, const Vector& c,
                             Vector& out);
void weighted_row_sum_parallel(const SparseMatrix& a, const Vector& c,
                               Vector& out);
void weighted_row_sum(const SparseMatrix& a, const Vector& c, Vector& out);

/// out = sum_i c_i a_i a_i^T (full symmetric matrix).
void weighted_gram_serial(const SparseMatrix& a, const Vector& c, Matrix& out);
void weighted_gram_parallel(const SparseMatrix& a, const Vector& c,
                            Matrix& out);
void weighted_gram(const SparseMatrix& a, const Vector& c, Matrix& out);

/// Logistic primitives.
double sigmoid(double t);
/// log(1 + exp(z)) - b*z, evaluated overflow-safely.
double logistic_loss(double z, double b);

/// Fused per-sample logistic reduction: given logits z_i, labels b_i and
/// sample weights c_i, returns
///   loss    = sum_i c_i * logistic_loss(z_i, b_i)
///   resid_i = c_i * (sigmoid(z_i) - b_i)
///   curv_i  = c_i * sigmoid'(z_i)
void logistic_moments_serial(const Vector& z, const Vector& b, const Vector& c,
                             double& loss, Vector& resid, Vector& curv);
void logistic_moments_parallel(const Vector& z, const Vector& b,
                               const Vector& c, double& loss, Vector& resid,
                               Vector& curv);
void logistic_moments(const Vector& z, const Vector& b, const Vector& c,
                      double& loss, Vector& resid, Vector& curv);

}  // namespace bilevel::kernels
