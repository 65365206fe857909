#pragma once

#include <cstdint>
#include <memory>

#include "bilevel/oracles.hpp"
#include "bilevel/sparse.hpp"

namespace bilevel {

/// Hyperparameter tuning with a per-coordinate exponential ridge:
///   f(x, y) = (1/|val|)   sum_val  CE(y; a_i, b_i)
///   g(x, y) = (1/|train|) sum_tr   CE(y; a_i, b_i)
///             + (1/(2 c p)) sum_{j,k} exp(x_k) y_{jk}^2
/// where y is a c x p multinomial-logistic weight matrix (flattened row-major,
/// coordinate (j, k) at j*p + k), CE is the cross-entropy loss and
/// x in R^p holds the log regularization strengths.
class ExpRidgeTuning final : public BilevelOracle {
 public:
  ExpRidgeTuning(SparseMatrix train_features, std::vector<int> train_labels,
                 SparseMatrix val_features, std::vector<int> val_labels,
                 int n_classes);

  int dim_x() const override { return static_cast<int>(train_.cols()); }
  int dim_y() const override {
    return n_classes_ * static_cast<int>(train_.cols());
  }
  SmoothnessParams smoothness() const override { return params_; }

  double f_val(const Vector& x, const Vector& y) const override;
  double g_val(const Vector& x, const Vector& y) const override;
  Vector grad_f_x(const Vector& x, const Vector& y) const override;
  Vector grad_f_y(const Vector& x, const Vector& y) const override;
  Vector grad_g_x(const Vector& x, const Vector& y) const override;
  Vector grad_g_y(const Vector& x, const Vector& y) const override;
  Matrix hess_f_xx(const Vector& x, const Vector& y) const override;
  Matrix hess_f_xy(const Vector& x, const Vector& y) const override;
  Matrix hess_f_yy(const Vector& x, const Vector& y) const override;
  Matrix hess_g_xx(const Vector& x, const Vector& y) const override;
  Matrix hess_g_xy(const Vector& x, const Vector& y) const override;
  Matrix hess_g_yy(const Vector& x, const Vector& y) const override;

  int n_classes() const { return n_classes_; }
  int n_features() const { return static_cast<int>(train_.cols()); }

 private:
  // Cross-entropy value/gradient/Hessian over one dataset.
  double ce_value(const SparseMatrix& a, const std::vector<int>& lab,
                  const Vector& y) const;
  Vector ce_grad(const SparseMatrix& a, const std::vector<int>& lab,
                 const Vector& y) const;
  Matrix ce_hess(const SparseMatrix& a, const std::vector<int>& lab,
                 const Vector& y) const;

  SparseMatrix train_, val_;
  std::vector<int> tr_labels_, val_labels_;
  int n_classes_;
  SmoothnessParams params_;
};

/// Builds the problem on synthetic multinomial data (seed-deterministic).
std::unique_ptr<ExpRidgeTuning> make_exp_ridge_tuning(std::uint64_t seed,
                                                      int n_train, int n_val,
                                                      int n_features,
                                                      int n_classes);

}  // namespace bilevel
