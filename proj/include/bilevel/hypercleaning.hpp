#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "bilevel/oracles.hpp"
#include "bilevel/sparse.hpp"

namespace bilevel {

/// Data hypercleaning: learn per-sample weights sigma(x_i) on a noisy
/// training set so that the ridge-regularized logistic model trained with
/// those weights minimizes validation loss.
///
///   f(x, y) = (1/|val|)   sum_val  loss(<a_i, y>, b_i)
///   g(x, y) = (1/|train|) sum_tr   sigma(x_i) loss(<a_i, y>, b_i) + c |y|^2
///
/// sigma is the logistic sigmoid (a smooth clamp to [0, 1]); labels live in
/// {0, 1}.  A fraction p of training labels is flipped, chosen
/// deterministically by the seed, and the flip set is recorded for
/// verification.  g is 2c-strongly convex in y for every x.
class HypercleaningProblem final : public BilevelOracle {
 public:
  HypercleaningProblem(SparseMatrix train_features, Vector train_labels,
                       SparseMatrix val_features, Vector val_labels,
                       double noise_rate, double c, std::uint64_t seed);

  int dim_x() const override { return static_cast<int>(train_.rows()); }
  int dim_y() const override { return static_cast<int>(train_.cols()); }
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

  Vector hvp_f_yy(const Vector& x, const Vector& y, const Vector& v) const override;
  Vector hvp_g_xx(const Vector& x, const Vector& y, const Vector& v) const override;
  Vector hvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const override;
  Vector hvp_g_yx(const Vector& x, const Vector& y, const Vector& v) const override;
  Vector hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const override;

  const std::vector<int>& flipped_indices() const { return flipped_; }
  const Vector& train_labels() const { return tr_labels_; }  // post-flip
  const Vector& clean_train_labels() const { return clean_labels_; }
  double ridge_c() const { return c_; }
  int n_train() const { return static_cast<int>(train_.rows()); }
  int n_val() const { return static_cast<int>(val_.rows()); }

  /// AUC of the sample-weight variables x for discriminating clean (high x)
  /// from flipped (low x) training samples.
  double flip_auc(const Vector& x) const;

 private:
  SparseMatrix train_, val_;
  Vector tr_labels_, val_labels_, clean_labels_;
  double c_;
  std::vector<int> flipped_;
  SmoothnessParams params_;
};

/// Splits (features, labels) into train/val by val_split (validation gets the
/// trailing fraction), flips a fraction p of training labels deterministically
/// by seed, and builds the problem.  Rejects p >= 1 and empty splits.
std::unique_ptr<HypercleaningProblem> make_hypercleaning(
    const SparseMatrix& features, const Vector& labels, double val_split,
    double noise_rate, double c, std::uint64_t seed);

/// Seed-deterministic synthetic binary logistic dataset.
void make_synthetic_logistic_data(std::uint64_t seed, int n, int n_features,
                                  SparseMatrix& features, Vector& labels);

/// Validation loss of the plain ridge-logistic baseline: the lower-level
/// problem solved on the corrupted training data with all sample weights at
/// sigma(20) ~ 1 (the "no reweighting" limit).
double ridge_baseline_val_loss(const HypercleaningProblem& prob,
                               double inner_tol = 1e-10);

}  // namespace bilevel
