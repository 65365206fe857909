#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

namespace bilevel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Smoothness constants of a problem instance (Assumption-style metadata).
/// mu is the lower-level strong convexity modulus; ell the gradient-Lipschitz
/// constant; rho the Hessian-Lipschitz constant; nu the third-derivative
/// Lipschitz constant (carried as metadata only, never evaluated); c_lip the
/// function-value Lipschitz constant.
struct SmoothnessParams {
  double mu = 1.0;
  double ell = 1.0;
  double rho = 0.0;
  double nu = 0.0;
  double c_lip = 1.0;

  double ell_bar() const { return std::max({c_lip, ell, nu, rho}); }
  double kappa() const { return ell_bar() / mu; }

  void validate() const {
    if (!(mu > 0.0) || !(ell > 0.0) || rho < 0.0 || nu < 0.0 || c_lip < 0.0)
      throw std::invalid_argument("SmoothnessParams: constants must be positive");
  }
};

/// Exact (or high-accuracy reference) information about the hyper-objective
/// at a point, used only for verification.
struct GroundTruth {
  double phi = 0.0;
  Vector grad_phi;
  double hess_phi_min_eig = 0.0;
  double xi = 0.0;  // [-lambda_min]_+
  Vector y_star;
};

inline double positive_part(double t) { return t > 0.0 ? t : 0.0; }

}  // namespace bilevel
