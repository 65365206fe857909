#pragma once

#include "bilevel/oracles.hpp"

namespace bilevel {

/// Hyper-objective reference evaluator, verification only.  Uses closed forms
/// for the quadratic and synthetic-minimax families; otherwise solves the
/// inner problem by AGD with safeguard restarts to gradient norm <= tol,
/// applies the implicit-function hypergradient formula
///   grad phi = grad_x f - hess_g_xy hess_g_yy^{-1} grad_y f
/// and estimates lambda_min(hess phi) by central finite differences of the
/// hypergradient with step h = sqrt(tol).  Throws on inner non-convergence.
GroundTruth ground_truth_eval(const BilevelOracle& oracle, const Vector& x,
                              double tol);
GroundTruth ground_truth_eval(const MinimaxOracle& oracle, const Vector& x,
                              double tol);

/// Inner solve helper shared with baselines: minimizes the mu-strongly convex,
/// ell-smooth map via AGD restarts until |grad| <= tol.  Throws after
/// max_restarts rounds without convergence.
Vector solve_strongly_convex(const std::function<Vector(const Vector&)>& grad,
                             const Vector& z0, double mu, double ell,
                             double tol, int max_restarts = 60);

}  // namespace bilevel
