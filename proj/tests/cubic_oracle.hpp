#pragma once

// Independent brute-force oracle for 2-D cubic-regularized models: coarse
// grid, 1e-3 local grid, then gradient polish with backtracking.  Kept free
// of any solver machinery so it can certify cubic_solve_exact.

#include "bilevel/cubic.hpp"

#include <Eigen/Eigenvalues>

namespace bilevel::testing {

struct BruteForce2D {
  Vector s;
  double value;
};

inline BruteForce2D brute_force_2d(const Vector& g, const Matrix& H,
                                   double M) {
  CubicModel model;
  model.g = g;
  model.M = M;
  model.H = &H;
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  const double hnorm = es.eigenvalues().cwiseAbs().maxCoeff();
  const double R = 2.0 * std::sqrt(g.norm() / M) + 2.0 * hnorm / M + 0.5;
  auto value = [&](double a, double b) {
    Vector s(2);
    s << a, b;
    return cubic_model_value(model, s);
  };
  const int n_coarse = 401;
  double best_a = 0.0, best_b = 0.0, best_v = value(0.0, 0.0);
  const double h_coarse = 2.0 * R / (n_coarse - 1);
  for (int i = 0; i < n_coarse; ++i)
    for (int j = 0; j < n_coarse; ++j) {
      const double a = -R + i * h_coarse, b = -R + j * h_coarse;
      const double v = value(a, b);
      if (v < best_v) {
        best_v = v;
        best_a = a;
        best_b = b;
      }
    }
  const double span = 1.5 * h_coarse;
  for (double a = best_a - span; a <= best_a + span; a += 1e-3)
    for (double b = best_b - span; b <= best_b + span; b += 1e-3) {
      const double v = value(a, b);
      if (v < best_v) {
        best_v = v;
        best_a = a;
        best_b = b;
      }
    }
  Vector s(2);
  s << best_a, best_b;
  for (int it = 0; it < 400; ++it) {
    const Vector grad = cubic_model_grad(model, s);
    double step = 1.0;
    const double v0 = cubic_model_value(model, s);
    while (step > 1e-18 &&
           cubic_model_value(model, Vector(s - step * grad)) >= v0)
      step *= 0.5;
    if (step <= 1e-18) break;
    s -= step * grad;
  }
  return {s, cubic_model_value(model, s)};
}

}  // namespace bilevel::testing
