#pragma once

#include <Eigen/Eigenvalues>
#include <random>

#include "bilevel/oracles.hpp"

namespace bilevel::testing {

inline Vector randn(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

inline double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double spec_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Central finite differences of a scalar function.
template <typename F>
Vector fd_gradient(F&& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Structural checks shared by every bilevel family: symmetric diagonal
/// blocks, gradients consistent with values, lower-level strong convexity.
inline void check_bilevel_oracle(const BilevelOracle& o, std::mt19937_64& rng,
                                 int n_points = 3, double point_scale = 0.5) {
  const SmoothnessParams p = o.smoothness();
  for (int it = 0; it < n_points; ++it) {
    const Vector x = randn(rng, o.dim_x(), point_scale);
    const Vector y = randn(rng, o.dim_y(), point_scale);

    const Matrix fxx = o.hess_f_xx(x, y), fyy = o.hess_f_yy(x, y);
    const Matrix gxx = o.hess_g_xx(x, y), gyy = o.hess_g_yy(x, y);
    for (const Matrix* m : {&fxx, &fyy, &gxx, &gyy}) {
      REQUIRE(m->allFinite());
      CHECK((*m - m->transpose()).norm() <= 1e-12 * (1.0 + m->norm()));
    }
    CHECK(o.hess_f_xy(x, y).allFinite());
    CHECK(o.hess_g_xy(x, y).allFinite());

    // grad_g_y is the exact y-gradient of g_val
    const Vector fd = fd_gradient(
        [&](const Vector& yq) { return o.g_val(x, yq); }, y, 1e-6);
    const Vector gy = o.grad_g_y(x, y);
    CHECK((gy - fd).norm() <= 1e-5 * (1.0 + gy.norm()));

    // strong convexity of the lower level
    CHECK(min_eig(gyy) >= p.mu - 1e-8);
  }
}

inline void check_minimax_oracle(const MinimaxOracle& o, std::mt19937_64& rng,
                                 int n_points = 3, double point_scale = 0.5) {
  const SmoothnessParams p = o.smoothness();
  for (int it = 0; it < n_points; ++it) {
    const Vector x = randn(rng, o.dim_x(), point_scale);
    const Vector y = randn(rng, o.dim_y(), point_scale);
    const Matrix fyy = o.hess_f_yy(x, y);
    CHECK((fyy - fyy.transpose()).norm() <= 1e-12 * (1.0 + fyy.norm()));
    CHECK(max_eig(fyy) <= -p.mu + 1e-8);  // strong concavity in y
    const Vector fd = fd_gradient(
        [&](const Vector& yq) { return o.f_val(x, yq); }, y, 1e-6);
    CHECK((o.grad_f_y(x, y) - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
  }
}

}  // namespace bilevel::testing
