// Times the serial reference kernels against the OpenMP variants on a
// synthetic logistic workload and reports the speedup and the max deviation.
#include <chrono>
#include <cstdio>
#include <random>

#include "bilevel/kernels.hpp"

using namespace bilevel;

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best,
                    std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n = 200000;
  int p = 60;
  if (argc > 1) n = static_cast<std::size_t>(std::atoll(argv[1]));
  if (argc > 2) p = std::atoi(argv[2]);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SparseMatrix a(static_cast<std::size_t>(p));
  std::vector<std::pair<int, double>> row(static_cast<std::size_t>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) row[static_cast<std::size_t>(j)] = {j, gauss(rng)};
    a.push_row(row);
  }
  Vector y(p), b(static_cast<Eigen::Index>(n)), c(static_cast<Eigen::Index>(n));
  for (int j = 0; j < p; ++j) y[j] = gauss(rng);
  for (std::size_t i = 0; i < n; ++i) {
    b[static_cast<Eigen::Index>(i)] = (i % 2 == 0) ? 1.0 : 0.0;
    c[static_cast<Eigen::Index>(i)] = 1.0 / static_cast<double>(n);
  }

  std::printf("kernel benchmark: n=%zu p=%d blocks=%d\n", n, p,
              kernels::worker_blocks());
  std::printf("%-22s %12s %12s %9s %12s\n", "kernel", "serial[s]",
              "parallel[s]", "speedup", "max|diff|");

  Vector z_s, z_p;
  const double t_rp_s =
      time_best_of(5, [&] { kernels::row_products_serial(a, y, z_s); });
  const double t_rp_p =
      time_best_of(5, [&] { kernels::row_products_parallel(a, y, z_p); });
  std::printf("%-22s %12.4f %12.4f %8.2fx %12.3e\n", "row_products", t_rp_s,
              t_rp_p, t_rp_s / t_rp_p, (z_s - z_p).cwiseAbs().maxCoeff());

  double loss_s = 0.0, loss_p = 0.0;
  Vector res_s, cur_s, res_p, cur_p;
  const double t_lm_s = time_best_of(5, [&] {
    kernels::logistic_moments_serial(z_s, b, c, loss_s, res_s, cur_s);
  });
  const double t_lm_p = time_best_of(5, [&] {
    kernels::logistic_moments_parallel(z_s, b, c, loss_p, res_p, cur_p);
  });
  std::printf("%-22s %12.4f %12.4f %8.2fx %12.3e\n", "logistic_moments",
              t_lm_s, t_lm_p, t_lm_s / t_lm_p, std::abs(loss_s - loss_p));

  Vector g_s, g_p;
  const double t_ws_s =
      time_best_of(5, [&] { kernels::weighted_row_sum_serial(a, res_s, g_s); });
  const double t_ws_p = time_best_of(
      5, [&] { kernels::weighted_row_sum_parallel(a, res_s, g_p); });
  std::printf("%-22s %12.4f %12.4f %8.2fx %12.3e\n", "weighted_row_sum",
              t_ws_s, t_ws_p, t_ws_s / t_ws_p,
              (g_s - g_p).cwiseAbs().maxCoeff());

  Matrix h_s, h_p;
  const double t_wg_s =
      time_best_of(3, [&] { kernels::weighted_gram_serial(a, cur_s, h_s); });
  const double t_wg_p =
      time_best_of(3, [&] { kernels::weighted_gram_parallel(a, cur_s, h_p); });
  std::printf("%-22s %12.4f %12.4f %8.2fx %12.3e\n", "weighted_gram", t_wg_s,
              t_wg_p, t_wg_s / t_wg_p, (h_s - h_p).cwiseAbs().maxCoeff());
  return 0;
}
