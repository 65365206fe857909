#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

namespace bilevel {

/// Oracle-call accounting.  First-order partial gradients and Hessian-vector
/// products cost one unit (N); a dense second-order block costs d units with
/// d = max{d_x, d_y}.  A Hessian block or HVP of the penalty Lagrangian
/// f + lambda*g counts once (it is a single differentiation pass), while
/// first-order Lagrangian gradients count the f and g parts separately.
class OracleCounter {
 public:
  OracleCounter() = default;
  explicit OracleCounter(int d) : d_(d) {}
  OracleCounter(const OracleCounter& o) { *this = o; }
  OracleCounter& operator=(const OracleCounter& o) {
    grad_.store(o.grad_calls());
    hvp_.store(o.hvp_calls());
    hess_.store(o.hess_block_calls());
    d_ = o.d();
    return *this;
  }

  void add_grad(std::int64_t n = 1) const { grad_.fetch_add(n); }
  void add_hvp(std::int64_t n = 1) const { hvp_.fetch_add(n); }
  void add_hess_block(std::int64_t n = 1) const { hess_.fetch_add(n); }

  std::int64_t grad_calls() const { return grad_.load(); }
  std::int64_t hvp_calls() const { return hvp_.load(); }
  std::int64_t hess_block_calls() const { return hess_.load(); }
  int d() const { return d_; }
  void set_d(int d) { d_ = d; }

 private:
  mutable std::atomic<std::int64_t> grad_{0};
  mutable std::atomic<std::int64_t> hvp_{0};
  mutable std::atomic<std::int64_t> hess_{0};
  int d_ = 1;
};

/// Total cost in units of N: grad + hvp + d * hess_blocks.
double total_cost(const OracleCounter& c);

/// One outer-iteration snapshot of a solver run.
struct TraceRecord {
  long t = 0;
  double step_norm = 0.0;
  double grad_est_norm = 0.0;
  bool has_lagrangian_value = false;
  double lagrangian_value = 0.0;  // test families only
  long pi_t = 0;                  // t - t mod m
  long K_t1 = 0;
  long K_t2 = 0;
  std::int64_t grad_calls = 0;  // cumulative counters at the end of iteration t
  std::int64_t hvp_calls = 0;
  std::int64_t hess_block_calls = 0;
  double total_cost = 0.0;
  double wall_time = 0.0;  // seconds since run start; never asserted on
};

using Trace = std::vector<TraceRecord>;

/// Field-by-field equality ignoring wall_time (wall clock is the one
/// non-deterministic field).
bool traces_equal_modulo_walltime(const Trace& a, const Trace& b);

}  // namespace bilevel
