#include "bilevel/telemetry.hpp"

namespace bilevel {

double total_cost(const OracleCounter& c) {
  return static_cast<double>(c.grad_calls()) +
         static_cast<double>(c.hvp_calls()) +
         static_cast<double>(c.d()) * static_cast<double>(c.hess_block_calls());
}

bool traces_equal_modulo_walltime(const Trace& a, const Trace& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const TraceRecord& r = a[i];
    const TraceRecord& s = b[i];
    if (r.t != s.t || r.step_norm != s.step_norm ||
        r.grad_est_norm != s.grad_est_norm ||
        r.has_lagrangian_value != s.has_lagrangian_value ||
        r.lagrangian_value != s.lagrangian_value || r.pi_t != s.pi_t ||
        r.K_t1 != s.K_t1 || r.K_t2 != s.K_t2 || r.grad_calls != s.grad_calls ||
        r.hvp_calls != s.hvp_calls ||
        r.hess_block_calls != s.hess_block_calls ||
        r.total_cost != s.total_cost)
      return false;
  }
  return true;
}

}  // namespace bilevel
