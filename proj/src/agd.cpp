#include "bilevel/agd.hpp"

#include <cmath>

namespace bilevel {

AgdConfig AgdConfig::for_condition(double ell, double kappa, long K) {
  AgdConfig cfg;
  cfg.eta = 1.0 / ell;
  const double sk = std::sqrt(kappa);
  cfg.theta = (sk - 1.0) / (sk + 1.0);
  cfg.K = K;
  return cfg;
}

Vector agd_run(const std::function<Vector(const Vector&)>& grad_h,
               const Vector& z0, const AgdConfig& cfg) {
  if (!(cfg.eta > 0.0) || cfg.theta < 0.0 || cfg.theta >= 1.0 || cfg.K < 0)
    throw std::invalid_argument("agd_run: invalid config");
  const double guard = 1e6 * (1.0 + z0.norm());
  Vector z = z0;
  Vector z_tilde = z0;
  for (long k = 0; k < cfg.K; ++k) {
    Vector z_next = z_tilde - cfg.eta * grad_h(z_tilde);
    if (!z_next.allFinite() || z_next.norm() > guard)
      throw std::runtime_error(
          "agd_run: divergent iterate (check the smoothness constants)");
    z_tilde = z_next + cfg.theta * (z_next - z);
    z = std::move(z_next);
  }
  return z;
}

long schedule_K(long t, std::optional<double> prev_step_norm,
                const ScheduleState& st) {
  if (!(st.eps_tilde > 0.0))
    throw std::invalid_argument("schedule_K: eps_tilde must be positive");
  if (t >= 1 && !prev_step_norm.has_value())
    throw std::invalid_argument("schedule_K: prev_step_norm required for t >= 1");
  const double root = 2.0 * std::sqrt(st.kappa_inner);
  const double lead = std::sqrt(st.kappa_inner + 1.0) / st.eps_tilde;
  double arg;
  if (t == 0) {
    arg = lead * st.R;
  } else {
    arg = lead * (st.eps_tilde + st.lipschitz_coupling * *prev_step_norm);
  }
  if (!(arg > 1.0)) return 1;  // log argument <= 1: only the floor remains
  const double k = std::ceil(root * std::log(arg));
  return std::max<long>(1, static_cast<long>(k));
}

}  // namespace bilevel
