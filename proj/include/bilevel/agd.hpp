#pragma once

#include <functional>
#include <optional>

#include "bilevel/types.hpp"

namespace bilevel {

/// Accelerated gradient descent with a fixed step and momentum:
///   z_{k+1} = z~_k - eta * grad h(z~_k)
///   z~_{k+1} = z_{k+1} + theta (z_{k+1} - z_k)
struct AgdConfig {
  double eta = 1.0;    // 1 / smoothness
  double theta = 0.0;  // (sqrt(kappa)-1)/(sqrt(kappa)+1)
  long K = 0;          // iteration count

  static AgdConfig for_condition(double ell, double kappa, long K);
};

/// Runs exactly cfg.K steps from z0 and returns z_K.  Deterministic.  Throws
/// if an iterate becomes non-finite or its norm exceeds 1e6 * (1 + |z0|),
/// which indicates misconfigured smoothness constants.
Vector agd_run(const std::function<Vector(const Vector&)>& grad_h,
               const Vector& z0, const AgdConfig& cfg);

/// State for the warm-started inner iteration-count schedules.
struct ScheduleState {
  double eps_tilde = 0.0;          // inner accuracy target
  double R = 0.0;                  // max{|y*(x0)|, |y*_lambda(x0)|}
  double kappa_inner = 1.0;        // condition number in the count formula
  double lipschitz_coupling = 1.0; // multiplier on the previous step norm
};

/// Iteration count for outer iteration t:
///   t = 0:   ceil(2 sqrt(k) log(sqrt(k+1) R / eps~))
///   t >= 1:  ceil(2 sqrt(k) log(sqrt(k+1) (eps~ + coupling * prev) / eps~))
/// floored at 1.  prev_step_norm is required for t >= 1.
long schedule_K(long t, std::optional<double> prev_step_norm,
                const ScheduleState& st);

}  // namespace bilevel
