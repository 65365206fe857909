#pragma once

#include <string>

#include "bilevel/solvers.hpp"

#include <nlohmann/json_fwd.hpp>

namespace bilevel {

// Exit codes of the batch runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitNotConverged = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One batch experiment: a problem block, a solver block and output options.
/// Parsed from a JSON file; command-line overrides (--m, --lambda, --eps)
/// are applied on top for sweeps.
struct ExperimentConfig {
  // problem
  std::string family;  // quadratic | synthetic_minimax | hypercleaning | exp_ridge
  std::uint64_t problem_seed = 0;
  int d_x = 5, d_y = 5;
  double cond = 10.0;
  double eps_w = 0.01, L_w = 3.0;       // synthetic minimax
  std::string data_path;                // hypercleaning (libsvm), optional
  int n_samples = 700, n_features = 20; // synthetic data fallback
  double val_split = 2.0 / 7.0;
  double noise_rate = 0.25;
  double ridge_c = 1e-3;
  int n_classes = 3;

  // solver
  std::string solver;  // fsba | ifsba | lfsba | lmcn | f2ba | gda
  SolverConfig solver_cfg;
  bool derive_lambda = false;   // compute lambda from the accuracy-driven rule
  double f2ba_step = 0.0;       // 0: use 1/L
  double gda_eta_x = 0.0, gda_eta_y = 0.0;  // 0: derive from smoothness

  // output
  std::string output_dir = ".";
  int repeat = 1;

  /// Canonical JSON (sorted keys, semantic fields only) and its FNV-1a hash.
  std::string canonical_json() const;
  std::string hash() const;
};

ExperimentConfig parse_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_json(const nlohmann::json& j);

/// Validates without running (the `check` subcommand).
void check_experiment(const ExperimentConfig& cfg);

/// Runs the experiment: builds the problem, executes solver x repeat with the
/// derived seed, writes one trace CSV per repeat plus a JSON summary.  Repeats
/// share the derived seed, so their outputs are byte-identical; the run is
/// executed once and the bytes are reused.  Outputs are written atomically
/// (temp file + rename) and keyed by the config hash.  Returns an exit code.
int run_experiment(const ExperimentConfig& cfg);

/// CSV emission: header
///   t,step_norm,grad_est_norm,pi_t,K_t1,K_t2,grad_calls,hvp_calls,
///   hess_block_calls,total_cost,wall_time
/// one row per record, 12 significant digits, LF line endings.
void emit_csv(const Trace& trace, const std::string& path);
std::string trace_to_csv(const Trace& trace);

/// Appendix-style sweep presets; returns the list of (field, value) grids.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base,
                                           const std::string& grid_preset);

}  // namespace bilevel
