#include "bilevel/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "bilevel/exp_ridge.hpp"
#include "bilevel/ground_truth.hpp"
#include "bilevel/hypercleaning.hpp"
#include "bilevel/libsvm.hpp"
#include "bilevel/quadratic.hpp"
#include "bilevel/synthetic_minimax.hpp"

namespace bilevel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  fs::rename(tmp, target);
}

const std::vector<std::string> kSolvers = {"fsba", "ifsba", "lfsba",
                                           "lmcn", "f2ba",  "gda"};
const std::vector<std::string> kFamilies = {"quadratic", "synthetic_minimax",
                                            "hypercleaning", "exp_ridge"};

bool known(const std::vector<std::string>& pool, const std::string& v) {
  return std::find(pool.begin(), pool.end(), v) != pool.end();
}

}  // namespace

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["problem"] = {{"family", family},
                  {"seed", problem_seed},
                  {"d_x", d_x},
                  {"d_y", d_y},
                  {"cond", cond},
                  {"eps_w", eps_w},
                  {"L_w", L_w},
                  {"data_path", data_path},
                  {"n_samples", n_samples},
                  {"n_features", n_features},
                  {"val_split", val_split},
                  {"noise_rate", noise_rate},
                  {"ridge_c", ridge_c},
                  {"n_classes", n_classes}};
  json s;
  s["name"] = solver;
  s["lambda"] = solver_cfg.lambda;
  s["M"] = solver_cfg.M;
  s["m"] = solver_cfg.m;
  s["eps"] = solver_cfg.eps;
  s["T_max"] = solver_cfg.T_max;
  s["delta"] = solver_cfg.delta;
  s["seed"] = solver_cfg.seed;
  s["derive_lambda"] = derive_lambda;
  s["C_sigma"] = solver_cfg.C_sigma;
  s["eps_H"] = solver_cfg.eps_H;
  s["sqrt_delta_threshold"] = solver_cfg.sqrt_delta_threshold;
  s["gd_stall_tol"] = solver_cfg.gd_stall_tol;
  s["gd_stall_patience"] = solver_cfg.gd_stall_patience;
  s["ifsba_exact_debug"] = solver_cfg.ifsba_exact_debug;
  s["f2ba_step"] = f2ba_step;
  s["gda_eta_x"] = gda_eta_x;
  s["gda_eta_y"] = gda_eta_y;
  if (solver_cfg.eps_tilde_override)
    s["eps_tilde"] = *solver_cfg.eps_tilde_override;
  if (solver_cfg.L_override) s["L"] = *solver_cfg.L_override;
  if (solver_cfg.rho_bar_override) s["rho_bar"] = *solver_cfg.rho_bar_override;
  if (solver_cfg.R_override) s["R"] = *solver_cfg.R_override;
  if (solver_cfg.cheb_order_override)
    s["cheb_order"] = *solver_cfg.cheb_order_override;
  j["solver"] = s;
  return j.dump();  // nlohmann objects are key-sorted: canonical by design
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(canonical_json())); }

ExperimentConfig parse_experiment_json(const json& j) {
  ExperimentConfig cfg;
  try {
    const json& p = j.at("problem");
    cfg.family = p.at("family").get<std::string>();
    cfg.problem_seed = p.value("seed", 0ull);
    cfg.d_x = p.value("d_x", 5);
    cfg.d_y = p.value("d_y", 5);
    cfg.cond = p.value("cond", 10.0);
    cfg.eps_w = p.value("eps_w", 0.01);
    cfg.L_w = p.value("L_w", 3.0);
    cfg.data_path = p.value("data_path", std::string());
    cfg.n_samples = p.value("n_samples", 700);
    cfg.n_features = p.value("n_features", 20);
    cfg.val_split = p.value("val_split", 2.0 / 7.0);
    cfg.noise_rate = p.value("noise_rate", 0.25);
    cfg.ridge_c = p.value("ridge_c", 1e-3);
    cfg.n_classes = p.value("n_classes", 3);

    const json& s = j.at("solver");
    cfg.solver = s.at("name").get<std::string>();
    cfg.solver_cfg.lambda = s.value("lambda", 0.0);
    cfg.derive_lambda = s.value("derive_lambda", cfg.solver_cfg.lambda <= 0.0);
    cfg.solver_cfg.M = s.value("M", 1.0);
    cfg.solver_cfg.m = s.value("m", 1);
    cfg.solver_cfg.eps = s.value("eps", 1e-4);
    cfg.solver_cfg.T_max = s.value("T_max", 1000l);
    cfg.solver_cfg.delta = s.value("delta", 0.1);
    cfg.solver_cfg.seed = s.value("seed", 0ull);
    cfg.solver_cfg.C_sigma = s.value("C_sigma", 1.0);
    cfg.solver_cfg.eps_H = s.value("eps_H", 1.0);
    cfg.solver_cfg.sqrt_delta_threshold = s.value("sqrt_delta_threshold", true);
    cfg.solver_cfg.gd_stall_tol = s.value("gd_stall_tol", -1.0);
    cfg.solver_cfg.gd_stall_patience = s.value("gd_stall_patience", 5000l);
    cfg.solver_cfg.ifsba_exact_debug = s.value("ifsba_exact_debug", false);
    if (s.contains("eps_tilde"))
      cfg.solver_cfg.eps_tilde_override = s.at("eps_tilde").get<double>();
    if (s.contains("L")) cfg.solver_cfg.L_override = s.at("L").get<double>();
    if (s.contains("rho_bar"))
      cfg.solver_cfg.rho_bar_override = s.at("rho_bar").get<double>();
    if (s.contains("R")) cfg.solver_cfg.R_override = s.at("R").get<double>();
    if (s.contains("cheb_order"))
      cfg.solver_cfg.cheb_order_override = s.at("cheb_order").get<int>();
    cfg.f2ba_step = s.value("step_size", 0.0);
    cfg.gda_eta_x = s.value("eta_x", 0.0);
    cfg.gda_eta_y = s.value("eta_y", 0.0);

    cfg.output_dir = j.value("output", std::string("."));
    cfg.repeat = j.value("repeat", 1);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment_json(j);
}

void check_experiment(const ExperimentConfig& cfg) {
  if (!known(kFamilies, cfg.family))
    throw ConfigError("unknown problem family: " + cfg.family);
  if (!known(kSolvers, cfg.solver))
    throw ConfigError("unknown solver: " + cfg.solver);
  const bool minimax_solver = cfg.solver == "lmcn" || cfg.solver == "gda";
  const bool minimax_family = cfg.family == "synthetic_minimax";
  if (minimax_solver != minimax_family)
    throw ConfigError("solver " + cfg.solver + " does not apply to family " +
                      cfg.family);
  if (cfg.repeat < 1) throw ConfigError("repeat must be >= 1");
  if (!cfg.data_path.empty() && !fs::exists(cfg.data_path))
    throw ConfigError("data file does not exist: " + cfg.data_path);
  if (cfg.family == "quadratic" && cfg.cond < 1.0)
    throw ConfigError("quadratic family needs cond >= 1");
  if (cfg.family == "hypercleaning" &&
      (cfg.noise_rate < 0.0 || cfg.noise_rate >= 1.0))
    throw ConfigError("noise_rate must be in [0, 1)");
}

std::string trace_to_csv(const Trace& trace) {
  std::string out =
      "t,step_norm,grad_est_norm,pi_t,K_t1,K_t2,grad_calls,hvp_calls,"
      "hess_block_calls,total_cost,wall_time\n";
  for (const TraceRecord& r : trace) {
    out += std::to_string(r.t);
    out += ',';
    out += fmt12(r.step_norm);
    out += ',';
    out += fmt12(r.grad_est_norm);
    out += ',';
    out += std::to_string(r.pi_t);
    out += ',';
    out += std::to_string(r.K_t1);
    out += ',';
    out += std::to_string(r.K_t2);
    out += ',';
    out += std::to_string(r.grad_calls);
    out += ',';
    out += std::to_string(r.hvp_calls);
    out += ',';
    out += std::to_string(r.hess_block_calls);
    out += ',';
    out += fmt12(r.total_cost);
    out += ',';
    out += fmt12(r.wall_time);
    out += '\n';
  }
  return out;
}

void emit_csv(const Trace& trace, const std::string& path) {
  atomic_write(path, trace_to_csv(trace));
}

namespace {

Vector default_x0(const ExperimentConfig& cfg, int d_x) {
  if (cfg.family == "synthetic_minimax") {
    Vector x(3);
    x << 1e-3, 1e-3, 0.1;
    return x;
  }
  return Vector::Zero(d_x);
}

struct BuiltProblem {
  std::unique_ptr<BilevelOracle> bilevel;
  std::unique_ptr<MinimaxOracle> minimax;
  ValueRef phi_ref;  // closed-form value when available
  double Delta = 0.0;
};

BuiltProblem build_problem(const ExperimentConfig& cfg) {
  BuiltProblem out;
  if (cfg.family == "quadratic") {
    auto quad = make_quadratic_bilevel(cfg.problem_seed, cfg.d_x, cfg.d_y,
                                       cfg.cond);
    const QuadraticBilevel* q = quad.get();
    const Vector x0 = default_x0(cfg, cfg.d_x);
    out.Delta = q->phi(x0) - q->phi_star();
    out.phi_ref = [q](const Vector& x) { return q->phi(x); };
    out.bilevel = std::move(quad);
  } else if (cfg.family == "synthetic_minimax") {
    auto syn = make_synthetic_minimax(cfg.eps_w, cfg.L_w);
    const SyntheticMinimax* s = syn.get();
    const Vector x0 = default_x0(cfg, 3);
    out.Delta = s->phi(x0) - s->phi_star();
    out.phi_ref = [s](const Vector& x) { return s->phi(x); };
    out.minimax = std::move(syn);
  } else if (cfg.family == "hypercleaning") {
    SparseMatrix features;
    Vector labels;
    if (!cfg.data_path.empty()) {
      LibsvmData data = parse_libsvm(cfg.data_path);
      features = std::move(data.features);
      labels = std::move(data.labels);
      if (!data.raw_label_values.empty() && data.raw_label_values.size() != 2)
        throw ConfigError("hypercleaning expects binary labels");
    } else {
      make_synthetic_logistic_data(cfg.problem_seed, cfg.n_samples,
                                   cfg.n_features, features, labels);
    }
    out.bilevel = make_hypercleaning(features, labels, cfg.val_split,
                                     cfg.noise_rate, cfg.ridge_c,
                                     cfg.problem_seed);
  } else if (cfg.family == "exp_ridge") {
    const int n_val = std::max(2, static_cast<int>(cfg.val_split * cfg.n_samples));
    const int n_tr = std::max(2, cfg.n_samples - n_val);
    out.bilevel = make_exp_ridge_tuning(cfg.problem_seed, n_tr, n_val,
                                        cfg.n_features, cfg.n_classes);
  } else {
    throw ConfigError("unknown problem family: " + cfg.family);
  }
  return out;
}

}  // namespace

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base,
                                           const std::string& grid_preset) {
  std::vector<ExperimentConfig> out;
  if (grid_preset == "f3") {
    // practical tuning grid: multiplier and cubic weight over decades
    for (double lam : {1.0, 10.0, 100.0, 1000.0})
      for (double M : {1.0, 10.0, 100.0, 1000.0}) {
        ExperimentConfig c = base;
        c.solver_cfg.lambda = lam;
        c.derive_lambda = false;
        c.solver_cfg.M = M;
        out.push_back(c);
      }
  } else if (grid_preset == "m") {
    for (int m : {1, 5, 10, 100}) {
      ExperimentConfig c = base;
      c.solver_cfg.m = m;
      out.push_back(c);
    }
  } else {
    throw ConfigError("unknown sweep preset: " + grid_preset +
                      " (available: f3, m)");
  }
  return out;
}

int run_experiment(const ExperimentConfig& cfg) {
  check_experiment(cfg);

  const char* env_root_pre = std::getenv("BILEVEL_OUT");
  const fs::path outdir_pre = env_root_pre
                                  ? fs::path(env_root_pre) / cfg.output_dir
                                  : fs::path(cfg.output_dir);
  const std::string tag_pre = cfg.hash() + "_" + cfg.solver;
  // outputs are keyed by the config hash: a completed run is never redone
  bool all_present = fs::exists(outdir_pre / (tag_pre + "_summary.json"));
  for (int r = 0; all_present && r < cfg.repeat; ++r)
    all_present =
        fs::exists(outdir_pre / (tag_pre + "_rep" + std::to_string(r) + ".csv"));
  if (all_present) {
    std::ifstream in(outdir_pre / (tag_pre + "_summary.json"));
    json summary;
    in >> summary;
    return summary.value("converged", false) ? kExitOk : kExitNotConverged;
  }

  BuiltProblem prob = build_problem(cfg);

  SolverConfig scfg = cfg.solver_cfg;
  const SmoothnessParams params = prob.bilevel ? prob.bilevel->smoothness()
                                               : prob.minimax->smoothness();
  scfg.params = params;
  const bool is_bilevel_solver =
      cfg.solver == "fsba" || cfg.solver == "ifsba" || cfg.solver == "lfsba" ||
      cfg.solver == "f2ba";
  if (is_bilevel_solver) {
    const double floor_lambda = 2.0 * params.ell / params.mu;
    if (cfg.derive_lambda || scfg.lambda <= 0.0)
      scfg.lambda = default_penalty_multiplier(params, prob.Delta, scfg.eps, scfg.M);
    if (scfg.lambda < floor_lambda) scfg.lambda = floor_lambda;
  }
  // repeats share the derived seed, so a fixed config reproduces identical
  // trace files; the run executes once and the bytes are reused
  scfg.seed = fnv1a(cfg.solver, fnv1a(cfg.hash(), scfg.seed ^ 0x51ed2701));

  const int d_x = prob.bilevel ? prob.bilevel->dim_x() : prob.minimax->dim_x();
  const Vector x0 = default_x0(cfg, d_x);

  RunResult run;
  if (cfg.solver == "fsba") {
    run = fsba_run(*prob.bilevel, scfg, x0, prob.phi_ref);
  } else if (cfg.solver == "ifsba") {
    run = ifsba_run(*prob.bilevel, scfg, x0, prob.phi_ref);
  } else if (cfg.solver == "lfsba") {
    run = lfsba_run(*prob.bilevel, scfg, x0, prob.phi_ref);
  } else if (cfg.solver == "f2ba") {
    double step = cfg.f2ba_step;
    if (step <= 0.0) {
      LagrangianContext ctx_probe;  // default-constructed: only L formula used
      ctx_probe.lambda = scfg.lambda;
      ctx_probe.params = params;
      ctx_probe.L_override = scfg.L_override;
      step = 1.0 / ctx_probe.L();
    }
    run = f2ba_run(*prob.bilevel, scfg, x0, step, prob.phi_ref);
  } else if (cfg.solver == "lmcn") {
    run = lmcn_run(*prob.minimax, scfg, x0, prob.phi_ref);
  } else if (cfg.solver == "gda") {
    double ex = cfg.gda_eta_x, ey = cfg.gda_eta_y;
    const double kappa = params.ell / params.mu;
    if (ey <= 0.0) ey = 1.0 / params.ell;
    if (ex <= 0.0) ex = ey / (16.0 * kappa * kappa);
    run = gda_run(*prob.minimax, scfg, x0, ex, ey, prob.phi_ref);
  } else {
    throw ConfigError("unknown solver: " + cfg.solver);
  }

  const char* env_root = std::getenv("BILEVEL_OUT");
  fs::path outdir = env_root ? fs::path(env_root) / cfg.output_dir
                             : fs::path(cfg.output_dir);
  const std::string tag = cfg.hash() + "_" + cfg.solver;
  const std::string csv = trace_to_csv(run.trace);
  for (int r = 0; r < cfg.repeat; ++r)
    atomic_write((outdir / (tag + "_rep" + std::to_string(r) + ".csv")).string(),
                 csv);

  json summary;
  summary["config_hash"] = cfg.hash();
  summary["solver"] = cfg.solver;
  summary["family"] = cfg.family;
  summary["converged"] = run.converged;
  summary["subsolver_failed"] = run.subsolver_failed;
  summary["iterations"] = run.iterations;
  summary["final_grad_est_norm"] =
      run.trace.empty() ? 0.0 : run.trace.back().grad_est_norm;
  summary["total_cost"] = total_cost(run.counter);
  summary["grad_calls"] = run.counter.grad_calls();
  summary["hvp_calls"] = run.counter.hvp_calls();
  summary["hess_block_calls"] = run.counter.hess_block_calls();
  summary["lambda"] = scfg.lambda;
  if (cfg.family == "quadratic") {
    const SospVerdict v = sosp_check(*prob.bilevel, run.x_hat, scfg.eps,
                                     scfg.M, params);
    summary["grad_phi_norm"] = v.grad_norm;
    summary["hess_phi_min_eig"] = v.min_eig;
    summary["is_fosp"] = v.is_fosp;
    summary["is_sosp"] = v.is_sosp;
  } else if (cfg.family == "synthetic_minimax") {
    const SospVerdict v = sosp_check(*prob.minimax, run.x_hat, scfg.eps,
                                     scfg.M, params);
    summary["grad_phi_norm"] = v.grad_norm;
    summary["hess_phi_min_eig"] = v.min_eig;
    summary["is_fosp"] = v.is_fosp;
    summary["is_sosp"] = v.is_sosp;
  }
  atomic_write((outdir / (tag + "_summary.json")).string(), summary.dump(2));

  return run.converged ? kExitOk : kExitNotConverged;
}

}  // namespace bilevel
