#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "pdctl/config.hpp"
#include "pdctl/experiment.hpp"
#include "pdctl/oracle.hpp"
#include "pdctl/results_io.hpp"
#include "pdctl/verify.hpp"

using namespace pdctl;

namespace {

struct Overrides {
  std::string controller;
  std::int64_t T = 0;
  std::vector<std::uint64_t> seeds;
  int n_seeds = 0;
  std::string output;
  bool no_oracle = false;
  bool trajectories = false;
  std::vector<double> eta_scales;
  std::vector<double> delta_scales;
  unsigned threads = 0;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--controller", o.controller, "zero|lqr|gpc|rbpc|bpc|mfgpc");
  cmd->add_option("--T", o.T, "horizon");
  cmd->add_option("--seeds", o.seeds, "explicit seed list")->delimiter(',');
  cmd->add_option("--n-seeds", o.n_seeds, "use seeds 0..n-1");
  cmd->add_option("--output", o.output, "output directory");
  cmd->add_flag("--no-oracle", o.no_oracle, "skip the hindsight comparator");
  cmd->add_flag("--trajectories", o.trajectories, "write trajectory_<seed>.csv");
  cmd->add_option("--threads", o.threads, "worker threads (default PDCTL_THREADS or all cores)");
}

ExperimentConfig apply(ExperimentConfig cfg, const Overrides& o) {
  if (!o.controller.empty()) cfg.controller.type = o.controller;
  if (o.T > 0) cfg.T = o.T;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.n_seeds > 0) {
    cfg.seeds.clear();
    for (int i = 0; i < o.n_seeds; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  if (!o.output.empty()) cfg.output = o.output;
  if (o.no_oracle) cfg.oracle = false;
  if (o.trajectories) cfg.trajectories = true;
  cfg.validate();
  return cfg;
}

void print_report(const RegretReport& r, const std::string& dir) {
  const auto cost = r.final_average_cost();
  const auto reg = r.final_regret();
  std::printf("%s  controller=%s  T=%lld  seeds=%zu  eta=%.4g delta=%.4g h=%d\n",
              r.config.name.c_str(), r.config.controller.type.c_str(),
              static_cast<long long>(r.config.T), r.seeds.size(), r.schedule.eta,
              r.schedule.delta, r.schedule.h);
  std::printf("  average cost %.6g +- %.3g", cost.mean, cost.stderr_);
  if (r.config.oracle) std::printf("   final regret %.6g +- %.3g", reg.mean, reg.stderr_);
  std::printf("\n");
  for (const auto& s : r.seeds)
    if (!s.ok) std::printf("  seed %llu failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
  std::printf("  wrote %s\n", dir.c_str());
}

int cmd_run(const std::string& source, const Overrides& o, bool& partial) {
  const ExperimentConfig base = apply(resolve_config(source), o);
  const std::vector<double> etas = o.eta_scales.empty() ? std::vector<double>{1.0} : o.eta_scales;
  const std::vector<double> deltas =
      o.delta_scales.empty() ? std::vector<double>{1.0} : o.delta_scales;
  const bool grid = etas.size() > 1 || deltas.size() > 1 || !o.eta_scales.empty() ||
                    !o.delta_scales.empty();
  for (double es : etas) {
    for (double ds : deltas) {
      ExperimentConfig cfg = base;
      cfg.controller.eta_scale *= es;
      cfg.controller.delta_scale *= ds;
      std::string dir = cfg.output;
      if (grid) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "/eta%g_delta%g", es, ds);
        dir += buf;
      }
      const RegretReport r = run_experiment(cfg, RunOptions{o.threads});
      write_results(r, dir);
      print_report(r, dir);
      partial = partial || r.partial;
    }
  }
  return 0;
}

int cmd_sweep(const std::string& source, const Overrides& o, const std::vector<std::int64_t>& hs) {
  ExperimentConfig cfg = apply(resolve_config(source), o);
  const SweepReport s = run_sweep(cfg, hs, RunOptions{o.threads});
  write_sweep(s, cfg.output);
  for (std::size_t i = 0; i < hs.size(); ++i)
    std::printf("T=%lld  mean regret %.6g\n", static_cast<long long>(hs[i]), s.mean_regret[i]);
  std::printf("log-log slope %.4f (valid=%s)\n", s.fit.slope, s.fit.valid ? "yes" : "no");
  std::printf("wrote %s\n", cfg.output.c_str());
  return 0;
}

int cmd_oracle(const std::string& source, const Overrides& o) {
  const ExperimentConfig cfg = apply(resolve_config(source), o);
  const ResolvedSetup setup = resolve_setup(cfg);
  nlohmann::json out = nlohmann::json::array();
  for (auto seed : cfg.seeds) {
    std::vector<Vector> w;
    for (std::int64_t t = 0; t < cfg.T; ++t) w.push_back(generate_disturbance(cfg.disturbance, t, seed));
    OracleOptions oo;
    oo.restarts = cfg.oracle_restarts;
    oo.max_iterations = cfg.oracle_iterations;
    oo.seed = seed;
    oo.x0 = cfg.x0;
    const OracleResult r =
        hindsight_dac_oracle(setup.system, setup.K, setup.cost, w, setup.schedule.h, setup.radii, oo);
    nlohmann::json blocks = nlohmann::json::array();
    for (int i = 1; i <= r.M.history(); ++i) {
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index a = 0; a < r.M[i].rows(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index b = 0; b < r.M[i].cols(); ++b) row.push_back(r.M[i](a, b));
        rows.push_back(row);
      }
      blocks.push_back(rows);
    }
    out.push_back({{"seed", seed},
                   {"total_cost", r.total_cost},
                   {"converged", r.converged},
                   {"restart_costs", r.restart_costs},
                   {"M", blocks}});
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_verify(std::size_t n, std::uint64_t seed) {
  const auto results = verify_lemmas(VerifyOptions{n, seed});
  std::printf("%-52s %-6s %12s %12s\n", "check", "result", "statistic", "threshold");
  for (const auto& r : results) {
    const char* tag = r.informational ? "info" : (r.pass ? "PASS" : "FAIL");
    std::printf("%-52s %-6s %12.4g %12.4g\n", r.name.c_str(), tag, r.statistic, r.threshold);
  }
  return all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online control with pseudo-disturbances"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, oracle_o;
  std::string run_src, sweep_src, oracle_src;
  auto* run = app.add_subcommand("run", "run an experiment (preset name or config file)");
  run->add_option("config", run_src)->required();
  add_overrides(run, run_o);
  run->add_option("--eta-scale", run_o.eta_scales, "grid of step-size multipliers")->delimiter(',');
  run->add_option("--delta-scale", run_o.delta_scales, "grid of exploration multipliers")->delimiter(',');

  std::vector<std::int64_t> horizons{1024, 2048, 4096, 8192, 16384};
  auto* sweep = app.add_subcommand("sweep", "regret over several horizons with a log-log fit");
  sweep->add_option("config", sweep_src)->required();
  sweep->add_option("--horizons", horizons, "horizons")->delimiter(',');
  add_overrides(sweep, sweep_o);

  auto* oracle = app.add_subcommand("oracle", "hindsight-optimal DAC for each seed");
  oracle->add_option("config", oracle_src)->required();
  add_overrides(oracle, oracle_o);

  std::size_t n_samples = 100000;
  std::uint64_t verify_seed = 0;
  auto* verify = app.add_subcommand("verify-lemmas", "pseudo-disturbance and gradient checks");
  verify->add_option("--n-samples", n_samples, "Monte-Carlo draws");
  verify->add_option("--seed", verify_seed, "random seed");

  auto* presets = app.add_subcommand("presets", "list built-in configs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*presets) {
      for (const auto& name : preset_names()) {
        const auto p = preset(name);
        std::printf("%s\tdx=%ld du=%ld sinusoidal\n", name.c_str(), static_cast<long>(p.A.rows()),
                    static_cast<long>(p.B.cols()));
      }
      return 0;
    }
    if (*verify) return cmd_verify(n_samples, verify_seed);
    if (*run) {
      bool partial = false;
      cmd_run(run_src, run_o, partial);
      return 0;
    }
    if (*sweep) return cmd_sweep(sweep_src, sweep_o, horizons);
    if (*oracle) return cmd_oracle(oracle_src, oracle_o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
