#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pdctl/config.hpp"
#include "pdctl/controllers.hpp"
#include "pdctl/lds.hpp"

namespace pdctl {

/// Everything derived from a config before any rollout.
struct ResolvedSetup {
  LinearSystem system;
  Matrix K;
  CostFunction cost;
  StrongStability certificate;  // of A - BK
  Schedule schedule;
  std::vector<double> radii;
  double disturbance_bound = 0.0;  // W
  double divergence_threshold = 0.0;
};

ResolvedSetup resolve_setup(const ExperimentConfig& config);

std::unique_ptr<Controller> make_controller(const ExperimentConfig& config,
                                            const ResolvedSetup& setup, std::uint64_t seed);

/// Exploration stream of a seed, decorrelated from the disturbance stream.
std::uint64_t controller_seed(std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  bool diverged = false;
  std::string error;
  std::vector<double> costs;
  std::vector<double> oracle_costs;  // empty when the oracle is disabled
  bool oracle_converged = false;
  std::vector<double> oracle_restart_costs;
  Trajectory trajectory;             // kept only when requested

  double total_cost() const;
  double oracle_total() const;
  double final_regret() const;
  double average_cost() const;
};

struct Aggregate {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
  std::size_t n = 0;
};

Aggregate aggregate(const std::vector<double>& values);

struct RegretReport {
  ExperimentConfig config;
  Schedule schedule;
  std::vector<SeedResult> seeds;  // in config seed order
  bool partial = false;           // some seed failed

  Aggregate final_regret() const;
  Aggregate final_average_cost() const;
};

struct RunOptions {
  unsigned threads = 0;  // 0: PDCTL_THREADS, else hardware concurrency
};

unsigned worker_count(unsigned requested);

SeedResult run_seed(const ExperimentConfig& config, const ResolvedSetup& setup,
                    std::uint64_t seed);
RegretReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool valid = false;  // false when some value is non-positive
};

/// Least squares of log(values) on log(x).
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& values);

struct SweepReport {
  std::vector<std::int64_t> horizons;
  std::vector<RegretReport> runs;
  std::vector<double> mean_regret;
  SlopeFit fit;
};

SweepReport run_sweep(const ExperimentConfig& config, const std::vector<std::int64_t>& horizons,
                      const RunOptions& options = {});

}  // namespace pdctl
