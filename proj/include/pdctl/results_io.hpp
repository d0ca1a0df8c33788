#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdctl/experiment.hpp"

namespace pdctl {

/// Header of results.csv.
inline constexpr const char* kResultsHeader = "seed,t,cost,cum_cost,oracle_cum_cost,regret";

/// One row per (seed, completed step); oracle columns are nan when the oracle
/// was disabled or the seed failed.
void write_results_csv(const RegretReport& report, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
std::string summary_json(const RegretReport& report);
std::string sweep_summary_json(const SweepReport& sweep);

/// results.csv, summary.json and (when the config asks) trajectory_<seed>.csv.
void write_results(const RegretReport& report, const std::filesystem::path& dir);
/// One subdirectory T_<horizon> per run plus a top-level summary.json.
void write_sweep(const SweepReport& sweep, const std::filesystem::path& dir);

struct ResultRow {
  std::uint64_t seed = 0;
  std::int64_t t = 0;
  double cost = 0.0;
  double cum_cost = 0.0;
  double oracle_cum_cost = 0.0;
  double regret = 0.0;
};

std::vector<ResultRow> read_results_csv(std::istream& in);

/// %.17g, so values survive a text round trip.
std::string format_double(double v);

}  // namespace pdctl
