#include "pdctl/results_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pdctl {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json aggregate_json(const Aggregate& a) {
  return {{"mean", number_or_null(a.mean)}, {"stderr", number_or_null(a.stderr_)}, {"n", a.n}};
}

json report_json(const RegretReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    json j = {{"seed", s.seed},
              {"ok", s.ok},
              {"diverged", s.diverged},
              {"steps", s.costs.size()},
              {"total_cost", number_or_null(s.total_cost())},
              {"average_cost", number_or_null(s.average_cost())},
              {"oracle_total", number_or_null(s.oracle_total())},
              {"final_regret", number_or_null(s.final_regret())}};
    if (!s.oracle_costs.empty()) {
      j["oracle_converged"] = s.oracle_converged;
      j["oracle_restart_costs"] = s.oracle_restart_costs;
    }
    if (!s.error.empty()) j["error"] = s.error;
    seeds.push_back(std::move(j));
  }
  return {{"config", json::parse(serialize_config(r.config))},
          {"schedule", {{"eta", r.schedule.eta}, {"delta", r.schedule.delta}, {"h", r.schedule.h}}},
          {"partial", r.partial},
          {"final_regret", aggregate_json(r.final_regret())},
          {"final_average_cost", aggregate_json(r.final_average_cost())},
          {"seeds", seeds}};
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_results_csv(const RegretReport& report, std::ostream& out) {
  out << kResultsHeader << '\n';
  for (const auto& s : report.seeds) {
    double cum = 0.0, ocum = 0.0;
    const bool has_oracle = s.oracle_costs.size() == s.costs.size() && !s.costs.empty();
    for (std::size_t t = 0; t < s.costs.size(); ++t) {
      cum += s.costs[t];
      double oc = std::nan(""), reg = std::nan("");
      if (has_oracle) {
        ocum += s.oracle_costs[t];
        oc = ocum;
        reg = cum - ocum;
      }
      out << s.seed << ',' << t << ',' << format_double(s.costs[t]) << ',' << format_double(cum)
          << ',' << format_double(oc) << ',' << format_double(reg) << '\n';
    }
  }
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  if (traj.empty()) {
    out << "t\n";
    return;
  }
  const auto& first = traj.front();
  out << 't';
  for (Eigen::Index i = 0; i < first.x.size(); ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < first.u.size(); ++i) out << ",u_" << i;
  for (Eigen::Index i = 0; i < first.w.size(); ++i) out << ",w_" << i;
  for (Eigen::Index i = 0; i < first.w_hat.size(); ++i) out << ",what_" << i;
  out << '\n';
  for (const auto& r : traj) {
    out << r.t;
    for (auto v : {&r.x, &r.u, &r.w, &r.w_hat})
      for (Eigen::Index i = 0; i < v->size(); ++i) out << ',' << format_double((*v)(i));
    out << '\n';
  }
}

std::string summary_json(const RegretReport& report) { return report_json(report).dump(2) + "\n"; }

std::string sweep_summary_json(const SweepReport& sweep) {
  json runs = json::array();
  for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
    runs.push_back({{"T", sweep.horizons[i]},
                    {"mean_regret", number_or_null(sweep.mean_regret[i])},
                    {"final_regret", aggregate_json(sweep.runs[i].final_regret())},
                    {"partial", sweep.runs[i].partial}});
  }
  json j = {{"horizons", sweep.horizons},
            {"runs", runs},
            {"slope_fit",
             {{"slope", number_or_null(sweep.fit.slope)},
              {"intercept", number_or_null(sweep.fit.intercept)},
              {"valid", sweep.fit.valid}}}};
  if (!sweep.runs.empty()) j["config"] = json::parse(serialize_config(sweep.runs.front().config));
  return j.dump(2) + "\n";
}

void write_results(const RegretReport& report, const std::filesystem::path& dir) {
  make_dir(dir);
  {
    const auto p = dir / "results.csv";
    auto out = open_out(p);
    write_results_csv(report, out);
    check_written(out, p);
  }
  {
    const auto p = dir / "summary.json";
    auto out = open_out(p);
    out << summary_json(report);
    check_written(out, p);
  }
  if (report.config.trajectories) {
    for (const auto& s : report.seeds) {
      const auto p = dir / ("trajectory_" + std::to_string(s.seed) + ".csv");
      auto out = open_out(p);
      write_trajectory_csv(s.trajectory, out);
      check_written(out, p);
    }
  }
}

void write_sweep(const SweepReport& sweep, const std::filesystem::path& dir) {
  make_dir(dir);
  for (std::size_t i = 0; i < sweep.runs.size(); ++i)
    write_results(sweep.runs[i], dir / ("T_" + std::to_string(sweep.horizons[i])));
  const auto p = dir / "summary.json";
  auto out = open_out(p);
  out << sweep_summary_json(sweep);
  check_written(out, p);
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw std::runtime_error("results.csv: unexpected header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[6];
    for (int k = 0; k < 6; ++k) {
      if (!std::getline(ss, f[k], ','))
        throw std::runtime_error("results.csv: short row at line " + std::to_string(lineno));
    }
    ResultRow r;
    r.seed = std::stoull(f[0]);
    r.t = std::stoll(f[1]);
    r.cost = std::strtod(f[2].c_str(), nullptr);
    r.cum_cost = std::strtod(f[3].c_str(), nullptr);
    r.oracle_cum_cost = std::strtod(f[4].c_str(), nullptr);
    r.regret = std::strtod(f[5].c_str(), nullptr);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace pdctl
