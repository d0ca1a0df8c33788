#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdctl/lds.hpp"

namespace pdctl {

struct ControllerSpec {
  std::string type = "rbpc";          // zero | lqr | gpc | rbpc | bpc | mfgpc
  std::string schedule = "theorem";   // theorem | smooth | manual
  std::optional<double> eta;          // explicit values override the schedule
  std::optional<double> delta;
  std::optional<int> h;
  double eta_scale = 1.0;
  double delta_scale = 1.0;
  double radius_scale = 1.0;
  bool project = true;
  std::string signal = "true";        // true | pd1 | pd2 | pd3 (rbpc, mfgpc)
  double gamma = 0.9;                 // discount of the PD value functions
  std::optional<Matrix> sigma;        // mfgpc covariance; default (delta^2 / d_u) I
  std::optional<Matrix> L;            // pd2 linear cost; default I
  std::optional<Matrix> sim_A;        // pd3 simulator; default the true system
  std::optional<Matrix> sim_B;
  double weight_decay = 0.0;
  int update_period = 1;
  int delay = 0;
  std::optional<double> kappa;        // override the certificate of A - BK
  std::optional<double> alpha;
};

struct ExperimentConfig {
  std::string name = "custom";
  Matrix A;
  Matrix B;
  std::string base_gain = "lqr";      // lqr | zero | explicit
  std::optional<Matrix> K;            // used when base_gain == explicit
  DisturbanceGenerator disturbance{disturbance::Zero{1}};
  Matrix Q;
  Matrix R;
  ControllerSpec controller;
  std::int64_t T = 10000;
  std::vector<std::uint64_t> seeds;
  std::optional<Vector> x0;
  bool oracle = true;
  int oracle_restarts = 5;
  int oracle_iterations = 2000;
  bool trajectories = false;
  std::string output = "results";

  /// Dimension consistency and ranges; throws ConfigError.
  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ExperimentConfig preset(const std::string& name);
/// A preset name or a path to a config file.
ExperimentConfig resolve_config(const std::string& name_or_path);

}  // namespace pdctl
