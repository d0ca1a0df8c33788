#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pdctl/dac.hpp"
#include "pdctl/lds.hpp"

namespace pdctl {

struct OracleOptions {
  int max_iterations = 2000;
  double tolerance = 1e-8;  // on the gradient-mapping norm, relative to max(1, |grad J(0)|)
  int restarts = 5;
  std::uint64_t seed = 0;
  std::optional<Vector> x0;
};

struct OracleResult {
  DacParams M;
  double total_cost = 0.0;
  std::vector<double> step_costs;   // exact rollout under M
  std::vector<double> restart_costs;
  bool converged = false;
  int iterations = 0;  // of the best restart
};

/// Per-step costs of the stationary policy u_t = -K x_t + sum_i M_i w_{t-i}
/// replayed on the realized disturbances (w_s = 0 for s < 0).
std::vector<double> counterfactual_costs(const LinearSystem& system, const Matrix& K,
                                         const CostFunction& cost, const DacParams& M,
                                         std::span<const Vector> w,
                                         const std::optional<Vector>& x0 = std::nullopt);

/// Sum of counterfactual_costs and its gradient in M (reverse-mode through the
/// rollout). Needs cost.gradient.
struct CounterfactualGradient {
  double value = 0.0;
  DacParams gradient;
};
CounterfactualGradient counterfactual_gradient(const LinearSystem& system, const Matrix& K,
                                               const CostFunction& cost, const DacParams& M,
                                               std::span<const Vector> w,
                                               const std::optional<Vector>& x0 = std::nullopt);

/// Best stationary DAC in the comparator set in hindsight. Empty radii mean no
/// constraint. Quadratic costs are solved on the exact quadratic form of the
/// total cost; other costs need a gradient oracle.
OracleResult hindsight_dac_oracle(const LinearSystem& system, const Matrix& K,
                                  const CostFunction& cost, std::span<const Vector> w,
                                  int h, std::span<const double> radii,
                                  const OracleOptions& options = {});

OracleResult hindsight_dac_oracle(const LinearSystem& system, const Matrix& K,
                                  const CostFunction& cost, std::span<const Vector> w,
                                  int h, double kappa, double alpha,
                                  const OracleOptions& options = {});

}  // namespace pdctl
