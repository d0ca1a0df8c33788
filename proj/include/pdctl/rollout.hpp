#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>

#include "pdctl/controller.hpp"
#include "pdctl/lds.hpp"

namespace pdctl {

struct RolloutOptions {
  std::optional<Vector> x0;  // zero when absent
  double divergence_threshold = std::numeric_limits<double>::infinity();
  std::uint64_t disturbance_seed = 0;
};

/// Raised when the state leaves the divergence guard or turns non-finite. The
/// partial trajectory holds every completed step.
class Diverged : public std::runtime_error {
 public:
  Diverged(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

Trajectory rollout(const LinearSystem& system, Controller& controller,
                   const DisturbanceGenerator& gen, const CostFunction& cost,
                   std::int64_t horizon, const RolloutOptions& options = {});

/// Max over t of |x_{t+1} - (A x_t + B u_t + w_t)|; the step-consistency check.
double step_consistency_error(const LinearSystem& system, const Trajectory& traj);

}  // namespace pdctl
