#include "pdctl/rollout.hpp"

#include <cmath>
#include <sstream>

namespace pdctl {

Vector Controller::act(const Vector& x) {
  if (awaiting_observation_) {
    throw std::logic_error(name() + ": act() called twice without observe()");
  }
  awaiting_observation_ = true;
  return do_act(x);
}

void Controller::observe(const Vector& x_next, double cost) {
  if (!awaiting_observation_) {
    throw std::logic_error(name() + ": observe() called without act()");
  }
  awaiting_observation_ = false;
  do_observe(x_next, cost);
  ++steps_;
}

Trajectory rollout(const LinearSystem& system, Controller& controller,
                   const DisturbanceGenerator& gen, const CostFunction& cost,
                   std::int64_t horizon, const RolloutOptions& options) {
  detail::require(horizon >= 1, "rollout: horizon must be >= 1");
  detail::require_size(gen.dim(), system.state_dim(), "rollout: disturbance");
  Vector x = options.x0.value_or(Vector::Zero(system.state_dim()));
  detail::require_size(x.size(), system.state_dim(), "rollout: x0");

  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(horizon));
  for (std::int64_t t = 0; t < horizon; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.x = x;
    rec.u = controller.act(x);
    rec.noise = controller.last_noise();
    rec.w = generate_disturbance(gen, t, options.disturbance_seed);
    rec.cost = cost(rec.x, rec.u);
    Vector x_next = step(system, rec.x, rec.u, rec.w);

    const bool finite = x_next.allFinite() && rec.u.allFinite() &&
                        std::isfinite(rec.cost);
    if (!finite || x_next.norm() > options.divergence_threshold) {
      std::ostringstream msg;
      msg << controller.name() << " diverged at t=" << t
          << " (|x_next|=" << x_next.norm() << ")";
      throw Diverged(msg.str(), std::move(traj));
    }
    controller.observe(x_next, rec.cost);
    rec.w_hat = controller.last_w_hat();
    traj.push_back(std::move(rec));
    x = std::move(x_next);
  }
  return traj;
}

double step_consistency_error(const LinearSystem& system, const Trajectory& traj) {
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const auto& r = traj[i];
    const Vector predicted = step(system, r.x, r.u, r.w);
    err = std::max(err, (traj[i + 1].x - predicted).cwiseAbs().maxCoeff());
  }
  return err;
}

}  // namespace pdctl
