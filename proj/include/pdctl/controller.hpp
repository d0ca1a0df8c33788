#pragma once

#include <cstdint>
#include <string>

#include "pdctl/types.hpp"

namespace pdctl {

/// act/observe interface shared by every controller. Each act() must be
/// followed by exactly one observe() before the next act(); violations throw
/// std::logic_error.
class Controller {
 public:
  virtual ~Controller() = default;

  Vector act(const Vector& x);
  void observe(const Vector& x_next, double cost);

  virtual std::string name() const = 0;

  /// Exploration noise injected by the most recent act() (empty if none).
  const Vector& last_noise() const { return noise_; }
  /// Pseudo-disturbance formed by the most recent observe() (empty if none).
  const Vector& last_w_hat() const { return w_hat_; }
  std::int64_t steps() const { return steps_; }

 protected:
  virtual Vector do_act(const Vector& x) = 0;
  virtual void do_observe(const Vector& x_next, double cost) = 0;

  Vector noise_;
  Vector w_hat_;

 private:
  bool awaiting_observation_ = false;
  std::int64_t steps_ = 0;
};

}  // namespace pdctl
