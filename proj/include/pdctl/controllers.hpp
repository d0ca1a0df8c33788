#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "pdctl/controller.hpp"
#include "pdctl/dac.hpp"
#include "pdctl/lds.hpp"
#include "pdctl/pseudo_disturbance.hpp"

namespace pdctl {

struct Schedule {
  double eta = 0.0;
  double delta = 0.0;
  int h = 1;
};

/// Step size and exploration radius of the bandit regret bound, d_min = min(d_x, d_u):
///   convex: eta = sqrt(d_min/d_u) T^{-3/4},  delta = sqrt(d_u d_min) T^{-1/4}
///   smooth: eta = d_min^{1/3} / (d_u^{2/3} T^{2/3}),  delta = (d_u d_min)^{1/3} T^{-1/6}
/// and h = ceil(log(2 kappa^3 T) / alpha), clamped to [1, T/4].
Schedule default_params(std::int64_t T, Eigen::Index du, Eigen::Index dx,
                        double kappa, double alpha, bool smooth = false);

/// Recovers w_t = x_{t+1} - A x_t - B u_t from a known model.
struct TrueDisturbance {
  LinearSystem system;
};

using SignalSource = std::variant<TrueDisturbance, PdEstimator>;

Eigen::Index signal_dim(const SignalSource& source);
Vector compute_signal(const SignalSource& source, const PdObservation& obs);

class ZeroController final : public Controller {
 public:
  explicit ZeroController(Eigen::Index du) : du_(du) {}
  std::string name() const override { return "zero"; }

 protected:
  Vector do_act(const Vector&) override { return Vector::Zero(du_); }
  void do_observe(const Vector&, double) override {}

 private:
  Eigen::Index du_;
};

Vector lqr_act(const Matrix& K, const Vector& x);

class LqrController final : public Controller {
 public:
  explicit LqrController(Matrix K) : K_(std::move(K)) {}
  std::string name() const override { return "lqr"; }

 protected:
  Vector do_act(const Vector& x) override { return lqr_act(K_, x); }
  void do_observe(const Vector&, double) override {}

 private:
  Matrix K_;
};

/// Shared state of DAC controllers: base gain, parameters, signal history.
class DacControllerBase : public Controller {
 public:
  const DacParams& params() const { return M_; }
  const Matrix& base_gain() const { return K_; }
  const std::vector<double>& radii() const { return radii_; }

 protected:
  DacControllerBase(Matrix K, int h, Eigen::Index dw, std::vector<double> radii);

  Vector base_plus_dac(const Vector& x) const;

  Matrix K_;
  DacParams M_;
  std::vector<double> radii_;
  SignalHistory signals_;
  Vector x_;
  Vector u_;
};

struct GpcOptions {
  int h = 5;
  double eta = 1e-3;
  Matrix K;                    // base gain, d_u x d_x
  std::vector<double> radii;   // empty: no projection
};

/// Full-information GPC: observes w_t and descends the exact gradient of the
/// stationary idealized cost.
class GpcFullInfo final : public DacControllerBase {
 public:
  GpcFullInfo(LinearSystem system, CostFunction cost, GpcOptions options);
  std::string name() const override { return "gpc"; }

 protected:
  Vector do_act(const Vector& x) override;
  void do_observe(const Vector& x_next, double cost) override;

 private:
  LinearSystem system_;
  Matrix A_cl_;
  CostFunction cost_;
  double eta_;
};

struct BanditGpcOptions {
  int h = 5;
  double eta = 1e-3;
  double delta = 0.1;
  Matrix K;
  std::vector<double> radii;
  std::uint64_t seed = 0;
};

/// Sphere exploration in action space with h-delayed projected OGD.
class BanditGpc final : public DacControllerBase {
 public:
  BanditGpc(SignalSource source, BanditGpcOptions options);
  std::string name() const override { return "rbpc"; }

 protected:
  Vector do_act(const Vector& x) override;
  void do_observe(const Vector& x_next, double cost) override;

 private:
  SignalSource source_;
  double eta_;
  double delta_;
  Rng rng_;
  SignalHistory noise_history_;  // unit sphere draws n_t
  DelayedGradientBuffer pending_;
  Vector unit_noise_;
};

struct MfGpcOptions {
  int h = 5;
  double eta = 1e-3;
  Matrix sigma;               // exploration covariance, d_u x d_u
  Matrix K;
  std::vector<double> radii;
  bool project = true;
  double weight_decay = 0.0;  // M <- (1 - rho) M before each gradient step
  int update_period = 1;
  int delay = 0;
  std::uint64_t seed = 0;
};

/// Gaussian exploration with pseudo-disturbance features.
class MfGpc final : public DacControllerBase {
 public:
  MfGpc(SignalSource source, MfGpcOptions options);
  std::string name() const override { return "mfgpc"; }

 protected:
  Vector do_act(const Vector& x) override;
  void do_observe(const Vector& x_next, double cost) override;

 private:
  SignalSource source_;
  MfGpcOptions options_;
  GaussianSampler sampler_;
  Rng rng_;
  SignalHistory noise_history_;
  DelayedGradientBuffer pending_;
};

struct BpcOptions {
  int h = 5;
  double eta = 1e-3;
  double delta = 0.1;  // parameter-space exploration radius
  Matrix K;
  std::vector<double> radii;
  std::uint64_t seed = 0;
};

/// Parameter-space exploration baseline: plays M + delta E_t with E_t uniform
/// on the unit Frobenius sphere, estimate dim(M) c_t / delta * E_{t-h}.
class Bpc final : public DacControllerBase {
 public:
  Bpc(LinearSystem system, BpcOptions options);
  std::string name() const override { return "bpc"; }

  /// dim(M) c / delta * E for a given perturbation.
  static GradEstimate gradient(double cost, const DacParams& perturbation,
                               double delta, std::int64_t t = 0);

 protected:
  Vector do_act(const Vector& x) override;
  void do_observe(const Vector& x_next, double cost) override;

 private:
  LinearSystem system_;
  double eta_;
  double delta_;
  Rng rng_;
  std::deque<DacParams> perturbations_;
};

}  // namespace pdctl
