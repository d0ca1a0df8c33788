#include "pdctl/controllers.hpp"

#include <algorithm>
#include <cmath>

#include "pdctl/transfer.hpp"

namespace pdctl {

namespace {

DacParams step_and_project(const DacParams& M, const DacParams& G, double eta,
                           const std::vector<double>& radii) {
  DacParams next = M;
  next -= eta * G;
  if (radii.empty()) return next;
  return project_dac(next, radii);
}

void check_radii(const std::vector<double>& radii, int h) {
  detail::require(radii.empty() || radii.size() == static_cast<std::size_t>(h),
                  "controller: need one radius per DAC block");
  for (double r : radii) detail::require(r >= 0.0, "controller: negative radius");
}

}  // namespace

Schedule default_params(std::int64_t T, Eigen::Index du, Eigen::Index dx,
                        double kappa, double alpha, bool smooth) {
  detail::require(T >= 2, "default_params: T must be >= 2");
  detail::require(du >= 1 && dx >= 1, "default_params: dimensions must be >= 1");
  detail::require(kappa >= 1.0 && alpha > 0.0 && alpha <= 1.0,
                  "default_params: need kappa >= 1, alpha in (0, 1]");
  const double Td = static_cast<double>(T);
  const double dmin = static_cast<double>(std::min(du, dx));
  const double dU = static_cast<double>(du);
  Schedule s;
  if (smooth) {
    s.delta = std::cbrt(dU * dmin) * std::pow(Td, -1.0 / 6.0);
    s.eta = std::cbrt(dmin) / (std::pow(dU, 2.0 / 3.0) * std::pow(Td, 2.0 / 3.0));
  } else {
    s.eta = std::sqrt(dmin / dU) * std::pow(Td, -0.75);
    s.delta = std::sqrt(dU * dmin) * std::pow(Td, -0.25);
  }
  const double raw = std::ceil(std::log(2.0 * kappa * kappa * kappa * Td) / alpha);
  const double cap = std::max(1.0, std::floor(Td / 4.0));
  s.h = static_cast<int>(std::clamp(raw, 1.0, cap));
  return s;
}

Eigen::Index signal_dim(const SignalSource& source) {
  if (const auto* td = std::get_if<TrueDisturbance>(&source)) return td->system.state_dim();
  return output_dim(std::get<PdEstimator>(source));
}

Vector compute_signal(const SignalSource& source, const PdObservation& obs) {
  if (const auto* td = std::get_if<TrueDisturbance>(&source)) {
    return obs.x_next - td->system.A() * obs.x - td->system.B() * obs.u;
  }
  return estimate(std::get<PdEstimator>(source), obs);
}

Vector lqr_act(const Matrix& K, const Vector& x) {
  detail::require_size(x.size(), K.cols(), "lqr_act: state");
  return -(K * x);
}

DacControllerBase::DacControllerBase(Matrix K, int h, Eigen::Index dw,
                                     std::vector<double> radii)
    : K_(std::move(K)),
      M_(),
      radii_(std::move(radii)),
      signals_(static_cast<std::size_t>(2 * std::max(h, 1) + 1), std::max<Eigen::Index>(dw, 1)) {
  detail::require(h >= 1, "controller: h must be >= 1");
  detail::require(K_.rows() >= 1 && K_.cols() >= 1,
                  "controller: base gain must be d_u x d_x (use zeros for none)");
  detail::require(dw >= 1, "controller: signal dimension must be >= 1");
  check_radii(radii_, h);
  M_ = DacParams::zero(h, K_.rows(), dw);
}

Vector DacControllerBase::base_plus_dac(const Vector& x) const {
  const auto window = signals_.window(static_cast<std::size_t>(M_.history()));
  return lqr_act(K_, x) + dac_control(M_, window);
}

// ---------------------------------------------------------------------------

GpcFullInfo::GpcFullInfo(LinearSystem system, CostFunction cost, GpcOptions options)
    : DacControllerBase(options.K.size() ? options.K
                                         : Matrix::Zero(system.control_dim(), system.state_dim()),
                        options.h, system.state_dim(), options.radii),
      system_(std::move(system)),
      cost_(std::move(cost)),
      eta_(options.eta) {
  detail::require(eta_ > 0.0, "gpc: eta must be positive");
  detail::require_size(K_.rows(), system_.control_dim(), "gpc: base gain rows");
  detail::require_size(K_.cols(), system_.state_dim(), "gpc: base gain cols");
  if (!cost_.gradient) throw UnsupportedCost("gpc: cost has no gradient oracle");
  A_cl_ = system_.A() - system_.B() * K_;
}

Vector GpcFullInfo::do_act(const Vector& x) {
  x_ = x;
  u_ = base_plus_dac(x);
  return u_;
}

void GpcFullInfo::do_observe(const Vector& x_next, double) {
  Vector w = x_next - system_.A() * x_ - system_.B() * u_;
  signals_.push(w);
  w_hat_ = std::move(w);
  const auto lags = signals_.window(static_cast<std::size_t>(2 * M_.history() + 1));
  const IdealizedCost ic = idealized_cost(A_cl_, system_.B(), K_, cost_, M_, lags);
  M_ = step_and_project(M_, ic.gradient, eta_, radii_);
}

// ---------------------------------------------------------------------------

BanditGpc::BanditGpc(SignalSource source, BanditGpcOptions options)
    : DacControllerBase(options.K, options.h, signal_dim(source), options.radii),
      source_(std::move(source)),
      eta_(options.eta),
      delta_(options.delta),
      rng_(options.seed),
      noise_history_(static_cast<std::size_t>(options.h), options.K.rows()),
      pending_(static_cast<std::size_t>(options.h)) {
  detail::require(eta_ > 0.0, "rbpc: eta must be positive");
  detail::require(delta_ > 0.0, "rbpc: delta must be positive");
}

Vector BanditGpc::do_act(const Vector& x) {
  x_ = x;
  unit_noise_ = sample_sphere(K_.rows(), rng_);
  noise_ = delta_ * unit_noise_;
  u_ = base_plus_dac(x) + noise_;
  return u_;
}

void BanditGpc::do_observe(const Vector& x_next, double cost) {
  const PdObservation obs{x_, u_, x_next, cost, &noise_};
  w_hat_ = compute_signal(source_, obs);
  const int h = M_.history();
  noise_history_.push(unit_noise_);
  const auto noise = noise_history_.window(static_cast<std::size_t>(h));
  const auto w_lags = signals_.window(static_cast<std::size_t>(2 * h - 1));
  auto ready = pending_.push(bandit_gradient(cost, noise, w_lags, delta_, steps()));
  if (ready) M_ = step_and_project(M_, ready->G, eta_, radii_);
  signals_.push(w_hat_);
}

// ---------------------------------------------------------------------------

MfGpc::MfGpc(SignalSource source, MfGpcOptions options)
    : DacControllerBase(options.K, options.h, signal_dim(source), options.radii),
      source_(std::move(source)),
      options_(std::move(options)),
      sampler_(options_.sigma),
      rng_(options_.seed),
      noise_history_(static_cast<std::size_t>(options_.h), options_.K.rows()),
      pending_(static_cast<std::size_t>(std::max(options_.delay, 0))) {
  detail::require(options_.eta > 0.0, "mfgpc: eta must be positive");
  detail::require_size(options_.sigma.rows(), K_.rows(), "mfgpc: sigma");
  detail::require(options_.weight_decay >= 0.0 && options_.weight_decay <= 1.0,
                  "mfgpc: weight decay must lie in [0, 1]");
  detail::require(options_.update_period >= 1, "mfgpc: update period must be >= 1");
  detail::require(options_.delay >= 0, "mfgpc: delay must be >= 0");
}

Vector MfGpc::do_act(const Vector& x) {
  x_ = x;
  noise_ = sampler_(rng_);
  u_ = base_plus_dac(x) + noise_;
  return u_;
}

void MfGpc::do_observe(const Vector& x_next, double cost) {
  const PdObservation obs{x_, u_, x_next, cost, &noise_};
  w_hat_ = compute_signal(source_, obs);
  const int h = M_.history();
  noise_history_.push(noise_);
  const auto noise = noise_history_.window(static_cast<std::size_t>(h));
  const auto w_lags = signals_.window(static_cast<std::size_t>(2 * h - 1));
  const std::int64_t t = steps();
  auto ready = pending_.push(gaussian_gradient(cost, noise, w_lags, sampler_.sigma_inv(), t));
  if (ready && t % options_.update_period == 0) {
    if (options_.weight_decay > 0.0) M_ *= 1.0 - options_.weight_decay;
    M_ -= options_.eta * ready->G;
    if (options_.project && !radii_.empty()) M_ = project_dac(M_, radii_);
  }
  signals_.push(w_hat_);
}

// ---------------------------------------------------------------------------

Bpc::Bpc(LinearSystem system, BpcOptions options)
    : DacControllerBase(options.K, options.h, system.state_dim(), options.radii),
      system_(std::move(system)),
      eta_(options.eta),
      delta_(options.delta),
      rng_(options.seed) {
  detail::require(eta_ > 0.0, "bpc: eta must be positive");
  detail::require(delta_ > 0.0, "bpc: exploration radius must be positive");
}

GradEstimate Bpc::gradient(double cost, const DacParams& perturbation, double delta,
                           std::int64_t t) {
  detail::require(delta > 0.0, "bpc: exploration radius must be positive");
  GradEstimate g{perturbation, t};
  g.G *= static_cast<double>(perturbation.size()) * cost / delta;
  return g;
}

Vector Bpc::do_act(const Vector& x) {
  x_ = x;
  const int h = M_.history();
  DacParams E = DacParams::unflatten(sample_sphere(M_.size(), rng_), h,
                                     M_.control_dim(), M_.signal_dim());
  const DacParams played = M_ + delta_ * E;
  perturbations_.push_back(std::move(E));
  const auto window = signals_.window(static_cast<std::size_t>(h));
  u_ = lqr_act(K_, x) + dac_control(played, window);
  return u_;
}

void Bpc::do_observe(const Vector& x_next, double cost) {
  w_hat_ = x_next - system_.A() * x_ - system_.B() * u_;
  signals_.push(w_hat_);
  if (perturbations_.size() > static_cast<std::size_t>(M_.history())) {
    const GradEstimate g = gradient(cost, perturbations_.front(), delta_, steps());
    perturbations_.pop_front();
    M_ = step_and_project(M_, g.G, eta_, radii_);
  }
}

}  // namespace pdctl
