#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pdctl/types.hpp"

namespace pdctl {

using Rng = std::mt19937_64;

/// Disturbance-action parameters M_1..M_h, each d_u x d_w.
class DacParams {
 public:
  DacParams() = default;
  explicit DacParams(std::vector<Matrix> blocks);
  static DacParams zero(int h, Eigen::Index du, Eigen::Index dw);

  int history() const { return static_cast<int>(blocks_.size()); }
  Eigen::Index control_dim() const { return blocks_.empty() ? 0 : blocks_[0].rows(); }
  Eigen::Index signal_dim() const { return blocks_.empty() ? 0 : blocks_[0].cols(); }
  Eigen::Index size() const { return history() * control_dim() * signal_dim(); }

  /// Block i for i = 1..h.
  const Matrix& operator[](int i) const { return blocks_.at(static_cast<std::size_t>(i - 1)); }
  Matrix& operator[](int i) { return blocks_.at(static_cast<std::size_t>(i - 1)); }
  const std::vector<Matrix>& blocks() const { return blocks_; }

  DacParams& operator+=(const DacParams& other);
  DacParams& operator-=(const DacParams& other);
  DacParams& operator*=(double s);
  friend DacParams operator+(DacParams a, const DacParams& b) { return a += b; }
  friend DacParams operator-(DacParams a, const DacParams& b) { return a -= b; }
  friend DacParams operator*(double s, DacParams a) { return a *= s; }

  double frobenius_norm() const;
  bool all_finite() const;
  bool same_shape(const DacParams& other) const;

  /// Column-major blocks concatenated in order M_1, ..., M_h.
  Vector flatten() const;
  static DacParams unflatten(const Vector& v, int h, Eigen::Index du, Eigen::Index dw);

 private:
  std::vector<Matrix> blocks_;
};

/// Newest-first window of past signals with zero padding before t = 0.
class SignalHistory {
 public:
  SignalHistory(std::size_t capacity, Eigen::Index dim);

  void push(Vector v);
  /// lag(k) = signal pushed k pushes ago, k >= 1; zero when not yet available.
  const Vector& lag(std::size_t k) const;
  /// [lag(1), ..., lag(n)].
  std::vector<Vector> window(std::size_t n, std::size_t first_lag = 1) const;
  std::size_t capacity() const { return capacity_; }
  Eigen::Index dim() const { return zero_.size(); }

 private:
  std::size_t capacity_;
  Vector zero_;
  std::deque<Vector> items_;
};

/// u = sum_i M_i w_{t-i}; window[i-1] holds w_{t-i}.
Vector dac_control(const DacParams& p, std::span<const Vector> window);

/// r_i = scale * 2 kappa^4 (1 - alpha)^i, i = 1..h.
std::vector<double> comparator_radii(int h, double kappa, double alpha,
                                     double scale = 1.0);

/// Euclidean projection onto the product of spectral-norm balls, by clipping
/// singular values of each block at its radius.
DacParams project_dac(const DacParams& p, std::span<const double> radii);
DacParams project_dac(const DacParams& p, double kappa, double alpha);
bool in_comparator_set(const DacParams& p, std::span<const double> radii,
                       double slack = 1e-9);

struct GradEstimate {
  DacParams G;
  std::int64_t t = 0;
};

/// Sphere-exploration estimate: block j = (d_u c / delta) sum_{i<h} n_{t-i} w_{t-i-j}'.
/// noise[i] = n_{t-i} (unit vectors, i < h); w_lags[k-1] = w_{t-k} for k <= 2h-1.
GradEstimate bandit_gradient(double cost, std::span<const Vector> noise,
                             std::span<const Vector> w_lags, double delta,
                             std::int64_t t = 0);

/// Gaussian-exploration estimate: block j = c sum_{i<h} (Sigma^{-1} n_{t-i}) w_{t-i-j}'.
GradEstimate gaussian_gradient(double cost, std::span<const Vector> noise,
                               std::span<const Vector> w_lags,
                               const Matrix& sigma_inv, std::int64_t t = 0);

/// d_u h^2 W G D^2 / delta.
double gradient_norm_bound(Eigen::Index du, int h, double W, double G,
                           double state_bound, double delta);

/// M <- Pi[M - eta g]; identity when no buffered gradient is available yet.
DacParams ogd_update_delayed(const DacParams& p, const GradEstimate* g, double eta,
                             std::span<const double> radii);

/// Holds gradients until they are `delay` steps old.
class DelayedGradientBuffer {
 public:
  explicit DelayedGradientBuffer(std::size_t delay) : delay_(delay) {}
  /// Stores g_t and returns g_{t-delay} once available.
  std::optional<GradEstimate> push(GradEstimate g);
  std::size_t pending() const { return items_.size(); }

 private:
  std::size_t delay_;
  std::deque<GradEstimate> items_;
};

/// Uniform on the unit sphere in R^d (normalized Gaussian).
Vector sample_sphere(Eigen::Index d, Rng& rng);

class GaussianSampler {
 public:
  explicit GaussianSampler(const Matrix& sigma);
  Vector operator()(Rng& rng) const;
  const Matrix& sigma() const { return sigma_; }
  const Matrix& sigma_inv() const { return sigma_inv_; }

 private:
  Matrix sigma_;
  Matrix sigma_inv_;
  Matrix chol_;
};

}  // namespace pdctl
