#include "pdctl/dac.hpp"

#include <cmath>

namespace pdctl {

DacParams::DacParams(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {
  detail::require(!blocks_.empty(), "DacParams: need at least one block");
  for (const auto& b : blocks_) {
    detail::require(b.rows() == blocks_[0].rows() && b.cols() == blocks_[0].cols(),
                    "DacParams: blocks must share dimensions");
  }
}

DacParams DacParams::zero(int h, Eigen::Index du, Eigen::Index dw) {
  detail::require(h >= 1 && du >= 1 && dw >= 1, "DacParams::zero: bad shape");
  return DacParams(std::vector<Matrix>(static_cast<std::size_t>(h), Matrix::Zero(du, dw)));
}

bool DacParams::same_shape(const DacParams& o) const {
  return history() == o.history() && control_dim() == o.control_dim() &&
         signal_dim() == o.signal_dim();
}

DacParams& DacParams::operator+=(const DacParams& o) {
  detail::require(same_shape(o), "DacParams: shape mismatch");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += o.blocks_[i];
  return *this;
}

DacParams& DacParams::operator-=(const DacParams& o) {
  detail::require(same_shape(o), "DacParams: shape mismatch");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] -= o.blocks_[i];
  return *this;
}

DacParams& DacParams::operator*=(double s) {
  for (auto& b : blocks_) b *= s;
  return *this;
}

double DacParams::frobenius_norm() const {
  double sq = 0.0;
  for (const auto& b : blocks_) sq += b.squaredNorm();
  return std::sqrt(sq);
}

bool DacParams::all_finite() const {
  for (const auto& b : blocks_) {
    if (!b.allFinite()) return false;
  }
  return true;
}

Vector DacParams::flatten() const {
  Vector v(size());
  Eigen::Index offset = 0;
  for (const auto& b : blocks_) {
    v.segment(offset, b.size()) = Eigen::Map<const Vector>(b.data(), b.size());
    offset += b.size();
  }
  return v;
}

DacParams DacParams::unflatten(const Vector& v, int h, Eigen::Index du, Eigen::Index dw) {
  detail::require_size(v.size(), h * du * dw, "DacParams::unflatten");
  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(h));
  for (int i = 0; i < h; ++i) {
    blocks.emplace_back(Eigen::Map<const Matrix>(v.data() + i * du * dw, du, dw));
  }
  return DacParams(std::move(blocks));
}

SignalHistory::SignalHistory(std::size_t capacity, Eigen::Index dim)
    : capacity_(capacity), zero_(Vector::Zero(dim)) {}

void SignalHistory::push(Vector v) {
  detail::require_size(v.size(), zero_.size(), "SignalHistory::push");
  items_.push_front(std::move(v));
  if (items_.size() > capacity_) items_.pop_back();
}

const Vector& SignalHistory::lag(std::size_t k) const {
  detail::require(k >= 1, "SignalHistory::lag: lag must be >= 1");
  if (k > items_.size()) return zero_;
  return items_[k - 1];
}

std::vector<Vector> SignalHistory::window(std::size_t n, std::size_t first_lag) const {
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(lag(first_lag + k));
  return out;
}

Vector dac_control(const DacParams& p, std::span<const Vector> window) {
  detail::require(window.size() >= static_cast<std::size_t>(p.history()),
                  "dac_control: window shorter than h");
  Vector u = Vector::Zero(p.control_dim());
  for (int i = 1; i <= p.history(); ++i) {
    const Vector& w = window[static_cast<std::size_t>(i - 1)];
    detail::require_size(w.size(), p.signal_dim(), "dac_control: signal");
    u.noalias() += p[i] * w;
  }
  return u;
}

std::vector<double> comparator_radii(int h, double kappa, double alpha, double scale) {
  detail::require(kappa >= 1.0, "comparator_radii: kappa must be >= 1");
  detail::require(alpha > 0.0 && alpha <= 1.0, "comparator_radii: alpha must lie in (0, 1]");
  std::vector<double> radii(static_cast<std::size_t>(h));
  for (int i = 1; i <= h; ++i) {
    radii[static_cast<std::size_t>(i - 1)] =
        scale * 2.0 * std::pow(kappa, 4) * std::pow(1.0 - alpha, i);
  }
  return radii;
}

DacParams project_dac(const DacParams& p, std::span<const double> radii) {
  detail::require(radii.size() == static_cast<std::size_t>(p.history()),
                  "project_dac: need one radius per block");
  detail::require(p.all_finite(), "project_dac: non-finite parameters");
  DacParams out = p;
  for (int i = 1; i <= p.history(); ++i) {
    const double r = radii[static_cast<std::size_t>(i - 1)];
    Matrix& block = out[i];
    Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= r) continue;
    const Vector clipped = s.cwiseMin(r);
    block = svd.matrixU() * clipped.asDiagonal() * svd.matrixV().transpose();
  }
  return out;
}

DacParams project_dac(const DacParams& p, double kappa, double alpha) {
  const auto radii = comparator_radii(p.history(), kappa, alpha);
  return project_dac(p, radii);
}

bool in_comparator_set(const DacParams& p, std::span<const double> radii, double slack) {
  for (int i = 1; i <= p.history(); ++i) {
    const double r = radii[static_cast<std::size_t>(i - 1)];
    Eigen::JacobiSVD<Matrix> svd(p[i]);
    if (svd.singularValues()(0) > r * (1.0 + slack) + slack) return false;
  }
  return true;
}

namespace {

GradEstimate zeroth_order_gradient(std::span<const Vector> scaled_noise,
                                   std::span<const Vector> w_lags, std::int64_t t) {
  const std::size_t h = scaled_noise.size();
  detail::require(h >= 1, "gradient: need h >= 1 noise vectors");
  detail::require(w_lags.size() + 1 >= 2 * h, "gradient: need 2h-1 signal lags");
  const Eigen::Index du = scaled_noise[0].size();
  const Eigen::Index dw = w_lags[0].size();
  DacParams G = DacParams::zero(static_cast<int>(h), du, dw);
  for (int j = 1; j <= static_cast<int>(h); ++j) {
    for (std::size_t i = 0; i < h; ++i) {
      // n_{t-i} paired with w_{t-i-j}
      G[j].noalias() += scaled_noise[i] * w_lags[i + static_cast<std::size_t>(j) - 1].transpose();
    }
  }
  return GradEstimate{std::move(G), t};
}

}  // namespace

GradEstimate bandit_gradient(double cost, std::span<const Vector> noise,
                             std::span<const Vector> w_lags, double delta,
                             std::int64_t t) {
  detail::require(delta > 0.0, "bandit_gradient: delta must be positive");
  detail::require(!noise.empty(), "bandit_gradient: empty noise history");
  const double scale = static_cast<double>(noise[0].size()) * cost / delta;
  std::vector<Vector> scaled;
  scaled.reserve(noise.size());
  for (const auto& n : noise) scaled.push_back(scale * n);
  return zeroth_order_gradient(scaled, w_lags, t);
}

GradEstimate gaussian_gradient(double cost, std::span<const Vector> noise,
                               std::span<const Vector> w_lags,
                               const Matrix& sigma_inv, std::int64_t t) {
  std::vector<Vector> scaled;
  scaled.reserve(noise.size());
  for (const auto& n : noise) scaled.push_back(cost * (sigma_inv * n));
  return zeroth_order_gradient(scaled, w_lags, t);
}

double gradient_norm_bound(Eigen::Index du, int h, double W, double G,
                           double state_bound, double delta) {
  return static_cast<double>(du) * h * h * W * G * state_bound * state_bound / delta;
}

DacParams ogd_update_delayed(const DacParams& p, const GradEstimate* g, double eta,
                             std::span<const double> radii) {
  detail::require(eta > 0.0, "ogd_update_delayed: eta must be positive");
  if (g == nullptr) return p;
  DacParams next = p;
  next -= eta * g->G;
  return project_dac(next, radii);
}

std::optional<GradEstimate> DelayedGradientBuffer::push(GradEstimate g) {
  items_.push_back(std::move(g));
  if (items_.size() <= delay_) return std::nullopt;
  GradEstimate out = std::move(items_.front());
  items_.pop_front();
  return out;
}

Vector sample_sphere(Eigen::Index d, Rng& rng) {
  detail::require(d >= 1, "sample_sphere: dimension must be >= 1");
  std::normal_distribution<double> normal;
  Vector v(d);
  double norm = 0.0;
  do {
    for (auto& x : v) x = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

GaussianSampler::GaussianSampler(const Matrix& sigma) : sigma_(sigma) {
  detail::require(sigma.rows() == sigma.cols(), "GaussianSampler: Sigma must be square");
  Eigen::LLT<Matrix> llt(sigma);
  detail::require(llt.info() == Eigen::Success,
                  "GaussianSampler: Sigma must be positive definite");
  chol_ = llt.matrixL();
  sigma_inv_ = llt.solve(Matrix::Identity(sigma.rows(), sigma.cols()));
}

Vector GaussianSampler::operator()(Rng& rng) const {
  std::normal_distribution<double> normal;
  Vector z(sigma_.rows());
  for (auto& x : z) x = normal(rng);
  return chol_ * z;
}

}  // namespace pdctl
