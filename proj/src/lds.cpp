#include "pdctl/lds.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace pdctl {

LinearSystem::LinearSystem(Matrix A, Matrix B) : A_(std::move(A)), B_(std::move(B)) {
  detail::require(A_.rows() == A_.cols(), "LinearSystem: A must be square");
  detail::require(A_.rows() > 0, "LinearSystem: empty state");
  detail::require(B_.rows() == A_.rows(), "LinearSystem: B must have d_x rows");
  detail::require(B_.cols() > 0, "LinearSystem: empty control");
  detail::require(A_.allFinite() && B_.allFinite(),
                  "LinearSystem: non-finite entries");
}

LinearSystem LinearSystem::closed_loop(const Matrix& K) const {
  detail::require(K.rows() == control_dim() && K.cols() == state_dim(),
                  "closed_loop: K must be d_u x d_x");
  return LinearSystem(A_ - B_ * K, B_);
}

Vector step(const LinearSystem& system, const Vector& x, const Vector& u,
            const Vector& w) {
  detail::require_size(x.size(), system.state_dim(), "step: x");
  detail::require_size(u.size(), system.control_dim(), "step: u");
  detail::require_size(w.size(), system.state_dim(), "step: w");
  return system.A() * x + system.B() * u + w;
}

void AssumptionSet::validate() const {
  detail::require(kappa >= 1.0, "AssumptionSet: kappa must be >= 1");
  detail::require(alpha > 0.0 && alpha <= 1.0,
                  "AssumptionSet: alpha must lie in (0, 1]");
  detail::require(disturbance_bound > 0.0 && gradient_scale > 0.0 &&
                      cost_scale > 0.0,
                  "AssumptionSet: W, G, C must be positive");
  detail::require(!smoothness || *smoothness > 0.0,
                  "AssumptionSet: smoothness must be positive");
}

double AssumptionSet::state_bound(int history) const {
  const double k4 = std::pow(kappa, 4);
  return std::max(10.0 / alpha * k4 * disturbance_bound * (history * kappa + 1.0),
                  1.0);
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

double spectral_radius(const Matrix& A) {
  detail::require(A.rows() == A.cols(), "spectral_radius: A must be square");
  return Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

std::optional<StrongStability> strong_stability(const Matrix& A, double tol) {
  detail::require(A.rows() == A.cols() && A.rows() > 0,
                  "strong_stability: A must be square");
  detail::require(A.allFinite(), "strong_stability: non-finite entries");

  Eigen::EigenSolver<Matrix> eig(A);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const double rho = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(rho < 1.0)) return std::nullopt;

  const Eigen::MatrixXcd Q = eig.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Q);
  const auto& s = svd.singularValues();
  const double smallest = s(s.size() - 1);
  // Defective (or numerically defective) A.
  if (!(smallest > tol * s(0))) return std::nullopt;

  const double norm_q = s(0);
  const double norm_q_inv = 1.0 / smallest;
  return StrongStability{std::max({norm_q, norm_q_inv, 1.0}), 1.0 - rho};
}

CostFunction quadratic_cost(Matrix Q, Matrix R) {
  detail::require(Q.rows() == Q.cols() && R.rows() == R.cols(),
                  "quadratic_cost: Q and R must be square");
  CostFunction cost;
  cost.value = [Q, R](const Vector& x, const Vector& u) {
    return x.dot(Q * x) + u.dot(R * u);
  };
  cost.gradient = [Q, R](const Vector& x, const Vector& u) {
    return std::pair<Vector, Vector>((Q + Q.transpose()) * x,
                                     (R + R.transpose()) * u);
  };
  cost.quadratic = std::pair<Matrix, Matrix>(std::move(Q), std::move(R));
  return cost;
}

namespace {

std::mt19937_64 engine_for(std::uint64_t seed, std::int64_t t) {
  const auto tt = static_cast<std::uint64_t>(t);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tt),
                    static_cast<std::uint32_t>(tt >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

struct DimVisitor {
  Eigen::Index operator()(const disturbance::Zero& g) const { return g.dim; }
  Eigen::Index operator()(const disturbance::IidGaussian& g) const { return g.dim; }
  Eigen::Index operator()(const disturbance::IidUniform& g) const { return g.low.size(); }
  Eigen::Index operator()(const disturbance::Sinusoid& g) const { return g.amplitude.size(); }
  Eigen::Index operator()(const disturbance::Constant& g) const { return g.value.size(); }
  Eigen::Index operator()(const disturbance::Custom& g) const {
    return g.sequence.empty() ? 0 : g.sequence.front().size();
  }
};

}  // namespace

Eigen::Index DisturbanceGenerator::dim() const {
  return std::visit(DimVisitor{}, kind);
}

Vector generate_disturbance(const DisturbanceGenerator& gen, std::int64_t t,
                            std::uint64_t seed) {
  detail::require(t >= 0, "generate_disturbance: t must be non-negative");
  Vector w = std::visit(
      [&](const auto& g) -> Vector {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, disturbance::Zero>) {
          return Vector::Zero(g.dim);
        } else if constexpr (std::is_same_v<G, disturbance::IidGaussian>) {
          auto rng = engine_for(seed, t);
          std::normal_distribution<double> normal(0.0, g.sigma);
          Vector out(g.dim);
          for (auto& v : out) v = normal(rng);
          return out;
        } else if constexpr (std::is_same_v<G, disturbance::IidUniform>) {
          detail::require(g.low.size() == g.high.size(),
                          "IidUniform: low/high size mismatch");
          auto rng = engine_for(seed, t);
          std::uniform_real_distribution<double> unit(0.0, 1.0);
          Vector out(g.low.size());
          for (Eigen::Index i = 0; i < out.size(); ++i) {
            out(i) = g.low(i) + (g.high(i) - g.low(i)) * unit(rng);
          }
          return out;
        } else if constexpr (std::is_same_v<G, disturbance::Sinusoid>) {
          const double angle =
              2.0 * std::numbers::pi * g.frequency * static_cast<double>(t) +
              g.phase;
          if (g.phases.size() == 0) return g.amplitude * std::sin(angle);
          detail::require_size(g.phases.size(), g.amplitude.size(), "sinusoid phases");
          return g.amplitude.cwiseProduct((g.phases.array() + angle).sin().matrix());
        } else if constexpr (std::is_same_v<G, disturbance::Constant>) {
          return g.value;
        } else {
          if (t >= static_cast<std::int64_t>(g.sequence.size())) {
            throw OutOfRange("generate_disturbance: custom sequence has " +
                             std::to_string(g.sequence.size()) +
                             " entries, requested t=" + std::to_string(t));
          }
          return g.sequence[static_cast<std::size_t>(t)];
        }
      },
      gen.kind);
  const double norm = w.norm();
  if (norm > gen.bound) w *= gen.bound / norm;
  return w;
}

}  // namespace pdctl
