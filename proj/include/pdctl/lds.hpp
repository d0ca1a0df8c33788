#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "pdctl/types.hpp"

namespace pdctl {

/// x_{t+1} = A x_t + B u_t + w_t.
class LinearSystem {
 public:
  LinearSystem(Matrix A, Matrix B);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  Eigen::Index state_dim() const { return A_.rows(); }
  Eigen::Index control_dim() const { return B_.cols(); }

  /// Closed-loop copy under u = -K x.
  LinearSystem closed_loop(const Matrix& K) const;

 private:
  Matrix A_;
  Matrix B_;
};

Vector step(const LinearSystem& system, const Vector& x, const Vector& u,
            const Vector& w);

/// Constants of the regret analysis. kappa >= 1, alpha in (0, 1].
struct AssumptionSet {
  double kappa = 1.0;
  double alpha = 1.0;
  double disturbance_bound = 1.0;  // W
  double gradient_scale = 1.0;     // G
  double cost_scale = 1.0;         // C
  std::optional<double> smoothness;

  void validate() const;

  /// D_{x,u} = max(10 kappa^4 W (h kappa + 1) / alpha, 1).
  double state_bound(int history) const;
};

struct StrongStability {
  double kappa;
  double alpha;
};

/// Certificate from an eigendecomposition A = Q diag(lambda) Q^{-1}. Empty when
/// A is defective (numerically) or has spectral radius >= 1.
std::optional<StrongStability> strong_stability(const Matrix& A,
                                                double tol = 1e-10);

double spectral_norm(const Matrix& M);
double spectral_radius(const Matrix& A);

/// c(x, u) with an optional analytic gradient. Costs without a gradient are
/// rejected by controllers and oracles that need one.
struct CostFunction {
  std::function<double(const Vector&, const Vector&)> value;
  std::function<std::pair<Vector, Vector>(const Vector&, const Vector&)>
      gradient;
  // Set when the cost is x'Qx + u'Ru; enables the exact quadratic oracle.
  std::optional<std::pair<Matrix, Matrix>> quadratic;

  double operator()(const Vector& x, const Vector& u) const {
    return value(x, u);
  }
};

CostFunction quadratic_cost(Matrix Q, Matrix R);

// Disturbance generators. Frequencies are in cycles per step.
namespace disturbance {
struct Zero {
  Eigen::Index dim;
};
struct IidGaussian {
  Eigen::Index dim;
  double sigma;
};
struct IidUniform {
  Vector low;
  Vector high;
};
struct Sinusoid {
  Vector amplitude;
  double frequency = 1.0 / 50.0;
  double phase = 0.0;
  Vector phases;  // optional per-coordinate offsets added to phase
};
struct Constant {
  Vector value;
};
struct Custom {
  std::vector<Vector> sequence;
};
}  // namespace disturbance

using DisturbanceKind =
    std::variant<disturbance::Zero, disturbance::IidGaussian,
                 disturbance::IidUniform, disturbance::Sinusoid,
                 disturbance::Constant, disturbance::Custom>;

struct DisturbanceGenerator {
  DisturbanceKind kind;
  // Outputs are projected onto the Euclidean ball of this radius.
  double bound = std::numeric_limits<double>::infinity();

  Eigen::Index dim() const;
};

/// Deterministic in (gen, t, seed): iid variants derive a fresh engine from
/// (seed, t), so the call order does not matter.
Vector generate_disturbance(const DisturbanceGenerator& gen, std::int64_t t,
                            std::uint64_t seed);

struct StepRecord {
  std::int64_t t = 0;
  Vector x;
  Vector u;
  Vector w;
  Vector w_hat;  // empty for controllers that do not form pseudo-disturbances
  Vector noise;  // empty when no exploration noise is injected
  double cost = 0.0;
};

using Trajectory = std::vector<StepRecord>;

}  // namespace pdctl
