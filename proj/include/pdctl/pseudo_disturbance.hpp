#pragma once

#include <variant>

#include "pdctl/lds.hpp"
#include "pdctl/value.hpp"

namespace pdctl {

/// Expected-SARSA residual times Sigma^{-1} n (scalar cost feedback only).
/// The Q-value oracle is the noise-free Bellman form over `system`.
struct Pd1Estimator {
  Pd1Estimator(QuadraticValue value, Matrix sigma, LinearSystem system,
               CostFunction cost);

  QuadraticValue value;
  Matrix sigma;
  Matrix sigma_inv;
  LinearSystem system;
  CostFunction cost;
};

/// Differences of the vector value function of the linear cost c(x) = Lx.
struct Pd2Estimator {
  VectorValueTransform transform;
  LinearSystem system;
};

/// Residual against a (possibly mis-specified) simulator. Replications average
/// several simulator calls; a linear simulator is deterministic so one suffices.
struct Pd3Estimator {
  LinearSystem simulator;
  int replications = 1;
};

using PdEstimator = std::variant<Pd1Estimator, Pd2Estimator, Pd3Estimator>;

struct PdObservation {
  const Vector& x;
  const Vector& u;
  const Vector& x_next;
  double cost = 0.0;
  const Vector* noise = nullptr;  // required by PD1
};

Vector pd1_estimate(const Pd1Estimator& est, const Vector& x, const Vector& u,
                    const Vector& x_next, double cost, const Vector& noise);
Vector pd2_estimate(const Pd2Estimator& est, const Vector& x, const Vector& u,
                    const Vector& x_next);
Vector pd3_estimate(const Pd3Estimator& est, const Vector& x, const Vector& u,
                    const Vector& x_next);

Vector estimate(const PdEstimator& est, const PdObservation& obs);

/// Dimension d_w of the signal: d_u for PD1, rows(L) for PD2, d_x for PD3.
Eigen::Index output_dim(const PdEstimator& est);

/// The map with E[w_hat] = T w on an LDS under the estimator's base policy.
/// PD1: 2 g B'P (V = x'Px, so grad_u V picks up the factor 2);
/// PD2: g L (I - g A_pi)^{-1}; PD3: I.
struct LemmaTransform {
  Matrix T;
  bool invertible = false;
  double condition = std::numeric_limits<double>::infinity();
};

LemmaTransform lemma_transform(const PdEstimator& est);

}  // namespace pdctl
