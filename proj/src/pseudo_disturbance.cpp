#include "pdctl/pseudo_disturbance.hpp"

namespace pdctl {

Pd1Estimator::Pd1Estimator(QuadraticValue value_, Matrix sigma_,
                           LinearSystem system_, CostFunction cost_)
    : value(std::move(value_)),
      sigma(std::move(sigma_)),
      system(std::move(system_)),
      cost(std::move(cost_)) {
  detail::require(sigma.rows() == sigma.cols() &&
                      sigma.rows() == system.control_dim(),
                  "Pd1Estimator: Sigma must be d_u x d_u");
  detail::require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                  "Pd1Estimator: Sigma must be symmetric");
  Eigen::LLT<Matrix> llt(sigma);
  detail::require(llt.info() == Eigen::Success,
                  "Pd1Estimator: Sigma must be positive definite");
  sigma_inv = llt.solve(Matrix::Identity(sigma.rows(), sigma.cols()));
  detail::require_size(value.P.rows(), system.state_dim(), "Pd1Estimator: P");
}

Vector pd1_estimate(const Pd1Estimator& est, const Vector& x, const Vector& u,
                    const Vector& x_next, double cost, const Vector& noise) {
  detail::require_size(noise.size(), est.system.control_dim(), "pd1_estimate: noise");
  detail::require_size(x_next.size(), est.system.state_dim(), "pd1_estimate: x_next");
  const double residual = cost + est.value.gamma * scalar_value(est.value, x_next) -
                          scalar_q(est.value, est.system, est.cost, x, u);
  return residual * (est.sigma_inv * noise);
}

Vector pd2_estimate(const Pd2Estimator& est, const Vector& x, const Vector& u,
                    const Vector& x_next) {
  detail::require_size(x_next.size(), est.system.state_dim(), "pd2_estimate: x_next");
  const auto& tv = est.transform;
  return tv.L * x + tv.gamma * vector_value(tv, x_next) -
         vector_q(tv, est.system, x, u);
}

Vector pd3_estimate(const Pd3Estimator& est, const Vector& x, const Vector& u,
                    const Vector& x_next) {
  detail::require_size(x_next.size(), est.simulator.state_dim(), "pd3_estimate: x_next");
  const Vector zero = Vector::Zero(est.simulator.state_dim());
  Vector expected = Vector::Zero(est.simulator.state_dim());
  const int copies = std::max(est.replications, 1);
  for (int i = 0; i < copies; ++i) expected += step(est.simulator, x, u, zero);
  expected /= copies;
  return x_next - expected;
}

Vector estimate(const PdEstimator& est, const PdObservation& obs) {
  return std::visit(
      [&](const auto& e) -> Vector {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, Pd1Estimator>) {
          detail::require(obs.noise != nullptr, "PD1 needs the exploration noise");
          return pd1_estimate(e, obs.x, obs.u, obs.x_next, obs.cost, *obs.noise);
        } else if constexpr (std::is_same_v<E, Pd2Estimator>) {
          return pd2_estimate(e, obs.x, obs.u, obs.x_next);
        } else {
          return pd3_estimate(e, obs.x, obs.u, obs.x_next);
        }
      },
      est);
}

Eigen::Index output_dim(const PdEstimator& est) {
  return std::visit(
      [](const auto& e) -> Eigen::Index {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, Pd1Estimator>) {
          return e.system.control_dim();
        } else if constexpr (std::is_same_v<E, Pd2Estimator>) {
          return e.transform.L.rows();
        } else {
          return e.simulator.state_dim();
        }
      },
      est);
}

LemmaTransform lemma_transform(const PdEstimator& est) {
  LemmaTransform out;
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, Pd1Estimator>) {
          out.T = 2.0 * e.value.gamma * e.system.B().transpose() * e.value.P;
        } else if constexpr (std::is_same_v<E, Pd2Estimator>) {
          out.T = e.transform.gamma * e.transform.T;
        } else {
          out.T = Matrix::Identity(e.simulator.state_dim(), e.simulator.state_dim());
        }
      },
      est);
  if (out.T.rows() == out.T.cols()) {
    Eigen::JacobiSVD<Matrix> svd(out.T);
    const auto& s = svd.singularValues();
    const double smallest = s(s.size() - 1);
    out.invertible = smallest > 1e-12 * std::max(s(0), 1.0);
    if (out.invertible) out.condition = s(0) / smallest;
  }
  return out;
}

}  // namespace pdctl
