#include "pdctl/oracle.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "pdctl/value.hpp"
#include "test_helpers.hpp"

namespace pdctl {
namespace {

using test::CompareMatrices;

double RelGap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::vector<Vector> Sinusoid(int T, Eigen::Index dx, double amplitude) {
  disturbance::Sinusoid s;
  s.amplitude = Vector::Constant(dx, amplitude);
  s.phases = Vector::LinSpaced(dx, 0.0, 1.5);
  std::vector<Vector> w;
  for (int t = 0; t < T; ++t) w.push_back(generate_disturbance(DisturbanceGenerator{s}, t, 0));
  return w;
}

// Smooth convex non-quadratic cost, exercising the gradient path.
CostFunction QuarticCost() {
  CostFunction c;
  c.value = [](const Vector& x, const Vector& u) {
    return x.squaredNorm() + u.squaredNorm() + 0.5 * x.array().pow(4).sum();
  };
  c.gradient = [](const Vector& x, const Vector& u) {
    return std::make_pair((2.0 * x + 2.0 * x.array().pow(3).matrix()).eval(), (2.0 * u).eval());
  };
  return c;
}

GTEST_TEST(CounterfactualTest, ZeroPolicyMatchesBaseRollout) {
  const LinearSystem sys(Matrix{{0.9, 0.2}, {-0.1, 0.7}}, Matrix{{1.0}, {0.5}});
  const Matrix K{{0.1, 0.2}};
  const auto cost = quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  const auto w = Sinusoid(30, 2, 0.3);
  const auto costs = counterfactual_costs(sys, K, cost, DacParams::zero(2, 1, 2), w);
  Vector x = Vector::Zero(2);
  for (std::size_t t = 0; t < w.size(); ++t) {
    const Vector u = -K * x;
    EXPECT_NEAR(costs[t], cost(x, u), 1e-14);
    x = step(sys, x, u, w[t]);
  }
}

GTEST_TEST(CounterfactualTest, GradientFiniteDifference) {
  std::mt19937_64 rng(1);
  const LinearSystem sys(Matrix{{0.9, 0.2}, {-0.1, 0.7}}, Matrix{{1.0}, {0.5}});
  const Matrix K{{0.1, 0.2}};
  const auto w = Sinusoid(40, 2, 0.5);
  DacParams M = DacParams::zero(3, 1, 2);
  for (int i = 1; i <= 3; ++i) M[i] = 0.2 * test::RandomMatrix(1, 2, rng);
  for (const auto& cost : {quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1)), QuarticCost()}) {
    const auto g = counterfactual_gradient(sys, K, cost, M, w, Vector{{0.3, -0.1}});
    const Vector theta = M.flatten();
    const Vector grad = g.gradient.flatten();
    auto total = [&](const Vector& v) {
      double s = 0.0;
      for (double c : counterfactual_costs(sys, K, cost, DacParams::unflatten(v, 3, 1, 2), w, Vector{{0.3, -0.1}})) s += c;
      return s;
    };
    EXPECT_NEAR(g.value, total(theta), 1e-12 * (1.0 + g.value));
    const double eps = 1e-6;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Vector p = theta, m = theta;
      p(k) += eps;
      m(k) -= eps;
      EXPECT_NEAR(grad(k), (total(p) - total(m)) / (2 * eps), 1e-5 * (1.0 + std::abs(grad(k))));
    }
  }
}

GTEST_TEST(OracleTest, ZeroDisturbance) {
  const LinearSystem sys(Matrix{{0.9, 0.2}, {-0.1, 0.7}}, Matrix{{1.0}, {0.5}});
  const std::vector<Vector> w(100, Vector::Zero(2));
  const auto r = hindsight_dac_oracle(sys, Matrix::Zero(1, 2),
                                      quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1)),
                                      w, 3, 1.5, 0.2);
  // every feasible M is optimal here
  EXPECT_EQ(r.total_cost, 0.0);
  EXPECT_TRUE(in_comparator_set(r.M, comparator_radii(3, 1.5, 0.2), 1e-12));
  EXPECT_EQ(r.step_costs.size(), 100u);
}

GTEST_TEST(OracleTest, ScalarGridSearch) {
  const LinearSystem sys(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0));
  const auto cost = quadratic_cost(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  const Matrix K = Matrix::Zero(1, 1);
  const std::vector<Vector> w(50, Vector::Constant(1, 0.7));
  // kappa = 1, alpha = 0.5: r_1 = 1
  const auto radii = comparator_radii(1, 1.0, 0.5);
  const auto r = hindsight_dac_oracle(sys, K, cost, w, 1, radii);
  double best = std::numeric_limits<double>::infinity(), best_m = 0.0;
  for (int k = -10000; k <= 10000; ++k) {
    DacParams M = DacParams::zero(1, 1, 1);
    M[1](0, 0) = k * 1e-4 * radii[0];
    double total = 0.0;
    for (double c : counterfactual_costs(sys, K, cost, M, w)) total += c;
    if (total < best) {
      best = total;
      best_m = M[1](0, 0);
    }
  }
  EXPECT_NEAR(r.M[1](0, 0), best_m, 1.5e-4);
  EXPECT_LE(r.total_cost, best + 1e-9);
  EXPECT_TRUE(r.converged);
}

// The constraint binds: the unconstrained optimum lies outside a small ball.
GTEST_TEST(OracleTest, ScalarGridSearchConstrained) {
  const LinearSystem sys(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0));
  const auto cost = quadratic_cost(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  const std::vector<Vector> w(50, Vector::Constant(1, 0.7));
  const std::vector<double> radii{0.05};
  const auto r = hindsight_dac_oracle(sys, Matrix::Zero(1, 1), cost, w, 1, radii);
  EXPECT_NEAR(std::abs(r.M[1](0, 0)), 0.05, 1e-9);
}

GTEST_TEST(OracleTest, RestartsAgreeAndWitness) {
  const Matrix A{{1.0, 1.0}, {0.0, 1.0}};
  const Matrix B{{0.0}, {1.0}};
  const LinearSystem sys(A, B);
  const Matrix K = solve_dare(A, B, Matrix::Identity(2, 2), Matrix::Identity(1, 1)).K;
  const auto cost = quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  const auto w = Sinusoid(500, 2, 0.3);
  const auto cert = strong_stability(A - B * K);
  ASSERT_TRUE(cert.has_value());
  for (double scale : {1.0, 0.005}) {
    const auto radii = comparator_radii(4, cert->kappa, cert->alpha, scale);
    OracleOptions o;
    o.seed = 3;
    const auto r = hindsight_dac_oracle(sys, K, cost, w, 4, radii, o);
    ASSERT_EQ(r.restart_costs.size(), 5u);
    for (double c : r.restart_costs) EXPECT_LE(RelGap(c, r.total_cost), 1e-6);
    EXPECT_TRUE(in_comparator_set(r.M, radii));

    Rng rng(4);
    for (int k = 0; k < 100; ++k) {
      const DacParams d = DacParams::unflatten(sample_sphere(r.M.size(), rng), 4, 1, 2);
      const DacParams probe = project_dac(r.M + 1e-3 * d, radii);
      double total = 0.0;
      for (double c : counterfactual_costs(sys, K, cost, probe, w)) total += c;
      EXPECT_GE(total, r.total_cost - 1e-6 * std::max(1.0, r.total_cost));
    }
  }
}

GTEST_TEST(OracleTest, NonQuadraticCost) {
  const LinearSystem sys(Matrix{{0.9, 0.2}, {-0.1, 0.7}}, Matrix{{1.0}, {0.5}});
  const Matrix K = Matrix::Zero(1, 2);
  const auto w = Sinusoid(200, 2, 0.6);
  const auto radii = comparator_radii(2, 1.5, 0.2);
  const auto r = hindsight_dac_oracle(sys, K, QuarticCost(), w, 2, radii);
  for (double c : r.restart_costs) EXPECT_LE(RelGap(c, r.total_cost), 1e-6);
  double base = 0.0;
  for (double c : counterfactual_costs(sys, K, QuarticCost(), DacParams::zero(2, 1, 2), w)) base += c;
  EXPECT_LT(r.total_cost, base);
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const DacParams d = DacParams::unflatten(sample_sphere(r.M.size(), rng), 2, 1, 2);
    double total = 0.0;
    for (double c : counterfactual_costs(sys, K, QuarticCost(), project_dac(r.M + 1e-3 * d, radii), w)) total += c;
    EXPECT_GE(total, r.total_cost - 1e-6 * std::max(1.0, r.total_cost));
  }
}

GTEST_TEST(OracleTest, StepCostsSumToTotal) {
  const LinearSystem sys(Matrix{{0.9, 0.2}, {-0.1, 0.7}}, Matrix{{1.0}, {0.5}});
  const auto w = Sinusoid(100, 2, 0.4);
  const auto r = hindsight_dac_oracle(sys, Matrix::Zero(1, 2),
                                      quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1)),
                                      w, 2, std::vector<double>{});
  double total = 0.0;
  for (double c : r.step_costs) total += c;
  EXPECT_NEAR(total, r.total_cost, 1e-10 * std::max(1.0, total));
}

GTEST_TEST(OracleTest, Rejects) {
  const LinearSystem sys(Matrix::Identity(1, 1) * 0.5, Matrix::Identity(1, 1));
  const std::vector<Vector> w(5, Vector::Zero(1));
  CostFunction c;
  c.value = [](const Vector& x, const Vector&) { return x.norm(); };
  EXPECT_THROW(hindsight_dac_oracle(sys, Matrix::Zero(1, 1), c, w, 1, std::vector<double>{}), UnsupportedCost);
  EXPECT_THROW(hindsight_dac_oracle(sys, Matrix::Zero(1, 1),
                                    quadratic_cost(Matrix::Identity(1, 1), Matrix::Identity(1, 1)), w, 0,
                                    std::vector<double>{}),
               InvalidArgument);
}

}  // namespace
}  // namespace pdctl
