#include "pdctl/lds.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "pdctl/controllers.hpp"
#include "pdctl/rollout.hpp"
#include "pdctl/value.hpp"
#include "test_helpers.hpp"

namespace pdctl {
namespace {

using test::CompareMatrices;

// Exploding controller used to trip the divergence guard.
class GainController final : public Controller {
 public:
  explicit GainController(double g) : g_(g) {}
  std::string name() const override { return "gain"; }

 protected:
  Vector do_act(const Vector& x) override {
    return Vector::Constant(1, g_ * (x.sum() + 1.0));
  }
  void do_observe(const Vector&, double) override {}

 private:
  double g_;
};

GTEST_TEST(StepTest, ZeroDynamics) {
  LinearSystem sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  const Vector x_next = step(sys, Vector::Ones(2), Vector{{2.0, 3.0}}, Vector::Zero(2));
  EXPECT_TRUE(CompareMatrices(x_next, Vector{{2.0, 3.0}}, 0.0));
}

GTEST_TEST(StepTest, Diagonal) {
  LinearSystem sys(0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const Vector x_next =
      step(sys, Vector{{2.0, 0.0}}, Vector::Zero(2), Vector{{0.1, -0.1}});
  EXPECT_TRUE(CompareMatrices(x_next, Vector{{1.1, -0.1}}, 1e-15));
}

GTEST_TEST(StepTest, MatchesNaiveLoops) {
  std::mt19937_64 rng(3);
  const Matrix A = test::RandomMatrix(10, 10, rng);
  const Matrix B = test::RandomMatrix(10, 5, rng);
  const Vector x = test::RandomVector(10, rng);
  const Vector u = test::RandomVector(5, rng);
  const Vector w = test::RandomVector(10, rng);
  Vector expected = w;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) expected(i) += A(i, j) * x(j);
    for (int j = 0; j < 5; ++j) expected(i) += B(i, j) * u(j);
  }
  EXPECT_TRUE(CompareMatrices(step(LinearSystem(A, B), x, u, w), expected, 1e-12));
}

GTEST_TEST(StepTest, DimensionMismatch) {
  LinearSystem sys(Matrix::Identity(2, 2), Matrix::Ones(2, 1));
  EXPECT_THROW(step(sys, Vector::Zero(3), Vector::Zero(1), Vector::Zero(2)), InvalidArgument);
  EXPECT_THROW(step(sys, Vector::Zero(2), Vector::Zero(2), Vector::Zero(2)), InvalidArgument);
  EXPECT_THROW(step(sys, Vector::Zero(2), Vector::Zero(1), Vector::Zero(1)), InvalidArgument);
  EXPECT_THROW(LinearSystem(Matrix::Zero(2, 3), Matrix::Ones(2, 1)), InvalidArgument);
  EXPECT_THROW(LinearSystem(Matrix::Zero(2, 2), Matrix::Ones(3, 1)), InvalidArgument);
}

GTEST_TEST(StrongStabilityTest, ScaledIdentity) {
  const auto cert = strong_stability(0.9 * Matrix::Identity(2, 2));
  ASSERT_TRUE(cert.has_value());
  EXPECT_NEAR(cert->kappa, 1.0, 1e-12);
  EXPECT_NEAR(cert->alpha, 0.1, 1e-12);
}

GTEST_TEST(StrongStabilityTest, Diagonal) {
  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << 0.5, -0.3;
  const auto cert = strong_stability(A);
  ASSERT_TRUE(cert.has_value());
  EXPECT_NEAR(cert->kappa, 1.0, 1e-12);
  EXPECT_NEAR(cert->alpha, 0.5, 1e-12);
}

// Non-normal but diagonalizable; the powers must respect the certificate.
GTEST_TEST(StrongStabilityTest, BoundsPowers) {
  const Matrix A{{0.5, 0.4}, {0.0, 0.3}};
  const auto cert = strong_stability(A);
  ASSERT_TRUE(cert.has_value());
  EXPECT_GT(cert->kappa, 1.0);
  EXPECT_NEAR(cert->alpha, 0.5, 1e-12);
  Matrix power = Matrix::Identity(2, 2);
  for (int t = 1; t <= 100; ++t) {
    power = power * A;
    const double bound = cert->kappa * cert->kappa * std::pow(1.0 - cert->alpha, t);
    EXPECT_LE(spectral_norm(power), bound * (1.0 + 1e-8)) << "t=" << t;
  }
}

GTEST_TEST(StrongStabilityTest, RandomBoundsPowers) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A = test::RandomStable(4, 0.95, rng);
    const auto cert = strong_stability(A);
    ASSERT_TRUE(cert.has_value());
    Matrix power = Matrix::Identity(4, 4);
    for (int t = 1; t <= 100; ++t) {
      power = power * A;
      const double bound = cert->kappa * cert->kappa * std::pow(1.0 - cert->alpha, t);
      ASSERT_LE(spectral_norm(power), bound * (1.0 + 1e-8)) << "trial " << trial << " t=" << t;
    }
  }
}

GTEST_TEST(StrongStabilityTest, Rejects) {
  EXPECT_FALSE(strong_stability(Matrix{{0.5, 0.4}, {0.0, 0.5}}).has_value());  // Jordan block
  EXPECT_FALSE(strong_stability(Matrix{{1.0, 1.0}, {0.0, 1.0}}).has_value());
  EXPECT_FALSE(strong_stability(1.2 * Matrix::Identity(3, 3)).has_value());
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(strong_stability(bad), InvalidArgument);
}

GTEST_TEST(DisturbanceTest, Zero) {
  const DisturbanceGenerator gen{disturbance::Zero{3}};
  for (int t : {0, 5, 1000}) EXPECT_TRUE(CompareMatrices(generate_disturbance(gen, t, 9), Vector::Zero(3), 0.0));
}

GTEST_TEST(DisturbanceTest, Sinusoid) {
  disturbance::Sinusoid s;
  s.amplitude = Vector{{1.0, 0.0}};
  s.frequency = 0.03;
  const DisturbanceGenerator gen{s};
  for (int t : {0, 1, 7, 40}) {
    const Vector w = generate_disturbance(gen, t, 0);
    EXPECT_NEAR(w(0), std::sin(2.0 * std::numbers::pi * 0.03 * t), 1e-14);
    EXPECT_EQ(w(1), 0.0);
  }
}

GTEST_TEST(DisturbanceTest, SinusoidPhases) {
  disturbance::Sinusoid s;
  s.amplitude = Vector{{0.3, 0.3}};
  s.phases = Vector{{0.0, std::numbers::pi / 2}};
  const Vector w = generate_disturbance(DisturbanceGenerator{s}, 10, 0);
  const double angle = 2.0 * std::numbers::pi * 10 / 50.0;
  EXPECT_NEAR(w(0), 0.3 * std::sin(angle), 1e-14);
  EXPECT_NEAR(w(1), 0.3 * std::cos(angle), 1e-14);
}

GTEST_TEST(DisturbanceTest, GaussianDeterministic) {
  const DisturbanceGenerator gen{disturbance::IidGaussian{4, 0.1}};
  const Vector a = generate_disturbance(gen, 7, 42);
  const Vector b = generate_disturbance(gen, 7, 42);
  EXPECT_TRUE(CompareMatrices(a, b, 0.0));
  EXPECT_FALSE(CompareMatrices(a, generate_disturbance(gen, 8, 42), 1e-12));
  EXPECT_FALSE(CompareMatrices(a, generate_disturbance(gen, 7, 43), 1e-12));
}

GTEST_TEST(DisturbanceTest, ClippedToBound) {
  const DisturbanceGenerator gen{disturbance::IidGaussian{5, 3.0}, 0.5};
  for (int t = 0; t < 200; ++t) EXPECT_LE(generate_disturbance(gen, t, 1).norm(), 0.5 + 1e-12);
  const DisturbanceGenerator c{disturbance::Constant{Vector{{3.0, 4.0}}}, 1.0};
  EXPECT_TRUE(CompareMatrices(generate_disturbance(c, 0, 0), Vector{{0.6, 0.8}}, 1e-15));
}

GTEST_TEST(DisturbanceTest, Uniform) {
  const DisturbanceGenerator gen{disturbance::IidUniform{Vector{{-1.0, 2.0}}, Vector{{1.0, 3.0}}}};
  for (int t = 0; t < 200; ++t) {
    const Vector w = generate_disturbance(gen, t, 5);
    EXPECT_GE(w(0), -1.0);
    EXPECT_LE(w(0), 1.0);
    EXPECT_GE(w(1), 2.0);
    EXPECT_LE(w(1), 3.0);
  }
}

GTEST_TEST(DisturbanceTest, CustomOutOfRange) {
  const DisturbanceGenerator gen{disturbance::Custom{{Vector{{1.0}}, Vector{{2.0}}}}};
  EXPECT_EQ(generate_disturbance(gen, 1, 0)(0), 2.0);
  EXPECT_THROW(generate_disturbance(gen, 2, 0), OutOfRange);
  EXPECT_THROW(generate_disturbance(gen, -1, 0), InvalidArgument);
}

GTEST_TEST(RolloutTest, ZeroEverything) {
  LinearSystem sys(Matrix{{1.0, 1.0}, {0.0, 1.0}}, Matrix{{0.0}, {1.0}});
  ZeroController ctrl(1);
  const auto traj = rollout(sys, ctrl, DisturbanceGenerator{disturbance::Zero{2}},
                            quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1)), 50);
  ASSERT_EQ(traj.size(), 50u);
  double total = 0.0;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    EXPECT_EQ(traj[t].t, static_cast<std::int64_t>(t));
    EXPECT_EQ(traj[t].x.norm(), 0.0);
    total += traj[t].cost;
  }
  EXPECT_EQ(total, 0.0);
}

GTEST_TEST(RolloutTest, LqrDecays) {
  const Matrix A{{1.0, 1.0}, {0.0, 1.0}};
  const Matrix B{{0.0}, {1.0}};
  const auto v = solve_dare(A, B, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  const auto cert = strong_stability(A - B * v.K);
  ASSERT_TRUE(cert.has_value());
  LinearSystem sys(A, B);
  LqrController ctrl(v.K);
  RolloutOptions opt;
  opt.x0 = Vector{{2.0, -1.0}};
  const int T = 30;
  const auto traj = rollout(sys, ctrl, DisturbanceGenerator{disturbance::Zero{2}},
                            quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1)), T, opt);
  const Vector x_T = step(sys, traj.back().x, traj.back().u, traj.back().w);
  const double bound = cert->kappa * cert->kappa * std::pow(1.0 - cert->alpha, T) * opt.x0->norm();
  EXPECT_LE(x_T.norm(), bound);
  EXPECT_LT(x_T.norm(), 1e-3);
}

GTEST_TEST(RolloutTest, StepConsistency) {
  LinearSystem sys(Matrix{{0.9, 0.2}, {-0.1, 0.7}}, Matrix{{1.0}, {0.5}});
  GainController ctrl(-0.2);
  const auto traj = rollout(sys, ctrl, DisturbanceGenerator{disturbance::IidGaussian{2, 0.3}},
                            quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1)), 500);
  EXPECT_LE(step_consistency_error(sys, traj), 1e-10);
  for (const auto& r : traj) {
    EXPECT_TRUE(r.x.allFinite() && r.u.allFinite() && r.w.allFinite());
    EXPECT_TRUE(std::isfinite(r.cost));
  }
}

GTEST_TEST(RolloutTest, DivergenceCarriesPartial) {
  LinearSystem sys(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  GainController ctrl(2.0);
  RolloutOptions opt;
  opt.divergence_threshold = 1e6;
  try {
    rollout(sys, ctrl, DisturbanceGenerator{disturbance::Zero{1}},
            quadratic_cost(Matrix::Identity(1, 1), Matrix::Identity(1, 1)), 1000, opt);
    FAIL() << "expected divergence";
  } catch (const Diverged& e) {
    EXPECT_GT(e.partial().size(), 0u);
    EXPECT_LT(e.partial().size(), 1000u);
    for (const auto& r : e.partial()) EXPECT_LE(r.x.norm(), 1e6);
  }
}

GTEST_TEST(AssumptionSetTest, Validates) {
  AssumptionSet a;
  EXPECT_NO_THROW(a.validate());
  a.alpha = 1.5;
  EXPECT_THROW(a.validate(), InvalidArgument);
  a.alpha = 0.5;
  a.kappa = 0.5;
  EXPECT_THROW(a.validate(), InvalidArgument);
}

}  // namespace
}  // namespace pdctl
