#include "pdctl/dac.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_helpers.hpp"

namespace pdctl {
namespace {

using test::CompareMatrices;

DacParams RandomParams(int h, Eigen::Index du, Eigen::Index dw, double scale, std::mt19937_64& rng) {
  std::vector<Matrix> blocks;
  for (int i = 0; i < h; ++i) blocks.push_back(scale * test::RandomMatrix(du, dw, rng));
  return DacParams(blocks);
}

// Reference projection: full SVD with explicit clipping.
Matrix ClipOracle(const Matrix& M, double r) {
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix S = Matrix::Zero(M.rows(), M.cols());
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    S(i, i) = std::min(svd.singularValues()(i), r);
  }
  return svd.matrixU() * S * svd.matrixV().transpose();
}

GTEST_TEST(DacParamsTest, FlattenRoundTrip) {
  std::mt19937_64 rng(1);
  const DacParams p = RandomParams(3, 2, 4, 1.0, rng);
  EXPECT_EQ(p.size(), 24);
  const DacParams q = DacParams::unflatten(p.flatten(), 3, 2, 4);
  for (int i = 1; i <= 3; ++i) EXPECT_TRUE(CompareMatrices(p[i], q[i], 0.0));
  EXPECT_THROW(DacParams(std::vector<Matrix>{Matrix::Zero(1, 2), Matrix::Zero(2, 2)}), InvalidArgument);
}

GTEST_TEST(SignalHistoryTest, ZeroPadded) {
  SignalHistory hist(3, 2);
  EXPECT_EQ(hist.lag(1).norm(), 0.0);
  hist.push(Vector{{1.0, 0.0}});
  hist.push(Vector{{2.0, 0.0}});
  EXPECT_EQ(hist.lag(1)(0), 2.0);
  EXPECT_EQ(hist.lag(2)(0), 1.0);
  EXPECT_EQ(hist.lag(3).norm(), 0.0);
  hist.push(Vector{{3.0, 0.0}});
  hist.push(Vector{{4.0, 0.0}});
  EXPECT_EQ(hist.lag(3)(0), 2.0);
  EXPECT_EQ(hist.lag(4).norm(), 0.0);
  const auto w = hist.window(2, 2);
  EXPECT_EQ(w[0](0), 3.0);
  EXPECT_EQ(w[1](0), 2.0);
}

GTEST_TEST(DacControlTest, Examples) {
  DacParams p = DacParams::zero(1, 2, 2);
  p[1] = Matrix::Identity(2, 2);
  const std::vector<Vector> zero{Vector::Zero(2)};
  EXPECT_EQ(dac_control(p, zero).norm(), 0.0);
  const std::vector<Vector> w{Vector{{1.0, 2.0}}};
  EXPECT_TRUE(CompareMatrices(dac_control(p, w), Vector{{1.0, 2.0}}, 0.0));
}

GTEST_TEST(DacControlTest, MatchesNaiveSum) {
  std::mt19937_64 rng(2);
  const DacParams p = RandomParams(5, 3, 4, 1.0, rng);
  std::vector<Vector> w;
  for (int i = 0; i < 5; ++i) w.push_back(test::RandomVector(4, rng));
  Vector expected = Vector::Zero(3);
  for (int i = 0; i < 5; ++i)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) expected(r) += p[i + 1](r, c) * w[static_cast<std::size_t>(i)](c);
  EXPECT_TRUE(CompareMatrices(dac_control(p, w), expected, 1e-12));
}

GTEST_TEST(DacControlTest, Linear) {
  std::mt19937_64 rng(3);
  const DacParams p = RandomParams(3, 2, 2, 1.0, rng);
  const DacParams q = RandomParams(3, 2, 2, 1.0, rng);
  std::vector<Vector> a, b, ab;
  for (int i = 0; i < 3; ++i) {
    a.push_back(test::RandomVector(2, rng));
    b.push_back(test::RandomVector(2, rng));
    ab.push_back(0.7 * a.back() - 1.3 * b.back());
  }
  EXPECT_TRUE(CompareMatrices(dac_control(p, ab), 0.7 * dac_control(p, a) - 1.3 * dac_control(p, b), 1e-12));
  EXPECT_TRUE(CompareMatrices(dac_control(2.0 * p + q, a), 2.0 * dac_control(p, a) + dac_control(q, a), 1e-12));
}

GTEST_TEST(ComparatorRadiiTest, Formula) {
  const auto r = comparator_radii(3, 2.0, 0.25, 0.5);
  ASSERT_EQ(r.size(), 3u);
  for (int i = 1; i <= 3; ++i) EXPECT_DOUBLE_EQ(r[static_cast<std::size_t>(i - 1)], 0.5 * 2.0 * 16.0 * std::pow(0.75, i));
  EXPECT_THROW(comparator_radii(3, 0.5, 0.25), InvalidArgument);
}

GTEST_TEST(ProjectDacTest, InsideUnchanged) {
  std::mt19937_64 rng(4);
  const std::vector<double> radii{10.0, 10.0};
  const DacParams p = RandomParams(2, 2, 3, 0.1, rng);
  const DacParams q = project_dac(p, radii);
  for (int i = 1; i <= 2; ++i) EXPECT_TRUE(CompareMatrices(p[i], q[i], 0.0));
}

GTEST_TEST(ProjectDacTest, RankOneClipped) {
  const std::vector<double> radii{0.3};
  Vector u = Vector{{1.0, 2.0, -2.0}} / 3.0;
  DacParams p = DacParams::zero(1, 3, 3);
  p[1] = 10.0 * 0.3 * u * u.transpose();
  const DacParams q = project_dac(p, radii);
  EXPECT_TRUE(CompareMatrices(q[1], 0.3 * u * u.transpose(), 1e-12));
}

GTEST_TEST(ProjectDacTest, MatchesSvdOracleAndIsOptimal) {
  std::mt19937_64 rng(5);
  const std::vector<double> radii{0.5, 0.25, 0.125};
  for (int trial = 0; trial < 20; ++trial) {
    const DacParams p = RandomParams(3, 2, 4, 2.0, rng);
    const DacParams q = project_dac(p, radii);
    EXPECT_TRUE(in_comparator_set(q, radii));
    for (int i = 1; i <= 3; ++i) {
      EXPECT_TRUE(CompareMatrices(q[i], ClipOracle(p[i], radii[static_cast<std::size_t>(i - 1)]), 1e-10));
      EXPECT_NEAR(spectral_norm(q[i]), radii[static_cast<std::size_t>(i - 1)], 1e-10);
    }
    // idempotent
    const DacParams qq = project_dac(q, radii);
    for (int i = 1; i <= 3; ++i) EXPECT_TRUE(CompareMatrices(q[i], qq[i], 1e-12));
    // closer than random feasible probes
    const double best = (p - q).frobenius_norm();
    for (int k = 0; k < 100; ++k) {
      const DacParams probe = project_dac(RandomParams(3, 2, 4, 1.0, rng), radii);
      EXPECT_LE(best, (p - probe).frobenius_norm() + 1e-12);
    }
  }
}

GTEST_TEST(BanditGradientTest, ZeroCases) {
  const std::vector<Vector> n{Vector{{1.0}}, Vector{{-1.0}}};
  const std::vector<Vector> w{Vector{{0.5}}, Vector{{0.2}}, Vector{{-0.3}}};
  EXPECT_EQ(bandit_gradient(0.0, n, w, 0.1).G.frobenius_norm(), 0.0);
  const std::vector<Vector> w0(3, Vector::Zero(1));
  EXPECT_EQ(bandit_gradient(2.0, n, w0, 0.1).G.frobenius_norm(), 0.0);
}

GTEST_TEST(BanditGradientTest, HandExpansion) {
  const double c = 1.7, delta = 0.25;
  const double n0 = 1.0, n1 = -1.0;
  const double w1 = 0.5, w2 = -0.2, w3 = 0.8;
  const std::vector<Vector> noise{Vector{{n0}}, Vector{{n1}}};
  const std::vector<Vector> w{Vector{{w1}}, Vector{{w2}}, Vector{{w3}}};
  const GradEstimate g = bandit_gradient(c, noise, w, delta, 4);
  EXPECT_EQ(g.t, 4);
  EXPECT_NEAR(g.G[1](0, 0), c / delta * (n0 * w1 + n1 * w2), 1e-15);
  EXPECT_NEAR(g.G[2](0, 0), c / delta * (n0 * w2 + n1 * w3), 1e-15);
}

GTEST_TEST(BanditGradientTest, ScalesWithControlDim) {
  std::mt19937_64 rng(6);
  Rng r(6);
  const std::vector<Vector> noise{sample_sphere(3, r)};
  const std::vector<Vector> w{test::RandomVector(2, rng)};
  const GradEstimate g = bandit_gradient(2.0, noise, w, 0.5);
  EXPECT_TRUE(CompareMatrices(g.G[1], 3.0 * 2.0 / 0.5 * noise[0] * w[0].transpose(), 1e-14));
}

GTEST_TEST(GaussianGradientTest, IsotropicMatchesBandit) {
  std::mt19937_64 rng(7);
  const double sigma = 0.3, c = 1.4, delta = 0.6;
  std::vector<Vector> unit, scaled, w;
  Rng r(7);
  for (int i = 0; i < 2; ++i) {
    unit.push_back(sample_sphere(2, r));
    scaled.push_back(delta * unit.back());
  }
  for (int k = 0; k < 3; ++k) w.push_back(test::RandomVector(3, rng));
  const Matrix sigma_inv = Matrix::Identity(2, 2) / (sigma * sigma);
  const GradEstimate g = gaussian_gradient(c, scaled, w, sigma_inv);
  // c n / sigma^2 with n = delta v  versus  d_u c v / delta; ratio delta^2 / (d_u sigma^2)
  const GradEstimate b = bandit_gradient(c, unit, w, delta);
  const double ratio = delta * delta / (2.0 * sigma * sigma);
  for (int j = 1; j <= 2; ++j) EXPECT_TRUE(CompareMatrices(g.G[j], ratio * b.G[j], 1e-12));
}

GTEST_TEST(OgdTest, Basics) {
  const std::vector<double> radii{1.0, 1.0};
  std::mt19937_64 rng(8);
  const DacParams p = RandomParams(2, 2, 2, 0.1, rng);
  const DacParams same = ogd_update_delayed(p, nullptr, 0.1, radii);
  for (int i = 1; i <= 2; ++i) EXPECT_TRUE(CompareMatrices(p[i], same[i], 0.0));
  GradEstimate zero{DacParams::zero(2, 2, 2), 0};
  const DacParams z = ogd_update_delayed(p, &zero, 0.1, radii);
  for (int i = 1; i <= 2; ++i) EXPECT_TRUE(CompareMatrices(p[i], z[i], 0.0));

  GradEstimate one{DacParams::zero(2, 2, 2), 0};
  one.G[2](1, 0) = 3.0;
  const DacParams q = ogd_update_delayed(DacParams::zero(2, 2, 2), &one, 0.01, radii);
  EXPECT_NEAR(q[2](1, 0), -0.03, 1e-15);
  EXPECT_EQ(q[1].norm(), 0.0);
  EXPECT_NEAR(q[2].norm(), 0.03, 1e-15);
}

GTEST_TEST(OgdTest, IteratesStayFeasible) {
  std::mt19937_64 rng(9);
  const auto radii = comparator_radii(3, 1.5, 0.3);
  DacParams p = DacParams::zero(3, 2, 3);
  for (int k = 0; k < 200; ++k) {
    GradEstimate g{RandomParams(3, 2, 3, std::pow(10.0, (k % 7) - 2), rng), k};
    p = ogd_update_delayed(p, &g, 0.5, radii);
    ASSERT_TRUE(in_comparator_set(p, radii)) << "step " << k;
  }
}

GTEST_TEST(DelayedGradientBufferTest, Delays) {
  DelayedGradientBuffer buf(2);
  auto make = [](std::int64_t t) { return GradEstimate{DacParams::zero(1, 1, 1), t}; };
  EXPECT_FALSE(buf.push(make(0)).has_value());
  EXPECT_FALSE(buf.push(make(1)).has_value());
  const auto g = buf.push(make(2));
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(g->t, 0);
  EXPECT_EQ(buf.push(make(3))->t, 1);
  EXPECT_EQ(buf.pending(), 2u);
  DelayedGradientBuffer now(0);
  EXPECT_EQ(now.push(make(5))->t, 5);
}

GTEST_TEST(SamplingTest, SphereScalar) {
  Rng rng(10);
  int plus = 0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    const Vector v = sample_sphere(1, rng);
    ASSERT_EQ(std::abs(v(0)), 1.0);
    plus += v(0) > 0;
  }
  EXPECT_NEAR(static_cast<double>(plus) / N, 0.5, 3.0 * 0.5 / std::sqrt(N));
}

GTEST_TEST(SamplingTest, SphereMean) {
  Rng rng(11);
  const int N = 100000;
  Vector sum = Vector::Zero(3);
  for (int i = 0; i < N; ++i) {
    const Vector v = sample_sphere(3, rng);
    ASSERT_NEAR(v.norm(), 1.0, 1e-12);
    sum += v;
  }
  EXPECT_LE((sum / N).norm(), 0.02);
}

GTEST_TEST(SamplingTest, GaussianCovariance) {
  const Matrix sigma{{0.04, 0.01}, {0.01, 0.09}};
  GaussianSampler sampler(sigma);
  Rng rng(12);
  const int N = 100000;
  Matrix cov = Matrix::Zero(2, 2);
  Vector mean = Vector::Zero(2);
  for (int i = 0; i < N; ++i) {
    const Vector n = sampler(rng);
    mean += n;
    cov += n * n.transpose();
  }
  cov /= N;
  mean /= N;
  const double tol = 5.0 * std::sqrt(spectral_norm(sigma) * spectral_norm(sigma) / N) * 3.0;
  EXPECT_LE((cov - sigma).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 5.0 * std::sqrt(0.09 / N));
  EXPECT_TRUE(CompareMatrices(sampler.sigma_inv() * sigma, Matrix::Identity(2, 2), 1e-12));
  EXPECT_THROW(GaussianSampler(Matrix{{1.0, 2.0}, {2.0, 1.0}}), InvalidArgument);
}

}  // namespace
}  // namespace pdctl
