#include "pdctl/verify.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "pdctl/dac.hpp"
#include "pdctl/pseudo_disturbance.hpp"
#include "pdctl/transfer.hpp"
#include "pdctl/value.hpp"

namespace pdctl {

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  return m;
}

Vector random_vector(Eigen::Index n, Rng& rng) { return random_matrix(n, 1, rng); }

// Spectral radius drawn from [0.3, 0.95).
Matrix random_stable(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> radius(0.3, 0.95);
  Matrix A = random_matrix(n, n, rng);
  return A * (radius(rng) / spectral_radius(A));
}

std::string fmt(const char* pattern, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

struct Pd1Setup {
  LinearSystem system;
  Matrix K;
  Pd1Estimator est;
  Vector x, w;
};

Pd1Setup pd1_setup() {
  const Matrix A = (Matrix(2, 2) << 0.9, 0.2, -0.1, 0.7).finished();
  const Matrix B = (Matrix(2, 2) << 1.0, 0.3, 0.0, 0.8).finished();
  const Matrix Q = Matrix::Identity(2, 2), R = Matrix::Identity(2, 2);
  const double gamma = 0.9;
  LinearSystem sys(A, B);
  const Matrix K = solve_dare(A, B, Q, R, gamma).K;
  QuadraticValue v = evaluate_policy(A, B, K, Q, R, gamma);
  const Matrix sigma = (Matrix(2, 2) << 0.04, 0.01, 0.01, 0.09).finished();
  Pd1Estimator est(v, sigma, sys, quadratic_cost(Q, R));
  return {sys, K, est, (Vector(2) << 0.5, -1.0).finished(), (Vector(2) << 0.3, -0.2).finished()};
}

CheckResult pd1_against(const VerifyOptions& o, double factor, const std::string& name) {
  Pd1Setup s = pd1_setup();
  GaussianSampler sampler(s.est.sigma);
  Rng rng(o.seed);
  const Vector target = factor * s.est.value.gamma * s.system.B().transpose() * s.est.value.P * s.w;
  const Eigen::Index d = target.size();
  Vector sum = Vector::Zero(d), sq = Vector::Zero(d);
  const std::size_t N = std::max<std::size_t>(o.n_samples, 2);
  for (std::size_t i = 0; i < N; ++i) {
    const Vector n = sampler(rng);
    const Vector u = -s.K * s.x + n;
    const Vector xn = step(s.system, s.x, u, s.w);
    const Vector est = pd1_estimate(s.est, s.x, u, xn, s.est.cost(s.x, u), n);
    sum += est;
    sq += est.cwiseProduct(est);
  }
  const double Nd = static_cast<double>(N);
  const Vector mean = sum / Nd;
  const Vector var = (sq / Nd - mean.cwiseProduct(mean)) * (Nd / (Nd - 1.0));
  const Vector se = (var / Nd).cwiseSqrt();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) worst = std::max(worst, std::abs(mean(i) - target(i)) / se(i));
  CheckResult r{name, worst <= 3.0, worst, 3.0, "", false};
  r.detail = fmt("max |mean - target| / stderr over %g draws (%g coordinates)", Nd,
                 static_cast<double>(d));
  return r;
}

}  // namespace

CheckResult verify_pd1_mean(const VerifyOptions& o) {
  return pd1_against(o, 2.0, "lemma1: PD1 mean = 2 g B'P w");
}

CheckResult verify_pd1_unit_scale(const VerifyOptions& o) {
  CheckResult r = pd1_against(o, 1.0, "lemma1: PD1 mean = g B'P w");
  r.informational = true;
  return r;
}

CheckResult verify_pd2_exact(const VerifyOptions& o) {
  Rng rng(o.seed + 1);
  const Eigen::Index dims[] = {2, 5, 10};
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index dx = dims[inst % 3];
    const Eigen::Index du = std::max<Eigen::Index>(1, dx / 2);
    const Matrix A = random_stable(dx, rng);
    const Matrix B = random_matrix(dx, du, rng);
    LinearSystem sys(A, B);
    const Matrix K = solve_dare(A, B, Matrix::Identity(dx, dx), Matrix::Identity(du, du)).K;
    const double gamma = 0.95;
    const Matrix L = Matrix::Identity(dx, dx);
    Pd2Estimator est{vector_value_transform(A, B, K, L, gamma), sys};
    const Matrix Tw = gamma * L * (Matrix::Identity(dx, dx) - gamma * (A - B * K)).inverse();
    Vector x = Vector::Zero(dx);
    for (int t = 0; t < 1000; ++t) {
      const Vector u = -K * x + 0.1 * random_vector(du, rng);
      const Vector w = random_vector(dx, rng);
      const Vector xn = step(sys, x, u, w);
      const double err = (pd2_estimate(est, x, u, xn) - Tw * w).norm() / (1.0 + w.norm());
      worst = std::max(worst, err);
      x = xn;
    }
  }
  CheckResult r{"lemma2: PD2 = g L (I - g A_pi)^{-1} w", worst <= 1e-8, worst, 1e-8, "", false};
  r.detail = "max |w_hat - T w| / (1 + |w|) over 20 systems x 1000 steps";
  return r;
}

CheckResult verify_pd3_exact(const VerifyOptions& o) {
  Rng rng(o.seed + 2);
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::Index dx = 2 + inst % 4, du = 1 + inst % 2;
    const Matrix A = random_stable(dx, rng);
    const Matrix B = random_matrix(dx, du, rng);
    LinearSystem sys(A, B);
    Pd3Estimator est{sys, 1};
    Vector x = Vector::Zero(dx);
    for (int t = 0; t < 1000; ++t) {
      const Vector u = random_vector(du, rng);
      const Vector w = random_vector(dx, rng);
      const Vector xn = step(sys, x, u, w);
      worst = std::max(worst, (pd3_estimate(est, x, u, xn) - w).norm());
      x = xn;
    }
  }
  CheckResult r{"lemma3: exact simulator", worst <= 1e-10, worst, 1e-10, "", false};
  r.detail = "max |w_hat - w| over 10 systems x 1000 steps";
  return r;
}

CheckResult verify_pd3_perturbed(const VerifyOptions& o) {
  Rng rng(o.seed + 3);
  double worst = -1.0;
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::Index dx = 2 + inst % 4, du = 1 + inst % 2;
    const Matrix A = random_stable(dx, rng);
    const Matrix B = random_matrix(dx, du, rng);
    const Matrix dA = 0.01 * random_matrix(dx, dx, rng);
    const Matrix dB = 0.01 * random_matrix(dx, du, rng);
    LinearSystem sys(A, B);
    Pd3Estimator est{LinearSystem(A + dA, B + dB), 1};
    const double nA = spectral_norm(dA), nB = spectral_norm(dB);
    Vector x = Vector::Zero(dx);
    for (int t = 0; t < 1000; ++t) {
      const Vector u = random_vector(du, rng);
      const Vector w = random_vector(dx, rng);
      const Vector xn = step(sys, x, u, w);
      const double bound = nA * x.norm() + nB * u.norm();
      const double err = (pd3_estimate(est, x, u, xn) - w).norm();
      worst = std::max(worst, err - bound);
      x = xn;
    }
  }
  CheckResult r{"lemma3: perturbed simulator within mismatch bound", worst <= 1e-12, worst, 1e-12,
                "", false};
  r.detail = "max (|w_hat - w| - |dA||x| - |dB||u|) over visited steps";
  return r;
}

CheckResult verify_gradient_bias(const VerifyOptions& o) {
  const int h = 2;
  const Matrix A = (Matrix(2, 2) << 0.8, 0.3, 0.0, 0.6).finished();
  const Matrix B = (Matrix(2, 1) << 0.0, 1.0).finished();
  const Matrix K = (Matrix(1, 2) << 0.1, 0.2).finished();
  const Matrix A_cl = A - B * K;
  const CostFunction cost = quadratic_cost(Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  const double delta = 0.5;
  Rng rng(o.seed + 4);
  DacParams M = DacParams::zero(h, 1, 2);
  M[1] = (Matrix(1, 2) << 0.2, -0.1).finished();
  M[2] = (Matrix(1, 2) << -0.05, 0.15).finished();
  std::vector<Vector> w_lags;  // w_lags[k-1] = w_{t-k}, k = 1..2h-1
  for (int k = 0; k < 2 * h - 1; ++k) w_lags.push_back(random_vector(2, rng));

  // v_{t-k}(M) = sum_i M_i w_{t-k-i}
  auto controls_of = [&](const DacParams& P) {
    std::vector<Vector> v;
    for (int k = 0; k < h; ++k) {
      Vector u = Vector::Zero(1);
      for (int i = 1; i <= h; ++i) u += P[i] * w_lags[static_cast<std::size_t>(k + i - 1)];
      v.push_back(u);
    }
    return v;
  };
  // d_u = 1: the sphere is {-1, +1}; enumerate every sign pattern.
  auto smoothed = [&](const DacParams& P) {
    const auto v = controls_of(P);
    double total = 0.0;
    for (int mask = 0; mask < (1 << h); ++mask) {
      std::vector<Vector> played = v;
      for (int k = 0; k < h; ++k) played[static_cast<std::size_t>(k)](0) += (mask >> k & 1) ? delta : -delta;
      total += memory_cost(A_cl, B, K, cost, played, w_lags);
    }
    return total / static_cast<double>(1 << h);
  };
  const Vector base = M.flatten();
  Vector fd(base.size());
  const double eps = 1e-5;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Vector p = base, m = base;
    p(i) += eps;
    m(i) -= eps;
    fd(i) = (smoothed(DacParams::unflatten(p, h, 1, 2)) - smoothed(DacParams::unflatten(m, h, 1, 2))) /
            (2.0 * eps);
  }

  const auto v = controls_of(M);
  const std::size_t N = std::max<std::size_t>(o.n_samples, 2);
  Vector sum = Vector::Zero(base.size()), sq = Vector::Zero(base.size());
  std::vector<Vector> noise(static_cast<std::size_t>(h));
  for (std::size_t s = 0; s < N; ++s) {
    std::vector<Vector> played = v;
    for (int k = 0; k < h; ++k) {
      noise[static_cast<std::size_t>(k)] = sample_sphere(1, rng);
      played[static_cast<std::size_t>(k)] += delta * noise[static_cast<std::size_t>(k)];
    }
    const double c = memory_cost(A_cl, B, K, cost, played, w_lags);
    const Vector g = bandit_gradient(c, noise, w_lags, delta).G.flatten();
    sum += g;
    sq += g.cwiseProduct(g);
  }
  const double Nd = static_cast<double>(N);
  const Vector mean = sum / Nd;
  const Vector se = ((sq / Nd - mean.cwiseProduct(mean)) * (Nd / (Nd - 1.0)) / Nd).cwiseSqrt();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < base.size(); ++i) worst = std::max(worst, std::abs(mean(i) - fd(i)) / se(i));
  CheckResult r{"gradient bias: sphere estimate vs smoothed cost", worst <= 3.0, worst, 3.0, "", false};
  r.detail = fmt("max |mean - FD| / stderr over %g draws, %g entries", Nd,
                 static_cast<double>(base.size()));
  return r;
}

std::vector<CheckResult> verify_lemmas(const VerifyOptions& o) {
  return {verify_pd1_mean(o),    verify_pd1_unit_scale(o), verify_pd2_exact(o),
          verify_pd3_exact(o),   verify_pd3_perturbed(o),  verify_gradient_bias(o)};
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.informational && !r.pass) return false;
  return true;
}

}  // namespace pdctl
