#include "pdctl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace pdctl {

namespace {

void check_inputs(const LinearSystem& system, const Matrix& K, std::span<const Vector> w,
                  const std::optional<Vector>& x0) {
  detail::require_size(K.rows(), system.control_dim(), "oracle: base gain rows");
  detail::require_size(K.cols(), system.state_dim(), "oracle: base gain cols");
  for (const auto& wt : w) detail::require_size(wt.size(), system.state_dim(), "oracle: disturbance");
  if (x0) detail::require_size(x0->size(), system.state_dim(), "oracle: x0");
}

Vector start_state(const LinearSystem& system, const std::optional<Vector>& x0) {
  return x0 ? *x0 : Vector::Zero(system.state_dim());
}

// Square root S with S'S = Q for symmetric PSD Q; negative eigenvalues are clipped.
Matrix psd_factor(const Matrix& Q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Q + Q.transpose()));
  const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return d.asDiagonal() * es.eigenvectors().transpose();
}

struct Objective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::optional<double> lipschitz;
};

struct Quadratic {
  Matrix H;  // J(m) = m'Hm + 2 g'm + c0
  Vector g;
  double c0 = 0.0;
};

Quadratic build_quadratic(const LinearSystem& system, const Matrix& K, const Matrix& Q,
                          const Matrix& R, std::span<const Vector> w, int h,
                          const std::optional<Vector>& x0) {
  const Eigen::Index dx = system.state_dim();
  const Eigen::Index du = system.control_dim();
  const Eigen::Index dw = dx;
  const Eigen::Index n = h * du * dw;
  const Matrix Sq = psd_factor(Q);
  const Matrix Sr = psd_factor(R);
  const Matrix& A = system.A();
  const Matrix& B = system.B();

  Quadratic q{Matrix::Zero(n, n), Vector::Zero(n), 0.0};
  Matrix X = Matrix::Zero(dx, n);
  Vector a = start_state(system, x0);
  Matrix Wt(du, n);
  Matrix Z(Sq.rows() + Sr.rows(), n);
  Vector z(Sq.rows() + Sr.rows());
  const auto T = static_cast<std::int64_t>(w.size());
  for (std::int64_t t = 0; t < T; ++t) {
    Wt.setZero();
    for (int i = 1; i <= h; ++i) {
      const std::int64_t s = t - i;
      if (s < 0) break;
      const Vector& ws = w[static_cast<std::size_t>(s)];
      const Eigen::Index base = (i - 1) * du * dw;
      for (Eigen::Index c = 0; c < dw; ++c)
        for (Eigen::Index r = 0; r < du; ++r) Wt(r, base + c * du + r) = ws(c);
    }
    const Matrix U = -K * X + Wt;
    const Vector b = -K * a;
    Z.topRows(Sq.rows()).noalias() = Sq * X;
    Z.bottomRows(Sr.rows()).noalias() = Sr * U;
    z.head(Sq.rows()).noalias() = Sq * a;
    z.tail(Sr.rows()).noalias() = Sr * b;
    q.H.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
    q.g.noalias() += Z.transpose() * z;
    q.c0 += z.squaredNorm();
    X = A * X + B * U;
    a = A * a + B * b + w[static_cast<std::size_t>(t)];
  }
  q.H = q.H.selfadjointView<Eigen::Lower>();
  return q;
}

Vector project_flat(const Vector& m, std::span<const double> radii, int h, Eigen::Index du,
                    Eigen::Index dw) {
  if (radii.empty()) return m;
  return project_dac(DacParams::unflatten(m, h, du, dw), radii).flatten();
}

struct Descent {
  Vector m;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// FISTA with function-value restarts; backtracking when no Lipschitz constant is known.
Descent projected_descent(const Objective& f, Vector m, std::span<const double> radii, int h,
                          Eigen::Index du, Eigen::Index dw, const OracleOptions& opt,
                          double grad_scale) {
  auto proj = [&](const Vector& v) { return project_flat(v, radii, h, du, dw); };
  m = proj(m);
  double fm = f.value(m);
  double L = f.lipschitz.value_or(1.0);
  if (!(L > 0.0)) L = 1.0;
  Vector y = m;
  double tk = 1.0;
  Descent out{m, fm, false, 0};
  for (int k = 0; k < opt.max_iterations; ++k) {
    out.iterations = k + 1;
    const Vector gy = f.gradient(y);
    Vector next = proj(y - gy / L);
    if (!f.lipschitz) {
      const double fy = f.value(y);
      for (int bt = 0; bt < 60; ++bt) {
        const Vector d = next - y;
        if (f.value(next) <= fy + gy.dot(d) + 0.5 * L * d.squaredNorm() + 1e-15 * std::abs(fy))
          break;
        L *= 2.0;
        next = proj(y - gy / L);
      }
    }
    const double mapping = L * (y - next).norm();
    const double fnext = f.value(next);
    if (fnext > fm) {
      // restart momentum from the last accepted iterate
      y = m;
      tk = 1.0;
      if (mapping <= opt.tolerance * grad_scale) {
        out.converged = true;
        break;
      }
      continue;
    }
    const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = next + ((tk - 1.0) / tnext) * (next - m);
    tk = tnext;
    m = std::move(next);
    fm = fnext;
    if (mapping <= opt.tolerance * grad_scale) {
      out.converged = true;
      break;
    }
  }
  out.m = std::move(m);
  out.value = fm;
  return out;
}

// Damped Newton with a finite-difference Hessian, for smooth non-quadratic
// costs where first-order descent stalls on ill-conditioned directions. Steps
// that leave the comparator set are rejected, so a binding constraint keeps
// the first-order answer.
Descent newton_polish(const Objective& f, Descent d, std::span<const double> radii, int h,
                      Eigen::Index du, Eigen::Index dw, const OracleOptions& opt,
                      double grad_scale) {
  const Eigen::Index n = d.m.size();
  for (int k = 0; k < 50; ++k) {
    const Vector g = f.gradient(d.m);
    if (g.norm() <= opt.tolerance * grad_scale) {
      d.converged = true;
      break;
    }
    Matrix H(n, n);
    const double eps = 1e-6 * std::max(1.0, d.m.norm());
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector p = d.m, q = d.m;
      p(j) += eps;
      q(j) -= eps;
      H.col(j) = (f.gradient(p) - f.gradient(q)) / (2.0 * eps);
    }
    H = 0.5 * (H + H.transpose());
    const Vector step = H.completeOrthogonalDecomposition().solve(g);
    bool moved = false;
    for (double t = 1.0; t > 1e-8; t *= 0.5) {
      const Vector next = d.m - t * step;
      if (!next.allFinite()) continue;
      if (!radii.empty() && !in_comparator_set(DacParams::unflatten(next, h, du, dw), radii, 1e-12))
        continue;
      const double fn = f.value(next);
      if (fn <= d.value) {
        moved = fn < d.value || (next - d.m).norm() > 0.0;
        d.m = next;
        d.value = fn;
        break;
      }
    }
    ++d.iterations;
    if (!moved) break;
  }
  return d;
}

Vector random_start(Rng& rng, std::span<const double> radii, int h, Eigen::Index du,
                    Eigen::Index dw) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  DacParams p = DacParams::zero(h, du, dw);
  for (int i = 1; i <= h; ++i) {
    Matrix& blk = p[i];
    for (Eigen::Index r = 0; r < blk.rows(); ++r)
      for (Eigen::Index c = 0; c < blk.cols(); ++c) blk(r, c) = normal(rng);
    if (!radii.empty()) {
      const double s = spectral_norm(blk);
      if (s > 0.0) blk *= unif(rng) * radii[static_cast<std::size_t>(i - 1)] / s;
    } else {
      blk /= std::sqrt(static_cast<double>(blk.size()));
    }
  }
  return p.flatten();
}

}  // namespace

std::vector<double> counterfactual_costs(const LinearSystem& system, const Matrix& K,
                                         const CostFunction& cost, const DacParams& M,
                                         std::span<const Vector> w,
                                         const std::optional<Vector>& x0) {
  check_inputs(system, K, w, x0);
  detail::require_size(M.control_dim(), system.control_dim(), "oracle: M rows");
  detail::require_size(M.signal_dim(), system.state_dim(), "oracle: M cols");
  const int h = M.history();
  std::vector<double> costs;
  costs.reserve(w.size());
  Vector x = start_state(system, x0);
  for (std::size_t t = 0; t < w.size(); ++t) {
    Vector u = -K * x;
    for (int i = 1; i <= h && static_cast<std::size_t>(i) <= t; ++i) u += M[i] * w[t - i];
    costs.push_back(cost(x, u));
    x = system.A() * x + system.B() * u + w[t];
  }
  return costs;
}

CounterfactualGradient counterfactual_gradient(const LinearSystem& system, const Matrix& K,
                                               const CostFunction& cost, const DacParams& M,
                                               std::span<const Vector> w,
                                               const std::optional<Vector>& x0) {
  check_inputs(system, K, w, x0);
  if (!cost.gradient) throw UnsupportedCost("oracle: cost has no gradient oracle");
  const int h = M.history();
  const std::size_t T = w.size();
  std::vector<Vector> xs(T), us(T);
  CounterfactualGradient out{0.0, DacParams::zero(h, M.control_dim(), M.signal_dim())};
  Vector x = start_state(system, x0);
  for (std::size_t t = 0; t < T; ++t) {
    Vector u = -K * x;
    for (int i = 1; i <= h && static_cast<std::size_t>(i) <= t; ++i) u += M[i] * w[t - i];
    out.value += cost(x, u);
    xs[t] = x;
    us[t] = u;
    x = system.A() * x + system.B() * u + w[t];
  }
  Vector p = Vector::Zero(system.state_dim());  // dJ/dx_{t+1}
  for (std::size_t s = T; s-- > 0;) {
    auto [gx, gu] = cost.gradient(xs[s], us[s]);
    const Vector du_total = gu + system.B().transpose() * p;
    for (int i = 1; i <= h && static_cast<std::size_t>(i) <= s; ++i)
      out.gradient[i] += du_total * w[s - i].transpose();
    p = gx + system.A().transpose() * p - K.transpose() * du_total;
  }
  return out;
}

OracleResult hindsight_dac_oracle(const LinearSystem& system, const Matrix& K,
                                  const CostFunction& cost, std::span<const Vector> w,
                                  int h, std::span<const double> radii,
                                  const OracleOptions& options) {
  check_inputs(system, K, w, options.x0);
  detail::require(h >= 1, "oracle: h must be >= 1");
  detail::require(radii.empty() || radii.size() == static_cast<std::size_t>(h),
                  "oracle: need one radius per block");
  detail::require(options.restarts >= 1, "oracle: need at least one restart");
  const Eigen::Index du = system.control_dim();
  const Eigen::Index dw = system.state_dim();
  const Eigen::Index n = h * du * dw;

  Objective f;
  std::optional<Quadratic> quad;
  std::optional<Eigen::CompleteOrthogonalDecomposition<Matrix>> cod;
  double grad_scale = 1.0;
  if (cost.quadratic) {
    quad = build_quadratic(system, K, cost.quadratic->first, cost.quadratic->second, w, h,
                           options.x0);
    const Quadratic* qp = &*quad;
    f.value = [qp](const Vector& m) {
      return m.dot(qp->H * m) + 2.0 * qp->g.dot(m) + qp->c0;
    };
    f.gradient = [qp](const Vector& m) -> Vector { return 2.0 * (qp->H * m + qp->g); };
    Eigen::SelfAdjointEigenSolver<Matrix> es(quad->H, Eigen::EigenvaluesOnly);
    f.lipschitz = 2.0 * std::max(es.eigenvalues().maxCoeff(), 1e-300);
    cod.emplace(quad->H);
    grad_scale = std::max(1.0, 2.0 * quad->g.norm());
  } else {
    if (!cost.gradient) throw UnsupportedCost("oracle: cost has no gradient oracle");
    auto value = [&, h](const Vector& m) {
      const auto c = counterfactual_costs(system, K, cost, DacParams::unflatten(m, h, du, dw), w,
                                          options.x0);
      double s = 0.0;
      for (double v : c) s += v;
      return s;
    };
    f.value = value;
    f.gradient = [&, h](const Vector& m) -> Vector {
      return counterfactual_gradient(system, K, cost, DacParams::unflatten(m, h, du, dw), w,
                                     options.x0)
          .gradient.flatten();
    };
    grad_scale = std::max(1.0, f.gradient(Vector::Zero(n)).norm());
  }

  Rng rng(options.seed);
  OracleResult result;
  result.total_cost = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  Vector best_m = Vector::Zero(n);
  bool all_converged = true;
  for (int r = 0; r < options.restarts; ++r) {
    const Vector m0 = random_start(rng, radii, h, du, dw);
    Descent d;
    bool solved = false;
    if (cod) {
      // Newton step; exact when the unconstrained minimizer it reaches is feasible.
      // From the start, then the minimum-norm minimizer: with nearly collinear
      // lags H is close to singular and the start's null-space part can leave the set.
      for (const Vector& mn : {Vector(m0 - cod->solve(quad->H * m0 + quad->g)),
                               Vector(-cod->solve(quad->g))}) {
        if (!mn.allFinite()) continue;
        if (!radii.empty() && !in_comparator_set(DacParams::unflatten(mn, h, du, dw), radii, 1e-12))
          continue;
        d = Descent{mn, f.value(mn), true, 1};
        solved = true;
        break;
      }
    }
    if (!solved) {
      d = projected_descent(f, m0, radii, h, du, dw, options, grad_scale);
      if (!cod) d = newton_polish(f, d, radii, h, du, dw, options, grad_scale);
    }
    result.restart_costs.push_back(d.value);
    all_converged = all_converged && d.converged;
    if (d.value < best) {
      best = d.value;
      best_m = d.m;
      result.iterations = d.iterations;
    }
  }
  result.converged = all_converged;
  result.M = DacParams::unflatten(best_m, h, du, dw);
  result.step_costs = counterfactual_costs(system, K, cost, result.M, w, options.x0);
  result.total_cost = 0.0;
  for (double c : result.step_costs) result.total_cost += c;
  return result;
}

OracleResult hindsight_dac_oracle(const LinearSystem& system, const Matrix& K,
                                  const CostFunction& cost, std::span<const Vector> w,
                                  int h, double kappa, double alpha,
                                  const OracleOptions& options) {
  const auto radii = comparator_radii(h, kappa, alpha);
  return hindsight_dac_oracle(system, K, cost, w, h, radii, options);
}

}  // namespace pdctl
