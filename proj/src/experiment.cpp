#include "pdctl/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "pdctl/oracle.hpp"
#include "pdctl/rollout.hpp"
#include "pdctl/value.hpp"

namespace pdctl {

namespace {

double disturbance_bound(const DisturbanceGenerator& gen) {
  const double W = std::visit(
      [](const auto& g) -> double {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, disturbance::Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<G, disturbance::IidGaussian>) {
          // not bounded; a generous high-probability radius
          return g.sigma * (std::sqrt(static_cast<double>(g.dim)) + 6.0);
        } else if constexpr (std::is_same_v<G, disturbance::IidUniform>) {
          return g.low.cwiseAbs().cwiseMax(g.high.cwiseAbs()).norm();
        } else if constexpr (std::is_same_v<G, disturbance::Sinusoid>) {
          return g.amplitude.norm();
        } else if constexpr (std::is_same_v<G, disturbance::Constant>) {
          return g.value.norm();
        } else {
          double m = 0.0;
          for (const auto& v : g.sequence) m = std::max(m, v.norm());
          return m;
        }
      },
      gen.kind);
  return std::min(W, gen.bound);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SignalSource make_source(const ExperimentConfig& cfg, const ResolvedSetup& s,
                         const Matrix& sigma) {
  const auto& c = cfg.controller;
  if (c.signal == "true") return TrueDisturbance{s.system};
  if (c.signal == "pd1") {
    QuadraticValue v = evaluate_policy(cfg.A, cfg.B, s.K, cfg.Q, cfg.R, c.gamma);
    return PdEstimator{Pd1Estimator(std::move(v), sigma, s.system, s.cost)};
  }
  if (c.signal == "pd2") {
    const Matrix L = c.L.value_or(Matrix::Identity(cfg.A.rows(), cfg.A.rows()));
    return PdEstimator{
        Pd2Estimator{vector_value_transform(cfg.A, cfg.B, s.K, L, c.gamma), s.system}};
  }
  LinearSystem sim(c.sim_A.value_or(cfg.A), c.sim_B.value_or(cfg.B));
  return PdEstimator{Pd3Estimator{std::move(sim), 1}};
}

}  // namespace

ResolvedSetup resolve_setup(const ExperimentConfig& cfg) {
  cfg.validate();
  LinearSystem system(cfg.A, cfg.B);
  const Eigen::Index dx = cfg.A.rows();
  const Eigen::Index du = cfg.B.cols();
  Matrix K;
  if (cfg.base_gain == "lqr") {
    K = solve_dare(cfg.A, cfg.B, cfg.Q, cfg.R, 1.0).K;
  } else if (cfg.base_gain == "zero") {
    K = Matrix::Zero(du, dx);
  } else {
    K = *cfg.K;
  }
  const Matrix A_cl = cfg.A - cfg.B * K;
  const auto& c = cfg.controller;
  StrongStability cert{1.0, 1.0};
  if (c.kappa && c.alpha) {
    cert = StrongStability{*c.kappa, *c.alpha};
  } else {
    auto computed = strong_stability(A_cl);
    if (!computed) {
      throw ConfigError(
          "config: closed loop A - BK has no strong-stability certificate; set "
          "controller.kappa and controller.alpha");
    }
    cert = *computed;
    if (c.kappa) cert.kappa = *c.kappa;
    if (c.alpha) cert.alpha = *c.alpha;
  }
  Schedule sched;
  if (c.schedule == "manual") {
    sched = Schedule{c.eta.value_or(0.0), c.delta.value_or(0.0), c.h.value_or(1)};
  } else {
    sched = default_params(std::max<std::int64_t>(cfg.T, 2), du, dx, cert.kappa, cert.alpha,
                           c.schedule == "smooth");
    if (c.eta) sched.eta = *c.eta;
    if (c.delta) sched.delta = *c.delta;
    if (c.h) sched.h = *c.h;
  }
  sched.eta *= c.eta_scale;
  sched.delta *= c.delta_scale;

  ResolvedSetup s{system, K, quadratic_cost(cfg.Q, cfg.R), cert, sched, {}, 0.0, 0.0};
  s.radii = comparator_radii(sched.h, cert.kappa, cert.alpha, c.radius_scale);
  s.disturbance_bound = disturbance_bound(cfg.disturbance);
  AssumptionSet as;
  as.kappa = cert.kappa;
  as.alpha = cert.alpha;
  as.disturbance_bound = s.disturbance_bound;
  s.divergence_threshold = 1e6 * as.state_bound(sched.h);
  return s;
}

std::uint64_t controller_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x5bd1e995ULL); }

std::unique_ptr<Controller> make_controller(const ExperimentConfig& cfg,
                                            const ResolvedSetup& s, std::uint64_t seed) {
  const auto& c = cfg.controller;
  const Eigen::Index du = cfg.B.cols();
  const std::uint64_t rs = controller_seed(seed);
  const std::vector<double> radii = c.project ? s.radii : std::vector<double>{};
  if (c.type == "zero") return std::make_unique<ZeroController>(du);
  if (c.type == "lqr") return std::make_unique<LqrController>(s.K);
  if (c.type == "gpc") {
    return std::make_unique<GpcFullInfo>(s.system, s.cost,
                                         GpcOptions{s.schedule.h, s.schedule.eta, s.K, radii});
  }
  if (c.type == "bpc") {
    return std::make_unique<Bpc>(
        s.system, BpcOptions{s.schedule.h, s.schedule.eta, s.schedule.delta, s.K, radii, rs});
  }
  const double delta = s.schedule.delta;
  if (c.type == "rbpc") {
    const Matrix sphere_cov = (delta * delta / static_cast<double>(du)) * Matrix::Identity(du, du);
    return std::make_unique<BanditGpc>(
        make_source(cfg, s, sphere_cov),
        BanditGpcOptions{s.schedule.h, s.schedule.eta, delta, s.K, radii, rs});
  }
  MfGpcOptions o;
  o.h = s.schedule.h;
  o.eta = s.schedule.eta;
  o.sigma = c.sigma.value_or((delta * delta / static_cast<double>(du)) * Matrix::Identity(du, du));
  o.K = s.K;
  o.radii = s.radii;
  o.project = c.project;
  o.weight_decay = c.weight_decay;
  o.update_period = c.update_period;
  o.delay = c.delay;
  o.seed = rs;
  return std::make_unique<MfGpc>(make_source(cfg, s, o.sigma), o);
}

double SeedResult::total_cost() const {
  double t = 0.0;
  for (double c : costs) t += c;
  return t;
}

double SeedResult::oracle_total() const {
  double t = 0.0;
  for (double c : oracle_costs) t += c;
  return oracle_costs.empty() ? std::nan("") : t;
}

double SeedResult::final_regret() const {
  // accumulated in the same order as the cumulative columns
  double a = 0.0, o = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    a += costs[i];
    if (i < oracle_costs.size()) o += oracle_costs[i];
  }
  return oracle_costs.empty() ? std::nan("") : a - o;
}

double SeedResult::average_cost() const {
  return costs.empty() ? std::nan("") : total_cost() / static_cast<double>(costs.size());
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = values.size();
  if (a.n == 0) {
    a.mean = a.stderr_ = std::nan("");
    return a;
  }
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(a.n);
  if (a.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stderr_ = std::sqrt(ss / static_cast<double>(a.n - 1) / static_cast<double>(a.n));
  }
  return a;
}

Aggregate RegretReport::final_regret() const {
  std::vector<double> v;
  for (const auto& s : seeds)
    if (s.ok && !s.oracle_costs.empty()) v.push_back(s.final_regret());
  return aggregate(v);
}

Aggregate RegretReport::final_average_cost() const {
  std::vector<double> v;
  for (const auto& s : seeds)
    if (s.ok) v.push_back(s.average_cost());
  return aggregate(v);
}

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PDCTL_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SeedResult run_seed(const ExperimentConfig& cfg, const ResolvedSetup& s, std::uint64_t seed) {
  SeedResult r;
  r.seed = seed;
  try {
    auto ctrl = make_controller(cfg, s, seed);
    RolloutOptions ro{cfg.x0, s.divergence_threshold, seed};
    Trajectory traj;
    try {
      traj = rollout(s.system, *ctrl, cfg.disturbance, s.cost, cfg.T, ro);
    } catch (const Diverged& d) {
      r.diverged = true;
      r.error = d.what();
      for (const auto& rec : d.partial()) r.costs.push_back(rec.cost);
      if (cfg.trajectories) r.trajectory = d.partial();
      return r;
    }
    r.costs.reserve(traj.size());
    for (const auto& rec : traj) r.costs.push_back(rec.cost);
    if (cfg.oracle) {
      std::vector<Vector> w;
      w.reserve(traj.size());
      for (const auto& rec : traj) w.push_back(rec.w);
      OracleOptions oo;
      oo.max_iterations = cfg.oracle_iterations;
      oo.restarts = cfg.oracle_restarts;
      oo.seed = seed;
      oo.x0 = cfg.x0;
      const OracleResult o =
          hindsight_dac_oracle(s.system, s.K, s.cost, w, s.schedule.h, s.radii, oo);
      r.oracle_costs = o.step_costs;
      r.oracle_converged = o.converged;
      r.oracle_restart_costs = o.restart_costs;
    }
    if (cfg.trajectories) r.trajectory = std::move(traj);
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

RegretReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const ResolvedSetup setup = resolve_setup(cfg);
  RegretReport report;
  report.config = cfg;
  report.schedule = setup.schedule;
  report.seeds.resize(cfg.seeds.size());
  const unsigned workers =
      std::min<unsigned>(worker_count(options.threads), static_cast<unsigned>(cfg.seeds.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++)
      report.seeds[i] = run_seed(cfg, setup, cfg.seeds[i]);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& s : report.seeds) report.partial = report.partial || !s.ok;
  return report;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& values) {
  detail::require(x.size() == values.size() && x.size() >= 2,
                  "fit_loglog: need at least two matching points");
  SlopeFit f;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] > 0.0) || !(values[i] > 0.0)) return f;
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(values[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  f.valid = std::isfinite(f.slope);
  return f;
}

SweepReport run_sweep(const ExperimentConfig& cfg, const std::vector<std::int64_t>& horizons,
                      const RunOptions& options) {
  detail::require(horizons.size() >= 2, "run_sweep: need at least two horizons");
  SweepReport sweep;
  sweep.horizons = horizons;
  std::vector<double> xs;
  for (auto T : horizons) {
    ExperimentConfig c = cfg;
    c.T = T;
    c.oracle = true;
    sweep.runs.push_back(run_experiment(c, options));
    sweep.mean_regret.push_back(sweep.runs.back().final_regret().mean);
    xs.push_back(static_cast<double>(T));
  }
  sweep.fit = fit_loglog(xs, sweep.mean_regret);
  return sweep;
}

}  // namespace pdctl
