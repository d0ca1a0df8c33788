#include "pdctl/discrete.hpp"

#include <cmath>
#include <numeric>

namespace pdctl {

void TabularMdp::validate() const {
  detail::require(n_states >= 1 && n_actions >= 1, "TabularMdp: need states and actions");
  detail::require(P.size() == static_cast<std::size_t>(n_actions),
                  "TabularMdp: need one transition matrix per action");
  for (const auto& Pa : P) {
    detail::require(Pa.rows() == n_states && Pa.cols() == n_states,
                    "TabularMdp: transition matrices must be n_states x n_states");
    detail::require((Pa.array() >= 0.0).all(), "TabularMdp: negative transition probability");
    for (int s = 0; s < n_states; ++s)
      detail::require(std::abs(Pa.row(s).sum() - 1.0) <= 1e-12,
                      "TabularMdp: transition rows must sum to 1");
  }
  detail::require(cost.rows() == n_states && cost.cols() == n_actions,
                  "TabularMdp: cost table must be n_states x n_actions");
}

double TabularMdp::step_cost(std::int64_t t, int s, int a) const {
  return cost_at ? cost_at(t, s, a) : cost(s, a);
}

Vector TabularMdp::transition_row(std::int64_t t, int s, int a) const {
  Vector row = P[static_cast<std::size_t>(a)].row(s).transpose();
  if (!perturb) return row;
  row = perturb(t, s, a, row).cwiseMax(0.0);
  const double total = row.sum();
  detail::require(total > 0.0 && std::isfinite(total), "TabularMdp: perturbed row has no mass");
  return row / total;
}

TabularValue evaluate_tabular_policy(const TabularMdp& mdp, const Matrix& pi, double gamma) {
  mdp.validate();
  detail::require(gamma > 0.0 && gamma < 1.0, "evaluate_tabular_policy: gamma must lie in (0, 1)");
  detail::require(pi.rows() == mdp.n_states && pi.cols() == mdp.n_actions,
                  "evaluate_tabular_policy: policy must be n_states x n_actions");
  const int S = mdp.n_states;
  Matrix P_pi = Matrix::Zero(S, S);
  Vector c_pi = Vector::Zero(S);
  for (int a = 0; a < mdp.n_actions; ++a) {
    P_pi += pi.col(a).asDiagonal() * mdp.P[static_cast<std::size_t>(a)];
    c_pi += pi.col(a).cwiseProduct(mdp.cost.col(a));
  }
  TabularValue v;
  v.gamma = gamma;
  v.V = (Matrix::Identity(S, S) - gamma * P_pi).partialPivLu().solve(c_pi);
  v.Q.resize(S, mdp.n_actions);
  for (int a = 0; a < mdp.n_actions; ++a)
    v.Q.col(a) = mdp.cost.col(a) + gamma * mdp.P[static_cast<std::size_t>(a)] * v.V;
  return v;
}

Vector softmax(const Vector& logits) {
  detail::require(logits.size() >= 1 && logits.allFinite(), "softmax: need finite logits");
  const Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Vector discrete_probs(const DiscreteDacPolicy& policy, int s, std::span<const Vector> window) {
  Vector logits = policy.base_logits(s);
  detail::require_size(logits.size(), policy.M.control_dim(), "discrete policy: logits");
  logits += dac_control(policy.M, window);
  return softmax(logits);
}

DacParams discrete_score(const Vector& probs, int action, std::span<const Vector> window) {
  const int h = static_cast<int>(window.size());
  detail::require(h >= 1, "discrete_score: empty window");
  detail::require(action >= 0 && action < probs.size(), "discrete_score: action out of range");
  Vector coef = -probs;
  coef(action) += 1.0;
  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(h));
  for (const auto& w : window) blocks.push_back(coef * w.transpose());
  return DacParams(std::move(blocks));
}

DiscreteAction discrete_act(const DiscreteDacPolicy& policy, int s,
                            std::span<const Vector> window, Rng& rng) {
  DiscreteAction out;
  out.probs = discrete_probs(policy, s, window);
  std::discrete_distribution<int> pick(out.probs.data(), out.probs.data() + out.probs.size());
  out.action = pick(rng);
  out.log_prob = std::log(out.probs(out.action));
  out.score = discrete_score(out.probs, out.action,
                             window.first(static_cast<std::size_t>(policy.M.history())));
  return out;
}

Vector pd1_discrete(double cost, double v_next, double q, double gamma, const Vector& score,
                    Eigen::Index d_w) {
  detail::require(d_w >= 1, "pd1_discrete: d_w must be >= 1");
  const double residual = cost + gamma * v_next - q;
  Vector out = Vector::Zero(d_w);
  const Eigen::Index n = std::min(d_w, score.size());
  out.head(n) = residual * score.head(n);
  return out;
}

DacParams dmfgpc_update(const DacParams& M, double cost, std::span<const DacParams> scores,
                        double eta, std::optional<double> radius) {
  detail::require(eta > 0.0, "dmfgpc_update: eta must be positive");
  DacParams next = M;
  for (const auto& s : scores) {
    detail::require(s.same_shape(M), "dmfgpc_update: score shape mismatch");
    next -= (eta * cost) * s;
  }
  if (radius) {
    const double norm = next.frobenius_norm();
    if (norm > *radius) next *= *radius / norm;
  }
  return next;
}

double DiscreteRun::average_cost() const {
  if (costs.empty()) return std::nan("");
  return std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
}

DiscreteRun run_dmfgpc(const TabularMdp& mdp, const std::function<Vector(int)>& base_logits,
                       const TabularValue& value, std::int64_t T, const DmfGpcOptions& o) {
  mdp.validate();
  detail::require(T >= 1, "run_dmfgpc: T must be >= 1");
  detail::require(o.h >= 1, "run_dmfgpc: h must be >= 1");
  const Eigen::Index dw = o.d_w > 0 ? o.d_w : mdp.n_actions;
  DiscreteDacPolicy policy{base_logits, DacParams::zero(o.h, mdp.n_actions, dw)};
  SignalHistory history(static_cast<std::size_t>(o.h), dw);
  std::deque<DacParams> scores;
  Rng rng(o.seed);
  DiscreteRun run;
  run.costs.reserve(static_cast<std::size_t>(T));
  run.actions.reserve(static_cast<std::size_t>(T));
  int s = o.initial_state;
  for (std::int64_t t = 0; t < T; ++t) {
    const auto window = history.window(static_cast<std::size_t>(o.h));
    const DiscreteAction act = discrete_act(policy, s, window, rng);
    const double c = mdp.step_cost(t, s, act.action);
    const Vector row = mdp.transition_row(t, s, act.action);
    std::discrete_distribution<int> next_state(row.data(), row.data() + row.size());
    const int s_next = next_state(rng);
    run.costs.push_back(c);
    run.actions.push_back(act.action);

    // signal: residual times the score in the logit offset
    Vector logit_score = -act.probs;
    logit_score(act.action) += 1.0;
    history.push(pd1_discrete(c, value.V(s_next), value.Q(s, act.action), value.gamma,
                              logit_score, dw));
    if (o.learn) {
      scores.push_front(act.score);
      if (scores.size() > static_cast<std::size_t>(o.h)) scores.pop_back();
      std::vector<DacParams> buf(scores.begin(), scores.end());
      policy.M = dmfgpc_update(policy.M, c, buf, o.eta, o.radius);
    }
    s = s_next;
  }
  run.M = policy.M;
  return run;
}

}  // namespace pdctl
