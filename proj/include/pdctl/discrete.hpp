#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pdctl/dac.hpp"

namespace pdctl {

/// Finite MDP. P[a](s, s') is the probability of s -> s' under action a.
struct TabularMdp {
  int n_states = 1;
  int n_actions = 2;
  std::vector<Matrix> P;
  Matrix cost;  // c(s, a)
  // Optional time-varying cost; falls back to the table.
  std::function<double(std::int64_t t, int s, int a)> cost_at;
  // Optional per-step perturbation of the row P[a](s, .). Negative entries are
  // clipped and the row re-normalized.
  std::function<Vector(std::int64_t t, int s, int a, const Vector& row)> perturb;

  void validate() const;
  double step_cost(std::int64_t t, int s, int a) const;
  Vector transition_row(std::int64_t t, int s, int a) const;
};

/// Tabular value of a stochastic policy pi(s, a) on the unperturbed MDP under
/// the cost table.
struct TabularValue {
  Vector V;
  Matrix Q;
  double gamma = 0.9;
};

TabularValue evaluate_tabular_policy(const TabularMdp& mdp, const Matrix& pi, double gamma);

/// softmax(base_logits(s) + sum_i M_i w_{t-i}) with M_i of size n_actions x d_w.
struct DiscreteDacPolicy {
  std::function<Vector(int s)> base_logits;
  DacParams M;
};

Vector softmax(const Vector& logits);
Vector discrete_probs(const DiscreteDacPolicy& policy, int s, std::span<const Vector> window);

struct DiscreteAction {
  int action = 0;
  double log_prob = 0.0;
  Vector probs;
  DacParams score;  // d log pi(action) / dM
};

/// Score of action a: block i is (e_a - pi) w_{t-i}'.
DacParams discrete_score(const Vector& probs, int action, std::span<const Vector> window);
DiscreteAction discrete_act(const DiscreteDacPolicy& policy, int s,
                            std::span<const Vector> window, Rng& rng);

/// (c + g V(s') - Q(s, a)) * score, truncated or zero-padded to d_w entries.
Vector pd1_discrete(double cost, double v_next, double q, double gamma, const Vector& score,
                    Eigen::Index d_w);

/// M - eta c sum_j score_j, optionally projected onto a Frobenius ball.
DacParams dmfgpc_update(const DacParams& M, double cost, std::span<const DacParams> scores,
                        double eta, std::optional<double> radius = std::nullopt);

struct DmfGpcOptions {
  int h = 1;
  double eta = 0.01;
  Eigen::Index d_w = 0;  // 0: n_actions
  std::optional<double> radius;
  bool learn = true;     // false freezes M = 0 (the base policy)
  std::uint64_t seed = 0;
  int initial_state = 0;
};

struct DiscreteRun {
  std::vector<double> costs;
  std::vector<int> actions;
  DacParams M;
  double average_cost() const;
};

/// V and Q belong to the base policy.
DiscreteRun run_dmfgpc(const TabularMdp& mdp, const std::function<Vector(int)>& base_logits,
                       const TabularValue& value, std::int64_t T, const DmfGpcOptions& options);

}  // namespace pdctl
