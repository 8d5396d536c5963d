#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "factope/errors.hpp"
#include "factope/estimators.hpp"
#include "factope/mdp.hpp"
#include "factope/numeric.hpp"
#include "factope/policy.hpp"
#include "factope/sampling.hpp"

/**
 * \file
 * \brief Exact ground truth for small horizons.
 *
 * exact_q runs forward dynamic programming on the state distribution. The moment and covariance
 * routines enumerate every trajectory with positive probability under the generating policy and
 * take exact expectations over that finite set.
 */

namespace factope {

inline constexpr std::size_t kEnumerationGuard = 1'000'000;

/// Expected discounted return of `policy` over `horizon` steps from the initial state.
[[nodiscard]] inline double exact_q(const FactoredMdp& mdp, const FactoredPolicy& policy, double gamma,
                                    std::size_t horizon) {
  if (horizon == 0) {
    throw InputError("exact_q needs t >= 1");
  }
  if (policy.mdp().get() != &mdp) {
    throw InputError("policy is defined on a different MDP");
  }
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  std::vector<double> dist(S, 0.0);
  dist[mdp.initial_state()] = 1.0;
  CompensatedSum q;
  double discount = 1.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    std::vector<CompensatedSum> next(S);
    CompensatedSum step;
    for (std::size_t s = 0; s < S; ++s) {
      if (dist[s] == 0.0) {
        continue;
      }
      for (std::size_t a = 0; a < A; ++a) {
        const double mass = dist[s] * policy.joint(s, a);
        if (mass == 0.0) {
          continue;
        }
        step.add(mass * mdp.reward(s, a));
        const auto row = mdp.transition_row(s, a);
        for (std::size_t sp = 0; sp < S; ++sp) {
          if (row[sp] != 0.0) {
            next[sp].add(mass * row[sp]);
          }
        }
      }
    }
    q.add(discount * step.value());
    discount *= gamma;
    for (std::size_t s = 0; s < S; ++s) {
      dist[s] = next[s].value();
    }
  }
  return q.value();
}

[[nodiscard]] inline double exact_q(const FactoredPolicy& policy, double gamma, std::size_t horizon) {
  return exact_q(*policy.mdp(), policy, gamma, horizon);
}

/// Every trajectory with positive probability under a policy, stored as a dataset, with its probability.
struct TrajectorySpace {
  Dataset trajectories;
  std::vector<double> probability;

  [[nodiscard]] std::size_t size() const noexcept { return probability.size(); }
  [[nodiscard]] double total_probability() const { return compensated_sum(probability); }
};

[[nodiscard]] inline TrajectorySpace enumerate_trajectories(const FactoredPolicy& policy, std::size_t horizon,
                                                            std::size_t guard = kEnumerationGuard) {
  if (horizon == 0) {
    throw InputError("enumeration needs t >= 1");
  }
  const auto& mdp = *policy.mdp();
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();

  std::vector<std::uint32_t> states;
  std::vector<std::uint32_t> actions;
  std::vector<double> rewards;
  std::vector<double> probability;

  std::vector<std::uint32_t> path_states(horizon + 1);
  std::vector<std::uint32_t> path_actions(horizon);
  std::vector<double> path_rewards(horizon);

  auto visit = [&](auto&& self, std::size_t t, std::size_t s, double p) -> void {
    path_states[t] = static_cast<std::uint32_t>(s);
    if (t == horizon) {
      if (probability.size() >= guard) {
        throw ResourceError("trajectory enumeration exceeds " + std::to_string(guard) + " atoms");
      }
      states.insert(states.end(), path_states.begin(), path_states.end());
      actions.insert(actions.end(), path_actions.begin(), path_actions.end());
      rewards.insert(rewards.end(), path_rewards.begin(), path_rewards.end());
      probability.push_back(p);
      return;
    }
    for (std::size_t a = 0; a < A; ++a) {
      const double pa = policy.joint(s, a);
      if (pa == 0.0) {
        continue;
      }
      path_actions[t] = static_cast<std::uint32_t>(a);
      path_rewards[t] = mdp.reward(s, a);
      const auto row = mdp.transition_row(s, a);
      for (std::size_t sp = 0; sp < S; ++sp) {
        if (row[sp] != 0.0) {
          self(self, t + 1, sp, p * pa * row[sp]);
        }
      }
    }
  };
  visit(visit, 0, mdp.initial_state(), 1.0);

  TrajectorySpace out{Dataset{{mdp.id(), policy.name() + ":enumerated", 0, 0}, probability.size(), horizon}, {}};
  for (std::size_t i = 0; i < probability.size(); ++i) {
    std::copy_n(states.begin() + static_cast<std::ptrdiff_t>(i * (horizon + 1)), horizon + 1,
                out.trajectories.states_of(i).begin());
    std::copy_n(actions.begin() + static_cast<std::ptrdiff_t>(i * horizon), horizon,
                out.trajectories.actions_of(i).begin());
    std::copy_n(rewards.begin() + static_cast<std::ptrdiff_t>(i * horizon), horizon,
                out.trajectories.rewards_of(i).begin());
  }
  out.probability = std::move(probability);
  return out;
}

/// Exact expectation sum_tau P(tau) J(tau) over an enumerated space.
[[nodiscard]] inline double enumerated_expected_return(const TrajectorySpace& space, double gamma) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < space.size(); ++i) {
    acc.add(space.probability[i] * discounted_return(space.trajectories.trajectory(i), gamma));
  }
  return acc.value();
}

struct MomentReport {
  EstimatorId estimator = EstimatorId::is;
  double mean = 0.0;
  /// Variance of the estimator computed from n trajectories.
  double variance = 0.0;
  /// Number of enumerated atoms: trajectories, or n-tuples for weighted estimators.
  std::size_t enumeration_size = 0;
  /// Sum of atom probabilities; 1 up to round-off.
  double probability_mass = 0.0;
  std::string pair_label;
  std::size_t n = 1;
  std::size_t horizon = 1;
  double gamma = 1.0;
};

namespace detail {

struct Moments {
  double mean;
  double variance;
  double mass;
};

inline Moments weighted_moments(std::span<const double> values, std::span<const double> probability) {
  CompensatedSum mass;
  CompensatedSum first;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mass.add(probability[i]);
    first.add(probability[i] * values[i]);
  }
  const double mean = first.value();
  CompensatedSum second;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double dev = values[i] - mean;
    second.add(probability[i] * dev * dev);
  }
  return {mean, second.value(), mass.value()};
}

}  // namespace detail

/// Exact mean and variance of an estimator built from n trajectories generated by the behaviour
/// policy (the evaluation policy for the on-policy estimate). Linear estimators use single-trajectory
/// moments with variance / n; weighted estimators enumerate all n-tuples (n <= 3).
[[nodiscard]] inline MomentReport exact_estimator_moments(const PolicyPair& pair, EstimatorId id, std::size_t n,
                                                          std::size_t horizon, double gamma,
                                                          std::size_t guard = kEnumerationGuard) {
  if (n == 0) {
    throw InputError("exact moments need n >= 1");
  }
  const bool on_policy = id == EstimatorId::on_policy;
  const auto space = enumerate_trajectories(on_policy ? pair.evaluation : pair.behaviour, horizon, guard);
  const std::size_t M = space.size();

  MomentReport report{.estimator = id,
                      .pair_label = pair.divergence_label.value_or(pair.behaviour.name() + "/" +
                                                                   pair.evaluation.name()),
                      .n = n,
                      .horizon = horizon,
                      .gamma = gamma};

  if (!is_weighted(id)) {
    std::vector<double> values(M);
    for (std::size_t i = 0; i < M; ++i) {
      const DatasetView single{space.trajectories, i, 1, horizon};
      values[i] = on_policy ? on_policy_estimate(single, gamma).value : estimate(id, single, pair, gamma).value;
    }
    const auto m = detail::weighted_moments(values, space.probability);
    report.mean = m.mean;
    report.variance = m.variance / static_cast<double>(n);
    report.enumeration_size = M;
    report.probability_mass = m.mass;
    return report;
  }

  if (n > 3) {
    throw ResourceError("weighted estimators are enumerated over n-tuples only for n <= 3");
  }
  std::size_t tuples = 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (tuples > guard / M) {
      throw ResourceError("n-tuple enumeration exceeds " + std::to_string(guard) + " atoms");
    }
    tuples *= M;
  }

  Dataset buffer{space.trajectories.metadata(), n, horizon};
  std::vector<double> values(tuples);
  std::vector<double> probability(tuples);
  std::vector<std::size_t> index(n, 0);
  for (std::size_t j = 0; j < tuples; ++j) {
    double p = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto src = space.trajectories.trajectory(index[k]);
      std::copy(src.states.begin(), src.states.end(), buffer.states_of(k).begin());
      std::copy(src.actions.begin(), src.actions.end(), buffer.actions_of(k).begin());
      std::copy(src.rewards.begin(), src.rewards.end(), buffer.rewards_of(k).begin());
      p *= space.probability[index[k]];
    }
    values[j] = estimate(id, buffer, pair, gamma).value;
    probability[j] = p;
    for (std::size_t k = n; k-- > 0;) {
      if (++index[k] < M) {
        break;
      }
      index[k] = 0;
    }
  }
  const auto m = detail::weighted_moments(values, probability);
  report.mean = m.mean;
  report.variance = m.variance;
  report.enumeration_size = tuples;
  report.probability_mass = m.mass;
  return report;
}

// ---------------------------------------------------------------------------------------------
// Covariance conditions behind the variance bounds

enum class CovarianceCondition {
  /// Cov(r^d_t, r^d'_t') >= 0 for d != d', t != t'.
  reward_reward,
  /// Cov(rho^d_{0:T}, rho^d'_{0:T}) = 0 for d != d'.
  ratio_ratio,
  /// Cov(r^d_t, rho^d'_{0:T}) = 0 for d != d'.
  reward_ratio,
  /// Cov(rho^d_{0:t}, rho^d_{0:t'}) >= 0 for t != t'.
  same_factor_prefix,
};

[[nodiscard]] constexpr std::string_view to_string(CovarianceCondition c) noexcept {
  switch (c) {
    case CovarianceCondition::reward_reward:
      return "reward_reward";
    case CovarianceCondition::ratio_ratio:
      return "ratio_ratio";
    case CovarianceCondition::reward_ratio:
      return "reward_ratio";
    case CovarianceCondition::same_factor_prefix:
      return "same_factor_prefix";
  }
  return "unknown";
}

struct CovarianceEntry {
  std::size_t d = 0;
  std::size_t d2 = 0;
  std::size_t t = 0;
  std::size_t t2 = 0;
  double value = 0.0;
};

struct ConditionResult {
  CovarianceCondition condition = CovarianceCondition::reward_reward;
  std::vector<CovarianceEntry> entries;
  double min = 0.0;
  double max = 0.0;
  bool passed = true;
};

struct AssumptionReport {
  std::array<ConditionResult, 4> conditions;
  std::size_t horizon = 1;
  double probability_mass = 0.0;
  double tolerance = 1e-10;

  [[nodiscard]] bool passed() const noexcept {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) { return c.passed; });
  }
  [[nodiscard]] const ConditionResult& operator[](CovarianceCondition c) const noexcept {
    return conditions[static_cast<std::size_t>(c)];
  }
};

/// Exact covariances over all trajectories of length `horizon` under the behaviour policy.
/// Equalities and inequalities are judged with absolute slack `tol`.
[[nodiscard]] inline AssumptionReport check_assumption_covariances(const PolicyPair& pair, std::size_t horizon,
                                                                   double tol = 1e-10,
                                                                   std::size_t guard = kEnumerationGuard) {
  const auto& mdp = *pair.mdp();
  if (!mdp.has_sub_rewards()) {
    throw InputError("covariance conditions need sub-rewards; MDP '" + mdp.id() + "' declares none");
  }
  const auto space = enumerate_trajectories(pair.behaviour, horizon, guard);
  const auto weights = compute_weights(space.trajectories, pair);
  const std::size_t M = space.size();
  const std::size_t D = mdp.num_factors();
  const std::size_t T = horizon;

  // per-atom samples of r^d_t and rho^d_{0:t}
  auto reward_at = [&](std::size_t d, std::size_t t) {
    std::vector<double> v(M);
    for (std::size_t i = 0; i < M; ++i) {
      const auto traj = space.trajectories.trajectory(i);
      v[i] = mdp.sub_reward(d, mdp.abstract_state(d, traj.states[t]), mdp.sub_action(traj.actions[t], d));
    }
    return v;
  };
  auto ratio_at = [&](std::size_t d, std::size_t t) {
    std::vector<double> v(M);
    for (std::size_t i = 0; i < M; ++i) {
      v[i] = weights.factor(d, i, t);
    }
    return v;
  };
  auto covariance = [&](const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = detail::weighted_moments(x, space.probability).mean;
    const double my = detail::weighted_moments(y, space.probability).mean;
    CompensatedSum acc;
    for (std::size_t i = 0; i < M; ++i) {
      acc.add(space.probability[i] * (x[i] - mx) * (y[i] - my));
    }
    return acc.value();
  };

  std::vector<std::vector<std::vector<double>>> r(D), rho(D);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t t = 0; t < T; ++t) {
      r[d].push_back(reward_at(d, t));
      rho[d].push_back(ratio_at(d, t));
    }
  }

  AssumptionReport report{.horizon = T, .probability_mass = space.total_probability(), .tolerance = tol};
  for (std::size_t c = 0; c < 4; ++c) {
    report.conditions[c].condition = static_cast<CovarianceCondition>(c);
  }
  auto record = [&](CovarianceCondition c, CovarianceEntry e) {
    report.conditions[static_cast<std::size_t>(c)].entries.push_back(e);
  };
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t d2 = 0; d2 < D; ++d2) {
      if (d2 == d) {
        continue;
      }
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t t2 = 0; t2 < T; ++t2) {
          if (t2 != t) {
            record(CovarianceCondition::reward_reward, {d, d2, t, t2, covariance(r[d][t], r[d2][t2])});
          }
        }
        record(CovarianceCondition::reward_ratio, {d, d2, t, T - 1, covariance(r[d][t], rho[d2][T - 1])});
      }
      record(CovarianceCondition::ratio_ratio, {d, d2, T - 1, T - 1, covariance(rho[d][T - 1], rho[d2][T - 1])});
    }
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t t2 = 0; t2 < T; ++t2) {
        if (t2 != t) {
          record(CovarianceCondition::same_factor_prefix, {d, d, t, t2, covariance(rho[d][t], rho[d][t2])});
        }
      }
    }
  }

  for (auto& c : report.conditions) {
    if (c.entries.empty()) {
      continue;
    }
    c.min = std::numeric_limits<double>::infinity();
    c.max = -std::numeric_limits<double>::infinity();
    for (const auto& e : c.entries) {
      c.min = std::min(c.min, e.value);
      c.max = std::max(c.max, e.value);
    }
    const bool equality =
        c.condition == CovarianceCondition::ratio_ratio || c.condition == CovarianceCondition::reward_ratio;
    c.passed = equality ? (c.min >= -tol && c.max <= tol) : c.min >= -tol;
  }
  return report;
}

}  // namespace factope
