#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factope/errors.hpp"
#include "factope/mdp.hpp"
#include "factope/numeric.hpp"
#include "factope/policy.hpp"
#include "factope/sampling.hpp"

/**
 * \file
 * \brief Importance-sampling estimators of the evaluation policy's value, plain and decomposed.
 *
 * Conventions: steps t = 0..T-1, discount gamma^t, and rho_{0:t} is the inclusive prefix product
 * of step ratios up to and including step t. The decomposed estimators run one IS-family
 * estimator per action factor, each with its own factor weights rho^d and sub-rewards r^d, and
 * sum the results. All sums run in ascending trajectory order with compensated accumulation.
 */

namespace factope {

enum class EstimatorId { is, pdis, pdwis, dec_is, dec_pdis, dec_pdwis, on_policy };

inline constexpr std::array<EstimatorId, 6> kOffPolicyEstimators{
    EstimatorId::is,     EstimatorId::pdis,     EstimatorId::pdwis,
    EstimatorId::dec_is, EstimatorId::dec_pdis, EstimatorId::dec_pdwis,
};

[[nodiscard]] constexpr std::string_view to_string(EstimatorId id) noexcept {
  switch (id) {
    case EstimatorId::is:
      return "is";
    case EstimatorId::pdis:
      return "pdis";
    case EstimatorId::pdwis:
      return "pdwis";
    case EstimatorId::dec_is:
      return "decis";
    case EstimatorId::dec_pdis:
      return "decpdis";
    case EstimatorId::dec_pdwis:
      return "decpdwis";
    case EstimatorId::on_policy:
      return "onpolicy";
  }
  return "unknown";
}

[[nodiscard]] inline EstimatorId parse_estimator(std::string_view name) {
  for (auto id : {EstimatorId::is, EstimatorId::pdis, EstimatorId::pdwis, EstimatorId::dec_is, EstimatorId::dec_pdis,
                  EstimatorId::dec_pdwis, EstimatorId::on_policy}) {
    if (to_string(id) == name) {
      return id;
    }
  }
  throw InputError("unknown estimator '" + std::string{name} + "'");
}

[[nodiscard]] constexpr bool is_decomposed(EstimatorId id) noexcept {
  return id == EstimatorId::dec_is || id == EstimatorId::dec_pdis || id == EstimatorId::dec_pdwis;
}

[[nodiscard]] constexpr bool is_weighted(EstimatorId id) noexcept {
  return id == EstimatorId::pdwis || id == EstimatorId::dec_pdwis;
}

struct WeightStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double sum = 0.0;
};

struct Estimate {
  EstimatorId estimator = EstimatorId::is;
  double value = 0.0;
  /// One contribution per factor for decomposed estimators; empty otherwise.
  std::vector<double> per_factor;
  WeightStats weight_stats;
  /// Some trajectory had a zero joint or factor weight.
  bool coverage_flag = false;
};

/// Cumulative importance weights for every (trajectory, step), jointly and per factor.
class WeightTensor {
 public:
  WeightTensor(std::size_t n, std::size_t horizon, std::size_t factors)
      : n_{n}, horizon_{horizon}, factors_{factors}, joint_(n * horizon), factor_(factors * n * horizon) {}

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t num_factors() const noexcept { return factors_; }

  /// rho_{0:t} for trajectory n.
  [[nodiscard]] double joint(std::size_t n, std::size_t t) const noexcept { return joint_[n * horizon_ + t]; }
  /// rho^d_{0:t} for trajectory n.
  [[nodiscard]] double factor(std::size_t d, std::size_t n, std::size_t t) const noexcept {
    return factor_[(d * n_ + n) * horizon_ + t];
  }
  [[nodiscard]] double joint_full(std::size_t n) const noexcept { return joint(n, horizon_ - 1); }
  [[nodiscard]] double factor_full(std::size_t d, std::size_t n) const noexcept { return factor(d, n, horizon_ - 1); }

  double& joint_ref(std::size_t n, std::size_t t) noexcept { return joint_[n * horizon_ + t]; }
  double& factor_ref(std::size_t d, std::size_t n, std::size_t t) noexcept { return factor_[(d * n_ + n) * horizon_ + t]; }

 private:
  std::size_t n_;
  std::size_t horizon_;
  std::size_t factors_;
  std::vector<double> joint_;
  std::vector<double> factor_;
};

namespace detail {

inline void check_compatible(const DatasetView& data, const FactoredMdp& mdp) {
  if (data.size() == 0) {
    throw InputError("estimators need a non-empty dataset");
  }
  if (data.horizon() == 0) {
    throw InputError("estimators need at least one step per trajectory");
  }
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto traj = data.trajectory(n);
    for (auto s : traj.states) {
      if (s >= mdp.num_states()) {
        throw InputError("dataset state index outside MDP '" + mdp.id() + "'");
      }
    }
    for (auto a : traj.actions) {
      if (a >= mdp.num_actions()) {
        throw InputError("dataset action index outside MDP '" + mdp.id() + "'");
      }
    }
  }
}

}  // namespace detail

/// Computes rho_{0:t} and rho^d_{0:t}. Throws CoverageError if an observed action has zero
/// behaviour probability, jointly or in any factor (the data cannot have come from pi_b).
[[nodiscard]] inline WeightTensor compute_weights(const DatasetView& data, const PolicyPair& pair) {
  const auto& mdp = *pair.mdp();
  detail::check_compatible(data, mdp);
  const std::size_t D = mdp.num_factors();
  WeightTensor w{data.size(), data.horizon(), D};
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto traj = data.trajectory(n);
    double joint = 1.0;
    for (std::size_t t = 0; t < traj.horizon(); ++t) {
      const std::size_t s = traj.states[t];
      const std::size_t a = traj.actions[t];
      const double b = pair.behaviour.joint(s, a);
      if (b == 0.0) {
        throw CoverageError("observed action (" + mdp.state_name(s) + ", " + mdp.action_name(a) +
                            ") has zero behaviour probability");
      }
      joint *= pair.evaluation.joint(s, a) / b;
      w.joint_ref(n, t) = joint;
    }
    for (std::size_t d = 0; d < D; ++d) {
      double cumulative = 1.0;
      for (std::size_t t = 0; t < traj.horizon(); ++t) {
        const std::size_t s = traj.states[t];
        const std::size_t a = traj.actions[t];
        const double b = pair.behaviour.factor_probability_at(d, s, a);
        if (b == 0.0) {
          throw CoverageError("observed sub-action '" + mdp.factor(d).sub_actions[mdp.sub_action(a, d)] +
                              "' has zero behaviour probability");
        }
        cumulative *= pair.evaluation.factor_probability_at(d, s, a) / b;
        w.factor_ref(d, n, t) = cumulative;
      }
    }
  }
  return w;
}

namespace detail {

enum class WeightingKind { trajectory, per_decision, weighted_per_decision };

struct ChannelResult {
  double value = 0.0;
  double weight_min = std::numeric_limits<double>::infinity();
  double weight_max = -std::numeric_limits<double>::infinity();
  CompensatedSum weight_sum;
  std::size_t weight_count = 0;

  void observe(double w) noexcept {
    weight_min = std::min(weight_min, w);
    weight_max = std::max(weight_max, w);
    weight_sum.add(w);
    ++weight_count;
  }
};

/// One IS-family estimate from a weight accessor w(n, t) and reward accessor r(n, t).
/// Plain and decomposed estimators share this kernel, which is what makes the all-in-one
/// grouping reproduce the plain estimators exactly.
template <class Weight, class Reward>
ChannelResult run_channel(std::size_t N, std::size_t T, double gamma, WeightingKind kind, Weight&& w, Reward&& r,
                          std::string_view channel_name) {
  ChannelResult out;
  CompensatedSum numerator;
  CompensatedSum denominator;
  for (std::size_t n = 0; n < N; ++n) {
    CompensatedSum term;
    CompensatedSum weight_term;
    double discount = 1.0;
    if (kind == WeightingKind::trajectory) {
      for (std::size_t t = 0; t < T; ++t) {
        term.add(discount * r(n, t));
        discount *= gamma;
      }
      const double weight = w(n, T - 1);
      out.observe(weight);
      numerator.add(weight * term.value());
      continue;
    }
    for (std::size_t t = 0; t < T; ++t) {
      const double weight = w(n, t);
      out.observe(weight);
      term.add(discount * weight * r(n, t));
      weight_term.add(discount * weight);
      discount *= gamma;
    }
    numerator.add(term.value());
    denominator.add(weight_term.value());
  }
  if (kind == WeightingKind::weighted_per_decision) {
    const double den = denominator.value();
    if (den == 0.0) {
      throw DegenerateWeightsError("weighted estimator denominator is zero for " + std::string{channel_name} +
                                   " (no coverage of the evaluation policy)");
    }
    out.value = numerator.value() / den;
  } else {
    out.value = numerator.value() / static_cast<double>(N);
  }
  return out;
}

inline WeightingKind weighting_of(EstimatorId id) {
  switch (id) {
    case EstimatorId::is:
    case EstimatorId::dec_is:
      return WeightingKind::trajectory;
    case EstimatorId::pdis:
    case EstimatorId::dec_pdis:
      return WeightingKind::per_decision;
    case EstimatorId::pdwis:
    case EstimatorId::dec_pdwis:
      return WeightingKind::weighted_per_decision;
    case EstimatorId::on_policy:
      break;
  }
  throw InputError("on-policy estimate has no importance weighting");
}

inline WeightStats finish_stats(const ChannelResult& c) {
  if (c.weight_count == 0) {
    return {};
  }
  const double sum = c.weight_sum.value();
  return {c.weight_min, c.weight_max, sum / static_cast<double>(c.weight_count), sum};
}

inline bool any_zero_weight(const WeightTensor& w) {
  for (std::size_t n = 0; n < w.size(); ++n) {
    if (w.joint_full(n) == 0.0) {
      return true;
    }
    for (std::size_t d = 0; d < w.num_factors(); ++d) {
      if (w.factor_full(d, n) == 0.0) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace detail

/// (1/N) sum_n sum_t gamma^t r_t.
[[nodiscard]] inline Estimate on_policy_estimate(const DatasetView& data, double gamma) {
  if (data.size() == 0 || data.horizon() == 0) {
    throw InputError("on-policy estimate needs a non-empty dataset");
  }
  CompensatedSum total;
  for (std::size_t n = 0; n < data.size(); ++n) {
    total.add(discounted_return(data.trajectory(n), gamma));
  }
  const double N = static_cast<double>(data.size());
  return {EstimatorId::on_policy, total.value() / N, {}, {1.0, 1.0, 1.0, N}, false};
}

/// Evaluates one estimator with precomputed weights.
[[nodiscard]] inline Estimate estimate(EstimatorId id, const DatasetView& data, const PolicyPair& pair,
                                       const WeightTensor& weights, double gamma) {
  if (id == EstimatorId::on_policy) {
    return on_policy_estimate(data, gamma);
  }
  const auto& mdp = *pair.mdp();
  if (weights.size() != data.size() || weights.horizon() != data.horizon()) {
    throw InputError("weight tensor does not match the dataset");
  }
  const std::size_t N = data.size();
  const std::size_t T = data.horizon();
  const auto kind = detail::weighting_of(id);
  Estimate out{.estimator = id, .coverage_flag = detail::any_zero_weight(weights)};

  if (!is_decomposed(id)) {
    auto result = detail::run_channel(
        N, T, gamma, kind, [&](std::size_t n, std::size_t t) { return weights.joint(n, t); },
        [&](std::size_t n, std::size_t t) { return data.trajectory(n).rewards[t]; }, "the joint policy");
    out.value = result.value;
    out.weight_stats = detail::finish_stats(result);
    return out;
  }

  if (!mdp.has_sub_rewards()) {
    throw InputError("decomposed estimators need sub-rewards; MDP '" + mdp.id() + "' declares none");
  }
  detail::ChannelResult pooled;
  CompensatedSum total;
  for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
    auto result = detail::run_channel(
        N, T, gamma, kind, [&](std::size_t n, std::size_t t) { return weights.factor(d, n, t); },
        [&](std::size_t n, std::size_t t) {
          const auto traj = data.trajectory(n);
          return mdp.sub_reward(d, mdp.abstract_state(d, traj.states[t]), mdp.sub_action(traj.actions[t], d));
        },
        "factor " + std::to_string(d + 1) + " ('" + mdp.factor(d).name + "')");
    out.per_factor.push_back(result.value);
    total.add(result.value);
    pooled.weight_min = std::min(pooled.weight_min, result.weight_min);
    pooled.weight_max = std::max(pooled.weight_max, result.weight_max);
    pooled.weight_sum.add(result.weight_sum.value());
    pooled.weight_count += result.weight_count;
  }
  out.value = total.value();
  out.weight_stats = detail::finish_stats(pooled);
  return out;
}

[[nodiscard]] inline Estimate estimate(EstimatorId id, const DatasetView& data, const PolicyPair& pair, double gamma) {
  if (id == EstimatorId::on_policy) {
    return on_policy_estimate(data, gamma);
  }
  return estimate(id, data, pair, compute_weights(data, pair), gamma);
}

/// (1/N) sum_n rho_{0:T-1} sum_t gamma^t r_t.
[[nodiscard]] inline Estimate is_estimate(const DatasetView& data, const PolicyPair& pair, double gamma) {
  return estimate(EstimatorId::is, data, pair, gamma);
}

/// (1/N) sum_n sum_t gamma^t rho_{0:t} r_t.
[[nodiscard]] inline Estimate pdis_estimate(const DatasetView& data, const PolicyPair& pair, double gamma) {
  return estimate(EstimatorId::pdis, data, pair, gamma);
}

/// sum_n sum_t gamma^t rho_{0:t} r_t / sum_n sum_t gamma^t rho_{0:t}.
[[nodiscard]] inline Estimate pdwis_estimate(const DatasetView& data, const PolicyPair& pair, double gamma) {
  return estimate(EstimatorId::pdwis, data, pair, gamma);
}

/// sum_d (1/N) sum_n rho^d_{0:T-1} sum_t gamma^t r^d_t.
[[nodiscard]] inline Estimate dec_is_estimate(const DatasetView& data, const PolicyPair& pair, double gamma) {
  return estimate(EstimatorId::dec_is, data, pair, gamma);
}

/// sum_d (1/N) sum_n sum_t gamma^t rho^d_{0:t} r^d_t.
[[nodiscard]] inline Estimate dec_pdis_estimate(const DatasetView& data, const PolicyPair& pair, double gamma) {
  return estimate(EstimatorId::dec_pdis, data, pair, gamma);
}

/// sum_d of per-factor weighted ratios; every factor needs a positive denominator.
[[nodiscard]] inline Estimate dec_pdwis_estimate(const DatasetView& data, const PolicyPair& pair, double gamma) {
  return estimate(EstimatorId::dec_pdwis, data, pair, gamma);
}

// ---------------------------------------------------------------------------------------------
// Grouping factors into composite factors

/// Partition of factor indices (0-based) into groups.
struct Grouping {
  std::vector<std::vector<std::size_t>> groups;

  void validate(std::size_t num_factors) const {
    if (groups.empty()) {
      throw InputError("grouping has no groups");
    }
    std::vector<int> seen(num_factors, 0);
    for (const auto& g : groups) {
      if (g.empty()) {
        throw InputError("grouping has an empty group");
      }
      for (std::size_t d : g) {
        if (d >= num_factors) {
          throw InputError("grouping refers to factor " + std::to_string(d + 1) + " but the MDP has " +
                           std::to_string(num_factors));
        }
        if (seen[d]++ != 0) {
          throw InputError("factor " + std::to_string(d + 1) + " appears in more than one group");
        }
      }
    }
    for (std::size_t d = 0; d < num_factors; ++d) {
      if (seen[d] == 0) {
        throw InputError("factor " + std::to_string(d + 1) + " is missing from the grouping");
      }
    }
  }

  [[nodiscard]] static Grouping identity(std::size_t num_factors) {
    Grouping g;
    for (std::size_t d = 0; d < num_factors; ++d) {
      g.groups.push_back({d});
    }
    return g;
  }

  [[nodiscard]] static Grouping all_in_one(std::size_t num_factors) {
    Grouping g;
    g.groups.emplace_back(num_factors);
    std::iota(g.groups.front().begin(), g.groups.front().end(), std::size_t{0});
    return g;
  }
};

/// Parses "1,2|3" (1-based factor numbers, groups separated by '|').
[[nodiscard]] inline Grouping parse_grouping(std::string_view text) {
  Grouping out;
  std::vector<std::size_t> current;
  std::string number;
  auto flush_number = [&] {
    if (number.empty()) {
      throw InputError("malformed grouping '" + std::string{text} + "'");
    }
    if (!std::all_of(number.begin(), number.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw InputError("malformed factor number '" + number + "' in grouping");
    }
    std::size_t pos = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(number, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != number.size() || value == 0) {
      throw InputError("malformed factor number '" + number + "' in grouping");
    }
    current.push_back(value - 1);
    number.clear();
  };
  for (char c : text) {
    if (c == ' ') {
      continue;
    }
    if (c == ',') {
      flush_number();
    } else if (c == '|') {
      flush_number();
      out.groups.push_back(std::move(current));
      current.clear();
    } else {
      number += c;
    }
  }
  flush_number();
  out.groups.push_back(std::move(current));
  return out;
}

enum class GroupRewardSource {
  /// r^k(z^k, a^k) = sum of member sub-rewards.
  sum_of_members,
  /// Single-group case only: r^1(z, a) = r(s, a) for any s with phi(s) = z.
  environment,
};

/// A re-factored MDP and policy pair, plus the map from original to regrouped joint action indices.
struct GroupedModel {
  MdpPtr mdp;
  PolicyPair pair;
  std::vector<std::size_t> action_map;
};

/// Merges factors per `grouping`: composite sub-action spaces are Cartesian products (last member
/// fastest), composite abstractions are tuples of member abstractions, composite policy factors are
/// products of member factors. Members within a group are taken in ascending factor order.
[[nodiscard]] inline GroupedModel group_factors(const PolicyPair& pair, Grouping grouping,
                                                GroupRewardSource rewards = GroupRewardSource::sum_of_members) {
  const auto& mdp = *pair.mdp();
  const std::size_t D = mdp.num_factors();
  grouping.validate(D);
  for (auto& g : grouping.groups) {
    std::sort(g.begin(), g.end());
  }
  if (rewards == GroupRewardSource::environment && grouping.groups.size() != 1) {
    throw InputError("environment rewards can only back a single all-factor group");
  }

  const std::size_t S = mdp.num_states();
  const std::size_t K = grouping.groups.size();
  MdpTables t;
  t.id = mdp.id() + "/grouped";
  t.states = mdp.tables().states;
  t.initial_state = mdp.initial_state();
  t.horizon = mdp.horizon_default();
  t.discount = mdp.discount_default();

  std::vector<std::vector<double>> behaviour_tables;
  std::vector<std::vector<double>> evaluation_tables;

  for (const auto& members : grouping.groups) {
    ActionFactor merged;
    // mixed-radix sizes over members, last member fastest
    std::size_t num_z = 1;
    std::size_t num_a = 1;
    for (std::size_t m : members) {
      num_z *= mdp.factor(m).num_abstract_states();
      num_a *= mdp.factor(m).num_sub_actions();
    }
    auto split = [&](std::size_t index, bool abstract) {
      std::vector<std::size_t> parts(members.size());
      for (std::size_t i = members.size(); i-- > 0;) {
        const auto& f = mdp.factor(members[i]);
        const std::size_t radix = abstract ? f.num_abstract_states() : f.num_sub_actions();
        parts[i] = index % radix;
        index /= radix;
      }
      return parts;
    };
    for (std::size_t i = 0; i < members.size(); ++i) {
      merged.name += (i == 0 ? "" : "+") + mdp.factor(members[i]).name;
    }
    for (std::size_t k = 0; k < num_a; ++k) {
      const auto parts = split(k, false);
      std::string name;
      for (std::size_t i = 0; i < members.size(); ++i) {
        name += (i == 0 ? "" : "+") + mdp.factor(members[i]).sub_actions[parts[i]];
      }
      merged.sub_actions.push_back(std::move(name));
    }
    for (std::size_t z = 0; z < num_z; ++z) {
      const auto parts = split(z, true);
      std::string name;
      for (std::size_t i = 0; i < members.size(); ++i) {
        name += (i == 0 ? "" : "&") + mdp.factor(members[i]).abstract_states[parts[i]];
      }
      merged.abstract_states.push_back(std::move(name));
    }
    merged.abstraction.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
      std::size_t z = 0;
      for (std::size_t m : members) {
        z = z * mdp.factor(m).num_abstract_states() + mdp.abstract_state(m, s);
      }
      merged.abstraction[s] = z;
    }

    std::vector<double> pb(num_z * num_a);
    std::vector<double> pe(num_z * num_a);
    for (std::size_t z = 0; z < num_z; ++z) {
      const auto zs = split(z, true);
      for (std::size_t k = 0; k < num_a; ++k) {
        const auto ks = split(k, false);
        double b = 1.0;
        double e = 1.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
          b *= pair.behaviour.factor_probability(members[i], zs[i], ks[i]);
          e *= pair.evaluation.factor_probability(members[i], zs[i], ks[i]);
        }
        pb[z * num_a + k] = b;
        pe[z * num_a + k] = e;
      }
    }
    behaviour_tables.push_back(std::move(pb));
    evaluation_tables.push_back(std::move(pe));

    if (rewards == GroupRewardSource::sum_of_members && mdp.has_sub_rewards()) {
      merged.sub_rewards.resize(num_z * num_a);
      for (std::size_t z = 0; z < num_z; ++z) {
        const auto zs = split(z, true);
        for (std::size_t k = 0; k < num_a; ++k) {
          const auto ks = split(k, false);
          double r = 0.0;
          for (std::size_t i = 0; i < members.size(); ++i) {
            r += mdp.sub_reward(members[i], zs[i], ks[i]);
          }
          merged.sub_rewards[z * num_a + k] = r;
        }
      }
    }
    t.factors.push_back(std::move(merged));
  }

  // joint action re-encoding
  std::vector<std::size_t> action_map(mdp.num_actions());
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    std::size_t index = 0;
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t local = 0;
      for (std::size_t m : grouping.groups[k]) {
        local = local * mdp.factor(m).num_sub_actions() + mdp.sub_action(a, m);
      }
      index = index * t.factors[k].num_sub_actions() + local;
    }
    action_map[a] = index;
  }

  const std::size_t A = mdp.num_actions();
  t.transition.assign(S * A * S, 0.0);
  t.reward.assign(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t mapped = action_map[a];
      const auto row = mdp.transition_row(s, a);
      std::copy(row.begin(), row.end(), t.transition.begin() + static_cast<std::ptrdiff_t>((s * A + mapped) * S));
      t.reward[s * A + mapped] = mdp.reward(s, a);
    }
  }

  if (rewards == GroupRewardSource::environment) {
    auto& f = t.factors.front();
    const std::size_t num_a = f.num_sub_actions();
    f.sub_rewards.assign(f.num_abstract_states() * num_a, 0.0);
    std::vector<bool> assigned(f.sub_rewards.size(), false);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const std::size_t key = f.abstraction[s] * num_a + action_map[a];
        const double r = mdp.reward(s, a);
        if (assigned[key] && f.sub_rewards[key] != r) {
          throw InputError("environment reward differs across states sharing a composite abstraction");
        }
        f.sub_rewards[key] = r;
        assigned[key] = true;
      }
    }
  }

  auto grouped = std::make_shared<const FactoredMdp>(std::move(t));
  FactoredPolicy behaviour{grouped, std::move(behaviour_tables), pair.behaviour.name()};
  FactoredPolicy evaluation{grouped, std::move(evaluation_tables), pair.evaluation.name()};
  return {grouped, PolicyPair{std::move(behaviour), std::move(evaluation), pair.divergence_label},
          std::move(action_map)};
}

/// Copies a dataset with joint actions re-encoded for a grouped model.
[[nodiscard]] inline Dataset regroup_dataset(const DatasetView& data, const GroupedModel& model) {
  auto meta = data.base().metadata();
  meta.mdp_id = model.mdp->id();
  meta.first_index += data.first();
  Dataset out{std::move(meta), data.size(), data.horizon()};
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto traj = data.trajectory(n);
    std::copy(traj.states.begin(), traj.states.end(), out.states_of(n).begin());
    std::copy(traj.rewards.begin(), traj.rewards.end(), out.rewards_of(n).begin());
    auto actions = out.actions_of(n);
    for (std::size_t t = 0; t < traj.horizon(); ++t) {
      actions[t] = static_cast<std::uint32_t>(model.action_map.at(traj.actions[t]));
    }
  }
  return out;
}

}  // namespace factope
