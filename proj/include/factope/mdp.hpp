#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factope/errors.hpp"

/**
 * \file
 * \brief Tabular MDPs with a factored action space, per-factor state abstractions and sub-rewards.
 *
 * States and joint actions are dense indices. A joint action is a vector of one sub-action per
 * factor, encoded mixed-radix with the last factor varying fastest, so for two binary factors
 * {left, right} x {down, up} the joint indices are (left,down)=0, (left,up)=1, (right,down)=2,
 * (right,up)=3.
 */

namespace factope {

inline constexpr double kDefaultTolerance = 1e-12;

/// One sub-action space together with its state abstraction and (optional) sub-reward table.
struct ActionFactor {
  std::string name;
  std::vector<std::string> sub_actions;
  std::vector<std::string> abstract_states;
  /// abstraction[s] is the abstract-state index of state s.
  std::vector<std::size_t> abstraction;
  /// Row-major [abstract state][sub-action]; empty when the factor declares no sub-rewards.
  std::vector<double> sub_rewards;

  [[nodiscard]] std::size_t num_sub_actions() const noexcept { return sub_actions.size(); }
  [[nodiscard]] std::size_t num_abstract_states() const noexcept { return abstract_states.size(); }
};

/// Raw tables consumed by the FactoredMdp constructor.
struct MdpTables {
  std::string id;
  std::vector<std::string> states;
  std::vector<ActionFactor> factors;
  /// Row-major [s][a][s'].
  std::vector<double> transition;
  /// Row-major [s][a].
  std::vector<double> reward;
  std::size_t initial_state = 0;
  std::size_t horizon = 1;
  double discount = 1.0;
};

/// Immutable, validated factored MDP. Safe to share across threads.
class FactoredMdp {
 public:
  explicit FactoredMdp(MdpTables tables) : t_{std::move(tables)} {
    validate_and_index();
  }

  [[nodiscard]] const std::string& id() const noexcept { return t_.id; }
  [[nodiscard]] std::size_t num_states() const noexcept { return t_.states.size(); }
  [[nodiscard]] std::size_t num_actions() const noexcept { return num_actions_; }
  [[nodiscard]] std::size_t num_factors() const noexcept { return t_.factors.size(); }
  [[nodiscard]] std::size_t initial_state() const noexcept { return t_.initial_state; }
  [[nodiscard]] std::size_t horizon_default() const noexcept { return t_.horizon; }
  [[nodiscard]] double discount_default() const noexcept { return t_.discount; }
  [[nodiscard]] const MdpTables& tables() const noexcept { return t_; }

  [[nodiscard]] const ActionFactor& factor(std::size_t d) const {
    check_factor(d);
    return t_.factors[d];
  }

  [[nodiscard]] const std::string& state_name(std::size_t s) const {
    check_state(s);
    return t_.states[s];
  }

  [[nodiscard]] std::size_t state_index(std::string_view name) const {
    const auto it = std::find(t_.states.begin(), t_.states.end(), name);
    if (it == t_.states.end()) {
      throw InputError("unknown state '" + std::string{name} + "' in MDP '" + t_.id + "'");
    }
    return static_cast<std::size_t>(it - t_.states.begin());
  }

  [[nodiscard]] double transition(std::size_t s, std::size_t a, std::size_t next) const noexcept {
    return t_.transition[(s * num_actions_ + a) * num_states() + next];
  }

  [[nodiscard]] std::span<const double> transition_row(std::size_t s, std::size_t a) const noexcept {
    return {t_.transition.data() + (s * num_actions_ + a) * num_states(), num_states()};
  }

  [[nodiscard]] double reward(std::size_t s, std::size_t a) const noexcept { return t_.reward[s * num_actions_ + a]; }

  [[nodiscard]] bool has_sub_rewards() const noexcept { return has_sub_rewards_; }

  [[nodiscard]] double sub_reward(std::size_t d, std::size_t z, std::size_t sub_action) const noexcept {
    const auto& f = t_.factors[d];
    return f.sub_rewards[z * f.num_sub_actions() + sub_action];
  }

  [[nodiscard]] std::size_t abstract_state(std::size_t d, std::size_t s) const noexcept {
    return t_.factors[d].abstraction[s];
  }

  [[nodiscard]] std::size_t sub_action(std::size_t a, std::size_t d) const noexcept {
    return (a / strides_[d]) % t_.factors[d].num_sub_actions();
  }

  [[nodiscard]] std::size_t encode(std::span<const std::size_t> sub_actions) const {
    if (sub_actions.size() != num_factors()) {
      throw InputError("action vector has " + std::to_string(sub_actions.size()) + " entries, expected " +
                       std::to_string(num_factors()));
    }
    std::size_t a = 0;
    for (std::size_t d = 0; d < num_factors(); ++d) {
      if (sub_actions[d] >= t_.factors[d].num_sub_actions()) {
        throw InputError("sub-action index out of range for factor " + std::to_string(d));
      }
      a += sub_actions[d] * strides_[d];
    }
    return a;
  }

  [[nodiscard]] std::vector<std::size_t> decode(std::size_t a) const {
    std::vector<std::size_t> out(num_factors());
    for (std::size_t d = 0; d < num_factors(); ++d) {
      out[d] = sub_action(a, d);
    }
    return out;
  }

  /// Sub-action names joined by ',' in factor order, e.g. "right,up".
  [[nodiscard]] std::string action_name(std::size_t a) const {
    std::string out;
    for (std::size_t d = 0; d < num_factors(); ++d) {
      if (d != 0) {
        out += ',';
      }
      out += t_.factors[d].sub_actions[sub_action(a, d)];
    }
    return out;
  }

  [[nodiscard]] std::size_t action_index(std::string_view name) const {
    for (std::size_t a = 0; a < num_actions_; ++a) {
      if (action_name(a) == name) {
        return a;
      }
    }
    throw InputError("unknown joint action '" + std::string{name} + "' in MDP '" + t_.id + "'");
  }

  [[nodiscard]] std::size_t sub_action_index(std::size_t d, std::string_view name) const {
    const auto& subs = factor(d).sub_actions;
    const auto it = std::find(subs.begin(), subs.end(), name);
    if (it == subs.end()) {
      throw InputError("unknown sub-action '" + std::string{name} + "' for factor " + std::to_string(d));
    }
    return static_cast<std::size_t>(it - subs.begin());
  }

  [[nodiscard]] std::size_t abstract_state_index(std::size_t d, std::string_view name) const {
    const auto& zs = factor(d).abstract_states;
    const auto it = std::find(zs.begin(), zs.end(), name);
    if (it == zs.end()) {
      throw InputError("unknown abstract state '" + std::string{name} + "' for factor " + std::to_string(d));
    }
    return static_cast<std::size_t>(it - zs.begin());
  }

  void check_state(std::size_t s) const {
    if (s >= num_states()) {
      throw InputError("state index " + std::to_string(s) + " out of range");
    }
  }

  void check_factor(std::size_t d) const {
    if (d >= num_factors()) {
      throw InputError("factor index " + std::to_string(d) + " out of range (D=" + std::to_string(num_factors()) +
                       ")");
    }
  }

 private:
  void validate_and_index() {
    const std::size_t S = t_.states.size();
    if (S == 0) {
      throw InputError("MDP must have at least one state");
    }
    if (t_.factors.empty()) {
      throw InputError("MDP must have at least one action factor");
    }
    num_actions_ = 1;
    for (const auto& f : t_.factors) {
      if (f.sub_actions.empty() || f.abstract_states.empty()) {
        throw InputError("factor '" + f.name + "' has an empty sub-action or abstract-state set");
      }
      num_actions_ *= f.num_sub_actions();
    }
    strides_.assign(t_.factors.size(), 1);
    for (std::size_t d = t_.factors.size() - 1; d > 0; --d) {
      strides_[d - 1] = strides_[d] * t_.factors[d].num_sub_actions();
    }

    std::size_t declared = 0;
    for (const auto& f : t_.factors) {
      if (f.abstraction.size() != S) {
        throw InputError("abstraction of factor '" + f.name + "' is not total over states");
      }
      for (std::size_t z : f.abstraction) {
        if (z >= f.num_abstract_states()) {
          throw InputError("abstraction of factor '" + f.name + "' maps to an unknown abstract state");
        }
      }
      if (!f.sub_rewards.empty()) {
        if (f.sub_rewards.size() != f.num_abstract_states() * f.num_sub_actions()) {
          throw InputError("sub-reward table of factor '" + f.name + "' has the wrong size");
        }
        for (double r : f.sub_rewards) {
          if (!std::isfinite(r)) {
            throw InputError("sub-reward table of factor '" + f.name + "' has a non-finite entry");
          }
        }
        ++declared;
      }
    }
    if (declared != 0 && declared != t_.factors.size()) {
      throw InputError("sub-rewards must be declared for every factor or for none");
    }
    has_sub_rewards_ = declared != 0;

    if (t_.transition.size() != S * num_actions_ * S) {
      throw InputError("transition table has the wrong size");
    }
    if (t_.reward.size() != S * num_actions_) {
      throw InputError("reward table has the wrong size");
    }
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < num_actions_; ++a) {
        double total = 0.0;
        for (double p : transition_row(s, a)) {
          if (!(p >= 0.0) || !std::isfinite(p)) {
            throw InputError("transition row (" + t_.states[s] + ", " + action_name(a) +
                             ") has a negative or non-finite entry");
          }
          total += p;
        }
        if (std::abs(total - 1.0) > kDefaultTolerance) {
          throw InputError("transition row (" + t_.states[s] + ", " + action_name(a) + ") sums to " +
                           std::to_string(total));
        }
        if (!std::isfinite(reward(s, a))) {
          throw InputError("non-finite reward at (" + t_.states[s] + ", " + action_name(a) + ")");
        }
      }
    }
    if (t_.initial_state >= S) {
      throw InputError("initial state out of range");
    }
    if (t_.horizon == 0) {
      throw InputError("default horizon must be positive");
    }
    if (!(t_.discount >= 0.0 && t_.discount <= 1.0)) {
      throw InputError("default discount must lie in [0, 1]");
    }
  }

  MdpTables t_;
  std::size_t num_actions_ = 0;
  std::vector<std::size_t> strides_;
  bool has_sub_rewards_ = false;
};

using MdpPtr = std::shared_ptr<const FactoredMdp>;

/// phi^d(s) with range checks.
[[nodiscard]] inline std::size_t abstract_state(const FactoredMdp& mdp, std::size_t d, std::size_t s) {
  mdp.check_factor(d);
  mdp.check_state(s);
  return mdp.abstract_state(d, s);
}

/// Name-based variant: returns the abstract state's label, e.g. "0,?".
[[nodiscard]] inline std::string abstract_state(const FactoredMdp& mdp, std::size_t d, std::string_view state) {
  mdp.check_factor(d);
  return mdp.factor(d).abstract_states[mdp.abstract_state(d, mdp.state_index(state))];
}

// ---------------------------------------------------------------------------------------------
// Factorisation checks

enum class FactorisationCondition { reward, transition, policy };

[[nodiscard]] inline std::string_view to_string(FactorisationCondition c) noexcept {
  switch (c) {
    case FactorisationCondition::reward:
      return "reward";
    case FactorisationCondition::transition:
      return "transition";
    case FactorisationCondition::policy:
      return "policy";
  }
  return "unknown";
}

struct FactorisationReport {
  FactorisationCondition condition = FactorisationCondition::reward;
  bool passed = true;
  double residual = 0.0;
  double tolerance = kDefaultTolerance;
  std::optional<std::size_t> witness_state;
  std::optional<std::size_t> witness_action;
  /// Set when per-factor marginals differ across states sharing an abstraction.
  bool ill_defined = false;
};

/// max over (s,a) of |r(s,a) - sum_d r^d(phi^d(s), a^d)|.
[[nodiscard]] inline FactorisationReport check_reward_factorisation(const FactoredMdp& mdp,
                                                                    double tol = kDefaultTolerance) {
  if (!mdp.has_sub_rewards()) {
    throw InputError("MDP '" + mdp.id() + "' declares no sub-rewards");
  }
  FactorisationReport report{.condition = FactorisationCondition::reward, .tolerance = tol};
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      double total = 0.0;
      for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
        total += mdp.sub_reward(d, mdp.abstract_state(d, s), mdp.sub_action(a, d));
      }
      const double residual = std::abs(mdp.reward(s, a) - total);
      if (residual > report.residual) {
        report.residual = residual;
        report.witness_state = s;
        report.witness_action = a;
      }
    }
  }
  report.passed = report.residual <= tol;
  if (report.passed) {
    report.witness_state.reset();
    report.witness_action.reset();
  }
  return report;
}

/// Per-factor transition kernels p^d(z' | z, a^d), row-major [z][a^d][z'].
struct SubTransitions {
  std::vector<std::vector<double>> kernels;
  /// Largest disagreement between (s, a) pairs that should share a kernel row.
  double inconsistency = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> inconsistency_witness;
};

/// Derives p^d by marginalising the transition table over each abstraction.
[[nodiscard]] inline SubTransitions derive_sub_transitions(const FactoredMdp& mdp) {
  SubTransitions out;
  out.kernels.resize(mdp.num_factors());
  for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
    const auto& f = mdp.factor(d);
    const std::size_t Z = f.num_abstract_states();
    const std::size_t A = f.num_sub_actions();
    auto& kernel = out.kernels[d];
    kernel.assign(Z * A * Z, 0.0);
    std::vector<bool> seen(Z * A, false);
    std::vector<double> marginal(Z);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        std::fill(marginal.begin(), marginal.end(), 0.0);
        const auto row = mdp.transition_row(s, a);
        for (std::size_t next = 0; next < mdp.num_states(); ++next) {
          marginal[f.abstraction[next]] += row[next];
        }
        const std::size_t key = f.abstraction[s] * A + mdp.sub_action(a, d);
        double* dst = kernel.data() + key * Z;
        if (!seen[key]) {
          std::copy(marginal.begin(), marginal.end(), dst);
          seen[key] = true;
          continue;
        }
        for (std::size_t z = 0; z < Z; ++z) {
          const double diff = std::abs(dst[z] - marginal[z]);
          if (diff > out.inconsistency) {
            out.inconsistency = diff;
            out.inconsistency_witness = std::pair{s, a};
          }
        }
      }
    }
  }
  return out;
}

/// Checks sum_{s~ in phi^-1(phi(s'))} p(s~|s,a) = prod_d p^d(z'^d | z^d, a^d) for every (s, a, s').
[[nodiscard]] inline FactorisationReport check_transition_factorisation(const FactoredMdp& mdp,
                                                                        double tol = kDefaultTolerance) {
  FactorisationReport report{.condition = FactorisationCondition::transition, .tolerance = tol};
  const auto sub = derive_sub_transitions(mdp);
  if (sub.inconsistency > tol) {
    report.passed = false;
    report.ill_defined = true;
    report.residual = sub.inconsistency;
    report.witness_state = sub.inconsistency_witness->first;
    report.witness_action = sub.inconsistency_witness->second;
    return report;
  }
  const std::size_t S = mdp.num_states();
  const std::size_t D = mdp.num_factors();
  auto same_abstraction = [&](std::size_t x, std::size_t y) {
    for (std::size_t d = 0; d < D; ++d) {
      if (mdp.abstract_state(d, x) != mdp.abstract_state(d, y)) {
        return false;
      }
    }
    return true;
  };
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.transition_row(s, a);
      for (std::size_t next = 0; next < S; ++next) {
        double lhs = 0.0;
        for (std::size_t other = 0; other < S; ++other) {
          if (same_abstraction(other, next)) {
            lhs += row[other];
          }
        }
        double rhs = 1.0;
        for (std::size_t d = 0; d < D; ++d) {
          const auto& f = mdp.factor(d);
          const std::size_t Z = f.num_abstract_states();
          const std::size_t key = mdp.abstract_state(d, s) * f.num_sub_actions() + mdp.sub_action(a, d);
          rhs *= sub.kernels[d][key * Z + mdp.abstract_state(d, next)];
        }
        const double residual = std::abs(lhs - rhs);
        if (residual > report.residual) {
          report.residual = residual;
          report.witness_state = s;
          report.witness_action = a;
        }
      }
    }
  }
  report.passed = report.residual <= tol;
  if (report.passed) {
    report.witness_state.reset();
    report.witness_action.reset();
  }
  return report;
}

/// Transition and reward tables rebuilt from the factored sub-MDPs (product of p^d, sum of r^d).
/// Requires the joint abstraction s -> (phi^1(s), ..., phi^D(s)) to be injective.
struct ReconstructedTables {
  std::vector<double> transition;
  std::vector<double> reward;
};

[[nodiscard]] inline ReconstructedTables reconstruct_from_factors(const FactoredMdp& mdp) {
  if (!mdp.has_sub_rewards()) {
    throw InputError("MDP '" + mdp.id() + "' declares no sub-rewards");
  }
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const std::size_t D = mdp.num_factors();
  for (std::size_t x = 0; x < S; ++x) {
    for (std::size_t y = x + 1; y < S; ++y) {
      bool same = true;
      for (std::size_t d = 0; d < D && same; ++d) {
        same = mdp.abstract_state(d, x) == mdp.abstract_state(d, y);
      }
      if (same) {
        throw InputError("joint abstraction is not injective; states cannot be reconstructed");
      }
    }
  }
  const auto sub = derive_sub_transitions(mdp);
  ReconstructedTables out{std::vector<double>(S * A * S), std::vector<double>(S * A)};
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      double r = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        r += mdp.sub_reward(d, mdp.abstract_state(d, s), mdp.sub_action(a, d));
      }
      out.reward[s * A + a] = r;
      for (std::size_t next = 0; next < S; ++next) {
        double p = 1.0;
        for (std::size_t d = 0; d < D; ++d) {
          const auto& f = mdp.factor(d);
          const std::size_t Z = f.num_abstract_states();
          const std::size_t key = mdp.abstract_state(d, s) * f.num_sub_actions() + mdp.sub_action(a, d);
          p *= sub.kernels[d][key * Z + mdp.abstract_state(d, next)];
        }
        out.transition[(s * A + a) * S + next] = p;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Builders

struct Mdp1Params {
  double alpha = 1.0;
  double beta = 0.0;
};

/// Two-armed factored bandit: one decision at `state`, every action ends in `terminal`.
/// Sub-rewards are the beta = 0 factorisation regardless of beta, so decomposed estimators
/// ignore the beta interaction while the environment reward keeps it.
[[nodiscard]] inline MdpPtr build_mdp1(Mdp1Params params = {}) {
  if (!std::isfinite(params.alpha) || !std::isfinite(params.beta)) {
    throw InputError("MDP-1 parameters must be finite");
  }
  MdpTables t;
  t.id = "mdp1";
  t.states = {"state", "terminal"};
  ActionFactor horizontal{"horizontal", {"left", "right"}, {"state", "terminal"}, {0, 1}, {0.0, 1.0, 0.0, 0.0}};
  ActionFactor vertical{"vertical", {"down", "up"}, {"state", "terminal"}, {0, 1}, {0.0, params.alpha, 0.0, 0.0}};
  t.factors = {std::move(horizontal), std::move(vertical)};
  constexpr std::size_t S = 2;
  constexpr std::size_t A = 4;
  t.transition.assign(S * A * S, 0.0);
  t.reward.assign(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      t.transition[(s * A + a) * S + 1] = 1.0;
    }
  }
  // joint order: (left,down), (left,up), (right,down), (right,up)
  t.reward[0] = 0.0;
  t.reward[1] = params.alpha;
  t.reward[2] = 1.0;
  t.reward[3] = 1.0 + params.alpha + params.beta;
  t.initial_state = 0;
  t.horizon = 1;
  t.discount = 1.0;
  return std::make_shared<const FactoredMdp>(std::move(t));
}

enum class Mdp2Rewards {
  /// r(s, a) = r^1(phi^1(s), a^1) + r^2(phi^2(s), a^2) from the per-factor sub-MDPs.
  factored,
  /// The sixteen values as tabulated alongside the diagram; not additively factorable.
  listed,
};

/// Four-state grid MDP built from two independent binary chains. State "x,y"; the horizontal
/// sub-action sets x' (right -> 1), the vertical one sets y' (up -> 1).
[[nodiscard]] inline MdpPtr build_mdp2(Mdp2Rewards rewards = Mdp2Rewards::factored) {
  MdpTables t;
  t.id = rewards == Mdp2Rewards::factored ? "mdp2" : "mdp2-listed";
  t.states = {"0,0", "0,1", "1,0", "1,1"};
  // chain reward: 1 for moving 0 -> 1, -1 for staying at 1, 0 otherwise
  ActionFactor horizontal{"horizontal", {"left", "right"}, {"0,?", "1,?"}, {0, 0, 1, 1}, {0.0, 1.0, 0.0, -1.0}};
  ActionFactor vertical{"vertical", {"down", "up"}, {"?,0", "?,1"}, {0, 1, 0, 1}, {0.0, 1.0, 0.0, -1.0}};
  t.factors = {std::move(horizontal), std::move(vertical)};
  constexpr std::size_t S = 4;
  constexpr std::size_t A = 4;
  t.transition.assign(S * A * S, 0.0);
  t.reward.assign(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t x = s / 2;
    const std::size_t y = s % 2;
    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t right = a / 2;
      const std::size_t up = a % 2;
      t.transition[(s * A + a) * S + (2 * right + up)] = 1.0;
      t.reward[s * A + a] = t.factors[0].sub_rewards[x * 2 + right] + t.factors[1].sub_rewards[y * 2 + up];
    }
  }
  if (rewards == Mdp2Rewards::listed) {
    // rows: states 0,0 / 0,1 / 1,0 / 1,1; columns: down_left, up_left, down_right, up_right
    constexpr std::array<double, S * A> listed{
        0.0, 1.0, 1.0, 2.0,   //
        0.0, -1.0, 1.0, 1.0,  //
        0.0, 1.0, -1.0, 1.0,  //
        0.0, 0.0, 0.0, -2.0,
    };
    t.reward.assign(listed.begin(), listed.end());
  }
  t.initial_state = 0;
  t.horizon = 10;
  t.discount = 0.7;
  return std::make_shared<const FactoredMdp>(std::move(t));
}

}  // namespace factope
