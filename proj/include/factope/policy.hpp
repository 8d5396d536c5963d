#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factope/errors.hpp"
#include "factope/mdp.hpp"

namespace factope {

/// Stationary factored policy: one conditional table pi^d(a^d | z^d) per action factor.
/// The joint table pi(a|s) = prod_d pi^d(a^d | phi^d(s)) is derived on construction and never set directly.
class FactoredPolicy {
 public:
  /// tables[d] is row-major [abstract state][sub-action].
  FactoredPolicy(MdpPtr mdp, std::vector<std::vector<double>> tables, std::string name = {})
      : mdp_{std::move(mdp)}, tables_{std::move(tables)}, name_{std::move(name)} {
    if (!mdp_) {
      throw InputError("policy needs an MDP");
    }
    if (tables_.size() != mdp_->num_factors()) {
      throw InputError("policy has " + std::to_string(tables_.size()) + " factor tables, MDP has " +
                       std::to_string(mdp_->num_factors()) + " factors");
    }
    for (std::size_t d = 0; d < tables_.size(); ++d) {
      const auto& f = mdp_->factor(d);
      const std::size_t A = f.num_sub_actions();
      if (tables_[d].size() != f.num_abstract_states() * A) {
        throw InputError("policy table for factor '" + f.name + "' has the wrong size");
      }
      for (std::size_t z = 0; z < f.num_abstract_states(); ++z) {
        double total = 0.0;
        for (std::size_t k = 0; k < A; ++k) {
          const double p = tables_[d][z * A + k];
          if (!(p >= 0.0) || !std::isfinite(p)) {
            throw InputError("policy factor '" + f.name + "' has a negative or non-finite entry");
          }
          total += p;
        }
        if (std::abs(total - 1.0) > kDefaultTolerance) {
          throw InputError("policy factor '" + f.name + "' row '" + f.abstract_states[z] + "' sums to " +
                           std::to_string(total));
        }
      }
    }
    const std::size_t S = mdp_->num_states();
    const std::size_t A = mdp_->num_actions();
    joint_.resize(S * A);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        double p = 1.0;
        for (std::size_t d = 0; d < tables_.size(); ++d) {
          p *= factor_probability(d, mdp_->abstract_state(d, s), mdp_->sub_action(a, d));
        }
        joint_[s * A + a] = p;
      }
    }
  }

  [[nodiscard]] const MdpPtr& mdp() const noexcept { return mdp_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] std::size_t num_factors() const noexcept { return tables_.size(); }
  [[nodiscard]] const std::vector<double>& factor_table(std::size_t d) const { return tables_.at(d); }

  [[nodiscard]] double factor_probability(std::size_t d, std::size_t z, std::size_t sub_action) const noexcept {
    return tables_[d][z * mdp_->factor(d).num_sub_actions() + sub_action];
  }

  /// pi^d(a^d | phi^d(s)) for the d-th component of joint action a.
  [[nodiscard]] double factor_probability_at(std::size_t d, std::size_t s, std::size_t a) const noexcept {
    return factor_probability(d, mdp_->abstract_state(d, s), mdp_->sub_action(a, d));
  }

  [[nodiscard]] double joint(std::size_t s, std::size_t a) const noexcept { return joint_[s * mdp_->num_actions() + a]; }

  [[nodiscard]] std::span<const double> joint_row(std::size_t s) const noexcept {
    return {joint_.data() + s * mdp_->num_actions(), mdp_->num_actions()};
  }

  [[nodiscard]] const std::vector<double>& joint_table() const noexcept { return joint_; }

 private:
  MdpPtr mdp_;
  std::vector<std::vector<double>> tables_;
  std::vector<double> joint_;
  std::string name_;
};

/// prod_d pi^d(a^d | phi^d(s)).
[[nodiscard]] inline double joint_probability(const FactoredPolicy& policy, std::size_t s, std::size_t a) {
  policy.mdp()->check_state(s);
  if (a >= policy.mdp()->num_actions()) {
    throw InputError("joint action index out of range");
  }
  return policy.joint(s, a);
}

/// Behaviour/evaluation policies on the same MDP, with per-factor absolute continuity enforced.
struct PolicyPair {
  FactoredPolicy behaviour;
  FactoredPolicy evaluation;
  std::optional<std::string> divergence_label;

  PolicyPair(FactoredPolicy b, FactoredPolicy e, std::optional<std::string> label = std::nullopt)
      : behaviour{std::move(b)}, evaluation{std::move(e)}, divergence_label{std::move(label)} {
    if (behaviour.mdp() != evaluation.mdp()) {
      throw InputError("behaviour and evaluation policies are defined on different MDPs");
    }
    const auto& mdp = *behaviour.mdp();
    for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
      const auto& f = mdp.factor(d);
      for (std::size_t z = 0; z < f.num_abstract_states(); ++z) {
        for (std::size_t k = 0; k < f.num_sub_actions(); ++k) {
          if (behaviour.factor_probability(d, z, k) == 0.0 && evaluation.factor_probability(d, z, k) > 0.0) {
            throw CoverageError("behaviour policy gives zero probability to '" + f.sub_actions[k] + "' at '" +
                                f.abstract_states[z] + "' but the evaluation policy does not");
          }
        }
      }
    }
  }

  [[nodiscard]] const MdpPtr& mdp() const noexcept { return behaviour.mdp(); }
};

/// Policy divergence (max_{s,a} pi_e(a|s) / pi_b(a|s))^T. Entries where both policies are zero are skipped.
[[nodiscard]] inline double policy_divergence(const PolicyPair& pair, std::size_t horizon) {
  const auto& mdp = *pair.mdp();
  double sup = 0.0;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const double b = pair.behaviour.joint(s, a);
      const double e = pair.evaluation.joint(s, a);
      if (b == 0.0) {
        if (e > 0.0) {
          throw CoverageError("evaluation policy puts mass on (" + mdp.state_name(s) + ", " + mdp.action_name(a) +
                              ") where the behaviour policy has none");
        }
        continue;
      }
      sup = std::max(sup, e / b);
    }
  }
  return std::pow(sup, static_cast<double>(horizon));
}

/// Compares an externally supplied joint table [s][a] against the product of factors.
[[nodiscard]] inline FactorisationReport check_policy_factorisation(std::span<const double> joint,
                                                                    const FactoredPolicy& factors,
                                                                    double tol = kDefaultTolerance) {
  const auto& mdp = *factors.mdp();
  if (joint.size() != mdp.num_states() * mdp.num_actions()) {
    throw InputError("joint policy table has the wrong size");
  }
  FactorisationReport report{.condition = FactorisationCondition::policy, .tolerance = tol};
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const double residual = std::abs(joint[s * mdp.num_actions() + a] - factors.joint(s, a));
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

// ---------------------------------------------------------------------------------------------
// Builtin policy library for the two benchmark MDPs

/// Per-factor probabilities of the "positive" sub-action (right, up) for behaviour and evaluation.
struct BuiltinPairSpec {
  std::string_view label;
  double behaviour_right;
  double behaviour_up;
  double evaluation_right;
  double evaluation_up;
};

inline constexpr std::array<BuiltinPairSpec, 9> kBuiltinPairs{{
    {"1.44", 0.5, 0.5, 0.6, 0.6},
    {"2.56", 0.5, 0.5, 0.8, 0.8},
    {"3.61", 0.5, 0.5, 0.95, 0.95},
    {"4.46", 0.45, 0.45, 0.95, 0.95},
    {"5.64", 0.4, 0.4, 0.95, 0.95},
    {"10.03", 0.3, 0.3, 0.95, 0.95},
    {"22.56", 0.2, 0.2, 0.95, 0.95},
    {"90.25", 0.1, 0.1, 0.95, 0.95},
    {"361.0", 0.05, 0.05, 0.95, 0.95},
}};

[[nodiscard]] inline std::vector<std::string> builtin_pair_labels() {
  std::vector<std::string> out;
  for (const auto& p : kBuiltinPairs) {
    out.emplace_back(p.label);
  }
  return out;
}

/// Strips an optional "^T" suffix ("1.44^T" -> "1.44").
[[nodiscard]] inline std::string_view canonical_pair_label(std::string_view label) noexcept {
  if (label.ends_with("^T")) {
    label.remove_suffix(2);
  }
  return label;
}

namespace detail {

inline std::vector<double> binary_factor_table(const ActionFactor& f, std::string_view positive, double p) {
  const auto it = std::find(f.sub_actions.begin(), f.sub_actions.end(), positive);
  if (f.num_sub_actions() != 2 || it == f.sub_actions.end()) {
    throw InputError("builtin policies need a binary factor containing '" + std::string{positive} + "'");
  }
  const std::size_t pos = static_cast<std::size_t>(it - f.sub_actions.begin());
  std::vector<double> table(f.num_abstract_states() * 2);
  for (std::size_t z = 0; z < f.num_abstract_states(); ++z) {
    table[z * 2 + pos] = p;
    table[z * 2 + (1 - pos)] = 1.0 - p;
  }
  return table;
}

}  // namespace detail

/// The builtin behaviour/evaluation tables for a divergence label. The same per-factor rows
/// apply at every abstract state. Works on any MDP whose factors are {left,right} x {down,up}.
[[nodiscard]] inline PolicyPair builtin_policy_pair(const MdpPtr& mdp, std::string_view label) {
  const auto canonical = canonical_pair_label(label);
  const auto it = std::find_if(kBuiltinPairs.begin(), kBuiltinPairs.end(),
                               [&](const BuiltinPairSpec& p) { return p.label == canonical; });
  if (it == kBuiltinPairs.end()) {
    throw InputError("unknown builtin policy pair '" + std::string{label} + "'");
  }
  if (!mdp || mdp->num_factors() != 2) {
    throw InputError("builtin policy pairs need a two-factor MDP");
  }
  const auto& h = mdp->factor(0);
  const auto& v = mdp->factor(1);
  FactoredPolicy behaviour{mdp,
                           {detail::binary_factor_table(h, "right", it->behaviour_right),
                            detail::binary_factor_table(v, "up", it->behaviour_up)},
                           std::string{it->label} + ":behaviour"};
  FactoredPolicy evaluation{mdp,
                            {detail::binary_factor_table(h, "right", it->evaluation_right),
                             detail::binary_factor_table(v, "up", it->evaluation_up)},
                            std::string{it->label} + ":evaluation"};
  return PolicyPair{std::move(behaviour), std::move(evaluation), std::string{it->label}};
}

/// Uniform distribution over every factor's sub-actions.
[[nodiscard]] inline FactoredPolicy uniform_policy(const MdpPtr& mdp) {
  std::vector<std::vector<double>> tables;
  for (std::size_t d = 0; d < mdp->num_factors(); ++d) {
    const auto& f = mdp->factor(d);
    tables.emplace_back(f.num_abstract_states() * f.num_sub_actions(),
                        1.0 / static_cast<double>(f.num_sub_actions()));
  }
  return FactoredPolicy{mdp, std::move(tables), "uniform"};
}

}  // namespace factope
