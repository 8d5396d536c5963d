#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "factope/errors.hpp"
#include "factope/estimators.hpp"
#include "factope/mdp.hpp"
#include "factope/oracle.hpp"
#include "factope/policy.hpp"
#include "factope/sampling.hpp"

/**
 * \file
 * \brief JSON documents for MDPs, policies and reports; CSV for datasets.
 *
 * States, sub-actions and abstract states are referred to by name in every external format.
 * Joint actions are written as comma-joined sub-action names in factor order ("right,up").
 */

namespace factope {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form of a double, identical across runs.
[[nodiscard]] inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // prefer the shortest representation that round-trips
  for (int precision = 1; precision < 17; ++precision) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", precision, v);
    if (std::strtod(shorter, nullptr) == v) {
      return shorter;
    }
  }
  return buf;
}

namespace detail {

inline const Json& require(const Json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw InputError("missing key '" + std::string{key} + "'");
  }
  return *it;
}

inline std::size_t index_of(const std::vector<std::string>& names, const std::string& name, std::string_view what) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      return i;
    }
  }
  throw InputError("unknown " + std::string{what} + " '" + name + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// MDP documents

[[nodiscard]] inline Json mdp_to_json(const FactoredMdp& mdp) {
  Json j;
  j["id"] = mdp.id();
  j["states"] = mdp.tables().states;
  Json factors = Json::array();
  for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
    const auto& f = mdp.factor(d);
    Json abstraction = Json::object();
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      abstraction[mdp.state_name(s)] = f.abstract_states[f.abstraction[s]];
    }
    factors.push_back(
        {{"name", f.name}, {"sub_actions", f.sub_actions}, {"abstract_states", f.abstract_states}, {"abstraction", abstraction}});
  }
  j["factors"] = factors;
  Json transitions = Json::object();
  Json rewards = Json::object();
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    Json row = Json::object();
    Json rrow = Json::object();
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      Json next = Json::object();
      for (std::size_t sp = 0; sp < mdp.num_states(); ++sp) {
        if (mdp.transition(s, a, sp) != 0.0) {
          next[mdp.state_name(sp)] = mdp.transition(s, a, sp);
        }
      }
      row[mdp.action_name(a)] = next;
      rrow[mdp.action_name(a)] = mdp.reward(s, a);
    }
    transitions[mdp.state_name(s)] = row;
    rewards[mdp.state_name(s)] = rrow;
  }
  j["transitions"] = transitions;
  j["rewards"] = rewards;
  if (mdp.has_sub_rewards()) {
    Json sub = Json::object();
    for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
      const auto& f = mdp.factor(d);
      Json table = Json::object();
      for (std::size_t z = 0; z < f.num_abstract_states(); ++z) {
        Json row = Json::object();
        for (std::size_t k = 0; k < f.num_sub_actions(); ++k) {
          row[f.sub_actions[k]] = mdp.sub_reward(d, z, k);
        }
        table[f.abstract_states[z]] = row;
      }
      sub[f.name] = table;
    }
    j["sub_rewards"] = sub;
  }
  j["initial_state"] = mdp.state_name(mdp.initial_state());
  j["horizon"] = mdp.horizon_default();
  j["discount"] = mdp.discount_default();
  return j;
}

[[nodiscard]] inline MdpPtr mdp_from_json(const Json& j) {
  try {
    MdpTables t;
    t.id = j.value("id", std::string{"custom"});
    t.states = detail::require(j, "states").get<std::vector<std::string>>();
    const std::size_t S = t.states.size();
    for (const auto& fj : detail::require(j, "factors")) {
      ActionFactor f;
      f.name = detail::require(fj, "name").get<std::string>();
      f.sub_actions = detail::require(fj, "sub_actions").get<std::vector<std::string>>();
      const auto& abstraction = detail::require(fj, "abstraction");
      if (fj.contains("abstract_states")) {
        f.abstract_states = fj["abstract_states"].get<std::vector<std::string>>();
      } else {
        for (const auto& s : t.states) {
          const auto z = detail::require(abstraction, s).get<std::string>();
          if (std::find(f.abstract_states.begin(), f.abstract_states.end(), z) == f.abstract_states.end()) {
            f.abstract_states.push_back(z);
          }
        }
      }
      for (const auto& s : t.states) {
        const auto z = detail::require(abstraction, s).get<std::string>();
        f.abstraction.push_back(detail::index_of(f.abstract_states, z, "abstract state"));
      }
      t.factors.push_back(std::move(f));
    }
    if (t.factors.empty()) {
      throw InputError("MDP declares no action factors");
    }

    std::size_t A = 1;
    for (const auto& f : t.factors) {
      A *= f.num_sub_actions();
    }
    // joint action names in canonical order, last factor fastest
    std::vector<std::string> action_names(A);
    for (std::size_t a = 0; a < A; ++a) {
      std::size_t rest = a;
      std::vector<std::string> parts(t.factors.size());
      for (std::size_t d = t.factors.size(); d-- > 0;) {
        parts[d] = t.factors[d].sub_actions[rest % t.factors[d].num_sub_actions()];
        rest /= t.factors[d].num_sub_actions();
      }
      for (std::size_t d = 0; d < parts.size(); ++d) {
        action_names[a] += (d == 0 ? "" : ",") + parts[d];
      }
    }

    t.transition.assign(S * A * S, 0.0);
    t.reward.assign(S * A, 0.0);
    const auto& transitions = detail::require(j, "transitions");
    const auto& rewards = detail::require(j, "rewards");
    for (std::size_t s = 0; s < S; ++s) {
      const auto& row = detail::require(transitions, t.states[s]);
      const auto& rrow = detail::require(rewards, t.states[s]);
      for (std::size_t a = 0; a < A; ++a) {
        for (const auto& [next, p] : detail::require(row, action_names[a]).items()) {
          t.transition[(s * A + a) * S + detail::index_of(t.states, next, "state")] = p.get<double>();
        }
        t.reward[s * A + a] = detail::require(rrow, action_names[a]).get<double>();
      }
    }
    if (j.contains("sub_rewards")) {
      const auto& sub = j["sub_rewards"];
      for (auto& f : t.factors) {
        const auto& table = detail::require(sub, f.name);
        f.sub_rewards.assign(f.num_abstract_states() * f.num_sub_actions(), 0.0);
        for (std::size_t z = 0; z < f.num_abstract_states(); ++z) {
          const auto& row = detail::require(table, f.abstract_states[z]);
          for (std::size_t k = 0; k < f.num_sub_actions(); ++k) {
            f.sub_rewards[z * f.num_sub_actions() + k] = detail::require(row, f.sub_actions[k]).get<double>();
          }
        }
      }
    }
    t.initial_state = detail::index_of(t.states, detail::require(j, "initial_state").get<std::string>(), "state");
    t.horizon = j.value("horizon", std::size_t{1});
    t.discount = j.value("discount", 1.0);
    return std::make_shared<const FactoredMdp>(std::move(t));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string{"malformed MDP document: "} + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Policy documents

[[nodiscard]] inline Json policy_to_json(const FactoredPolicy& policy) {
  const auto& mdp = *policy.mdp();
  Json factors = Json::object();
  for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
    const auto& f = mdp.factor(d);
    Json table = Json::object();
    for (std::size_t z = 0; z < f.num_abstract_states(); ++z) {
      Json row = Json::object();
      for (std::size_t k = 0; k < f.num_sub_actions(); ++k) {
        row[f.sub_actions[k]] = policy.factor_probability(d, z, k);
      }
      table[f.abstract_states[z]] = row;
    }
    factors[f.name] = table;
  }
  return {{"name", policy.name()}, {"factors", factors}};
}

[[nodiscard]] inline FactoredPolicy policy_from_json(const MdpPtr& mdp, const Json& j) {
  try {
    std::vector<std::vector<double>> tables;
    const auto& factors = detail::require(j, "factors");
    for (std::size_t d = 0; d < mdp->num_factors(); ++d) {
      const auto& f = mdp->factor(d);
      const auto& table = detail::require(factors, f.name);
      std::vector<double> values(f.num_abstract_states() * f.num_sub_actions(), 0.0);
      for (std::size_t z = 0; z < f.num_abstract_states(); ++z) {
        const auto& row = detail::require(table, f.abstract_states[z]);
        for (const auto& [name, p] : row.items()) {
          values[z * f.num_sub_actions() + mdp->sub_action_index(d, name)] = p.get<double>();
        }
      }
      tables.push_back(std::move(values));
    }
    return FactoredPolicy{mdp, std::move(tables), j.value("name", std::string{})};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string{"malformed policy document: "} + e.what());
  }
}

[[nodiscard]] inline Json pair_to_json(const PolicyPair& pair) {
  Json j{{"behaviour", policy_to_json(pair.behaviour)}, {"evaluation", policy_to_json(pair.evaluation)}};
  j["divergence_label"] = pair.divergence_label ? Json(*pair.divergence_label) : Json(nullptr);
  return j;
}

[[nodiscard]] inline PolicyPair pair_from_json(const MdpPtr& mdp, const Json& j) {
  std::optional<std::string> label;
  if (j.contains("divergence_label") && j["divergence_label"].is_string()) {
    label = j["divergence_label"].get<std::string>();
  }
  return PolicyPair{policy_from_json(mdp, detail::require(j, "behaviour")),
                    policy_from_json(mdp, detail::require(j, "evaluation")), label};
}

// ---------------------------------------------------------------------------------------------
// Reports

[[nodiscard]] inline Json to_json(const Estimate& e) {
  Json j{{"estimator", std::string{to_string(e.estimator)}}, {"value", e.value}};
  j["per_factor"] = e.per_factor.empty() ? Json(nullptr) : Json(e.per_factor);
  j["weight_stats"] = {{"min", e.weight_stats.min},
                       {"max", e.weight_stats.max},
                       {"mean", e.weight_stats.mean},
                       {"sum", e.weight_stats.sum}};
  j["coverage_flag"] = e.coverage_flag;
  return j;
}

[[nodiscard]] inline Json to_json(const MomentReport& m) {
  return {{"estimator", std::string{to_string(m.estimator)}},
          {"mean", m.mean},
          {"variance", m.variance},
          {"enumeration_size", m.enumeration_size},
          {"probability_mass", m.probability_mass},
          {"pair", m.pair_label},
          {"n", m.n},
          {"t", m.horizon},
          {"gamma", m.gamma}};
}

[[nodiscard]] inline Json to_json(const AssumptionReport& r) {
  Json conditions = Json::array();
  for (const auto& c : r.conditions) {
    Json entries = Json::array();
    for (const auto& e : c.entries) {
      entries.push_back({{"d", e.d + 1}, {"d2", e.d2 + 1}, {"t", e.t}, {"t2", e.t2}, {"cov", e.value}});
    }
    conditions.push_back({{"condition", std::string{to_string(c.condition)}},
                          {"passed", c.passed},
                          {"min", c.min},
                          {"max", c.max},
                          {"entries", entries}});
  }
  return {{"t", r.horizon},
          {"probability_mass", r.probability_mass},
          {"tolerance", r.tolerance},
          {"passed", r.passed()},
          {"conditions", conditions}};
}

[[nodiscard]] inline Json read_json_file(const std::string& path) {
  std::ifstream in{path};
  if (!in) {
    throw InputError("cannot open '" + path + "'");
  }
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Dataset CSV: one row per step (episode, t, state, one column per factor, reward) after a
// metadata header; each episode ends with a row holding its final state and empty action fields.

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline void write_dataset_csv(std::ostream& out, const DatasetView& data, const FactoredMdp& mdp) {
  const auto& meta = data.base().metadata();
  out << "# mdp=" << meta.mdp_id << "\n";
  out << "# policy=" << meta.policy_id << "\n";
  out << "# seed=" << meta.seed << "\n";
  out << "# first_index=" << meta.first_index + data.first() << "\n";
  out << "# n=" << data.size() << "\n";
  out << "# t=" << data.horizon() << "\n";
  out << "episode,t,state";
  for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
    out << ',' << detail::csv_field(mdp.factor(d).name);
  }
  out << ",reward\n";
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto traj = data.trajectory(n);
    for (std::size_t t = 0; t <= traj.horizon(); ++t) {
      out << n << ',' << t << ',' << detail::csv_field(mdp.state_name(traj.states[t]));
      if (t < traj.horizon()) {
        for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
          out << ',' << detail::csv_field(mdp.factor(d).sub_actions[mdp.sub_action(traj.actions[t], d)]);
        }
        out << ',' << format_double(traj.rewards[t]) << '\n';
      } else {
        for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
          out << ',';
        }
        out << ",\n";
      }
    }
  }
}

[[nodiscard]] inline Dataset read_dataset_csv(std::istream& in, const FactoredMdp& mdp) {
  DatasetMetadata meta;
  std::size_t n = 0;
  std::size_t horizon = 0;
  std::string line;
  auto header_value = [&](const std::string& key) -> std::string {
    const std::string prefix = "# " + key + "=";
    return line.rfind(prefix, 0) == 0 ? line.substr(prefix.size()) : std::string{};
  };
  while (std::getline(in, line) && line.starts_with("#")) {
    if (auto v = header_value("mdp"); !v.empty()) meta.mdp_id = v;
    if (auto v = header_value("policy"); !v.empty()) meta.policy_id = v;
    if (auto v = header_value("seed"); !v.empty()) meta.seed = std::stoull(v);
    if (auto v = header_value("first_index"); !v.empty()) meta.first_index = std::stoull(v);
    if (auto v = header_value("n"); !v.empty()) n = std::stoull(v);
    if (auto v = header_value("t"); !v.empty()) horizon = std::stoull(v);
  }
  if (n == 0 || horizon == 0) {
    throw InputError("dataset header must declare n >= 1 and t >= 1");
  }
  const auto columns = detail::csv_split(line);
  if (columns.size() != mdp.num_factors() + 4) {
    throw InputError("dataset has " + std::to_string(columns.size()) + " columns, MDP '" + mdp.id() + "' needs " +
                     std::to_string(mdp.num_factors() + 4));
  }
  Dataset out{std::move(meta), n, horizon};
  std::vector<std::size_t> subs(mdp.num_factors());
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto f = detail::csv_split(line);
    if (f.size() != columns.size()) {
      throw InputError("malformed dataset row: " + line);
    }
    const std::size_t episode = std::stoull(f[0]);
    const std::size_t t = std::stoull(f[1]);
    if (episode >= n || t > horizon) {
      throw InputError("dataset row out of range: " + line);
    }
    out.states_of(episode)[t] = static_cast<std::uint32_t>(mdp.state_index(f[2]));
    if (t < horizon) {
      for (std::size_t d = 0; d < mdp.num_factors(); ++d) {
        subs[d] = mdp.sub_action_index(d, f[3 + d]);
      }
      out.actions_of(episode)[t] = static_cast<std::uint32_t>(mdp.encode(subs));
      out.rewards_of(episode)[t] = std::stod(f.back());
    }
    ++rows;
  }
  if (rows != n * (horizon + 1)) {
    throw InputError("dataset has " + std::to_string(rows) + " rows, expected " + std::to_string(n * (horizon + 1)));
  }
  return out;
}

inline void write_dataset_csv(const std::string& path, const DatasetView& data, const FactoredMdp& mdp) {
  std::ofstream out{path};
  if (!out) {
    throw InputError("cannot write '" + path + "'");
  }
  write_dataset_csv(out, data, mdp);
}

[[nodiscard]] inline Dataset read_dataset_csv(const std::string& path, const FactoredMdp& mdp) {
  std::ifstream in{path};
  if (!in) {
    throw InputError("cannot open '" + path + "'");
  }
  return read_dataset_csv(in, mdp);
}

}  // namespace factope
