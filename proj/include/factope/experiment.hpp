#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "factope/errors.hpp"
#include "factope/estimators.hpp"
#include "factope/io.hpp"
#include "factope/mdp.hpp"
#include "factope/metrics.hpp"
#include "factope/numeric.hpp"
#include "factope/oracle.hpp"
#include "factope/policy.hpp"
#include "factope/sampling.hpp"

/**
 * \file
 * \brief Grid sweeps: replicate estimates per cell, metrics per trial, mean and std across trials.
 *
 * Trial k draws its behaviour and evaluation data from streams seeded with
 * derive_seed(derive_seed(seed, k), 0) and derive_seed(derive_seed(seed, k), 1). Replicate r of a
 * cell with n trajectories is block [r*n, (r+1)*n) of those streams truncated to the cell's T, so
 * replicates are disjoint and every cell is a subset of the same pair of master datasets.
 */

namespace factope {

inline constexpr std::string_view kVersion = "0.1.0";

inline const std::vector<double>& default_beta_grid() {
  static const std::vector<double> grid{-2.0, -1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0};
  return grid;
}

inline constexpr std::array<std::string_view, 4> kMetricNames{"bias", "variance", "mse", "ess"};

struct ExperimentConfig {
  std::string name = "custom";
  /// "mdp1", "mdp2", "mdp2-listed", or a full MDP document.
  std::variant<std::string, Json> mdp = std::string{"mdp1"};
  double alpha = 1.0;
  std::vector<double> beta{0.0};
  /// Builtin labels ("2.56", "1.44^T") or policy-pair documents.
  std::vector<std::variant<std::string, Json>> pairs{std::string{"2.56"}};
  std::vector<std::size_t> n{100};
  std::vector<std::size_t> t{1};
  std::vector<double> gamma{1.0};
  std::size_t replicates = 100;
  std::size_t trials = 5;
  std::uint64_t seed = 12345;
  std::vector<EstimatorId> estimators{kOffPolicyEstimators.begin(), kOffPolicyEstimators.end()};
  TruthSource truth = TruthSource::oracle;
  /// Trajectories per master dataset; 0 picks the default for the MDP.
  std::size_t master_size = 0;
  /// Horizon of the master datasets; 0 picks the default for the MDP.
  std::size_t master_horizon = 0;
};

namespace detail {

template <class T>
std::vector<T> list_or_scalar(const Json& j) {
  if (j.is_array()) {
    return j.get<std::vector<T>>();
  }
  return {j.get<T>()};
}

inline std::string mdp_key(const ExperimentConfig& c) {
  return std::holds_alternative<std::string>(c.mdp) ? std::get<std::string>(c.mdp)
                                                    : std::get<Json>(c.mdp).value("id", std::string{"custom"});
}

}  // namespace detail

[[nodiscard]] inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  if (std::holds_alternative<std::string>(c.mdp)) {
    j["mdp"] = std::get<std::string>(c.mdp);
  } else {
    j["mdp"] = std::get<Json>(c.mdp);
  }
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  Json pairs = Json::array();
  for (const auto& p : c.pairs) {
    if (std::holds_alternative<std::string>(p)) {
      pairs.push_back(std::get<std::string>(p));
    } else {
      pairs.push_back(std::get<Json>(p));
    }
  }
  j["pairs"] = pairs;
  j["n"] = c.n;
  j["t"] = c.t;
  j["gamma"] = c.gamma;
  j["replicates"] = c.replicates;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  Json est = Json::array();
  for (auto id : c.estimators) {
    est.push_back(std::string{to_string(id)});
  }
  j["estimators"] = est;
  j["truth"] = std::string{to_string(c.truth)};
  j["master_size"] = c.master_size;
  j["master_horizon"] = c.master_horizon;
  return j;
}

[[nodiscard]] inline ExperimentConfig config_from_json(const Json& j) {
  try {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    if (j.contains("mdp")) {
      if (j["mdp"].is_string()) {
        c.mdp = j["mdp"].get<std::string>();
      } else {
        c.mdp = j["mdp"];
      }
    }
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("beta")) c.beta = detail::list_or_scalar<double>(j["beta"]);
    const char* pair_key = j.contains("pairs") ? "pairs" : (j.contains("pair") ? "pair" : nullptr);
    if (pair_key != nullptr) {
      c.pairs.clear();
      const auto& pj = j[pair_key];
      const Json list = pj.is_array() ? pj : Json::array({pj});
      for (const auto& p : list) {
        if (p.is_string()) {
          c.pairs.emplace_back(p.get<std::string>());
        } else {
          c.pairs.emplace_back(p);
        }
      }
    }
    if (j.contains("n")) c.n = detail::list_or_scalar<std::size_t>(j["n"]);
    if (j.contains("t")) c.t = detail::list_or_scalar<std::size_t>(j["t"]);
    if (j.contains("gamma")) c.gamma = detail::list_or_scalar<double>(j["gamma"]);
    c.replicates = j.value("replicates", c.replicates);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& name : detail::list_or_scalar<std::string>(j["estimators"])) {
        c.estimators.push_back(parse_estimator(name));
      }
    }
    if (j.contains("truth")) c.truth = parse_truth_source(j["truth"].get<std::string>());
    c.master_size = j.value("master_size", c.master_size);
    c.master_horizon = j.value("master_horizon", c.master_horizon);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string{"malformed experiment config: "} + e.what());
  }
}

/// FNV-1a of the canonical JSON form, as 16 hex digits.
[[nodiscard]] inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_to_json(c).dump())));
  return buf;
}

/// Default master dataset shape (trajectories, horizon) at desk scale.
[[nodiscard]] inline std::pair<std::size_t, std::size_t> default_master_shape(const ExperimentConfig& c) {
  const auto key = detail::mdp_key(c);
  if (key == "mdp1") {
    return {1'000'000, 1};
  }
  if (key == "mdp2" || key == "mdp2-listed") {
    return {100'000, 200};
  }
  return {*std::max_element(c.n.begin(), c.n.end()) * c.replicates, *std::max_element(c.t.begin(), c.t.end())};
}

/// Builds the MDP for one beta value.
[[nodiscard]] inline MdpPtr make_mdp(const ExperimentConfig& c, double beta) {
  if (std::holds_alternative<Json>(c.mdp)) {
    return mdp_from_json(std::get<Json>(c.mdp));
  }
  const auto& key = std::get<std::string>(c.mdp);
  if (key == "mdp1") {
    return build_mdp1({c.alpha, beta});
  }
  if (key == "mdp2") {
    return build_mdp2(Mdp2Rewards::factored);
  }
  if (key == "mdp2-listed") {
    return build_mdp2(Mdp2Rewards::listed);
  }
  throw InputError("unknown MDP '" + key + "'");
}

[[nodiscard]] inline PolicyPair make_policy_pair(const MdpPtr& mdp, const std::variant<std::string, Json>& spec) {
  if (std::holds_alternative<std::string>(spec)) {
    auto pair = builtin_policy_pair(mdp, std::get<std::string>(spec));
    pair.divergence_label = std::get<std::string>(spec);
    return pair;
  }
  auto pair = pair_from_json(mdp, std::get<Json>(spec));
  if (!pair.divergence_label) {
    pair.divergence_label = "custom";
  }
  return pair;
}

/// Checks grids and replicate demand against the master datasets. Throws before any sampling.
inline void validate(const ExperimentConfig& c) {
  auto nonempty = [](bool ok, std::string_view what) {
    if (!ok) {
      throw InputError("experiment grid '" + std::string{what} + "' is empty");
    }
  };
  nonempty(!c.beta.empty(), "beta");
  nonempty(!c.pairs.empty(), "pairs");
  nonempty(!c.n.empty(), "n");
  nonempty(!c.t.empty(), "t");
  nonempty(!c.gamma.empty(), "gamma");
  nonempty(!c.estimators.empty(), "estimators");
  if (c.replicates < 2) {
    throw InputError("replicates must be at least 2");
  }
  if (c.trials < 1) {
    throw InputError("trials must be at least 1");
  }
  for (auto n : c.n) {
    if (n == 0) throw InputError("n values must be positive");
  }
  for (auto t : c.t) {
    if (t == 0) throw InputError("t values must be positive");
  }
  for (double g : c.gamma) {
    if (!(g >= 0.0 && g <= 1.0)) throw InputError("gamma values must lie in [0, 1]");
  }
  if (detail::mdp_key(c) != "mdp1" && c.beta.size() > 1) {
    throw InputError("beta can only be swept on mdp1");
  }
  const auto [default_size, default_horizon] = default_master_shape(c);
  const std::size_t size = c.master_size != 0 ? c.master_size : default_size;
  const std::size_t horizon = c.master_horizon != 0 ? c.master_horizon : default_horizon;
  const std::size_t max_n = *std::max_element(c.n.begin(), c.n.end());
  const std::size_t max_t = *std::max_element(c.t.begin(), c.t.end());
  if (max_n > size / c.replicates) {
    throw SizingError(std::to_string(c.replicates) + " disjoint replicates of " + std::to_string(max_n) +
                      " trajectories need " + std::to_string(max_n * c.replicates) +
                      " trajectories, but the master datasets hold " + std::to_string(size));
  }
  if (max_t > horizon) {
    throw SizingError("horizon " + std::to_string(max_t) + " exceeds the master dataset horizon " +
                      std::to_string(horizon));
  }
  // resolve every MDP and pair up front so bad specs fail before sampling
  for (double beta : c.beta) {
    const auto mdp = make_mdp(c, beta);
    for (const auto& p : c.pairs) {
      (void)make_policy_pair(mdp, p);
    }
    for (auto id : c.estimators) {
      if (is_decomposed(id) && !mdp->has_sub_rewards()) {
        throw InputError("decomposed estimators need sub-rewards; MDP '" + mdp->id() + "' declares none");
      }
    }
  }
}

struct CellSpec {
  double beta = 0.0;
  std::size_t pair = 0;
  std::string pair_label;
  std::size_t n = 0;
  std::size_t t = 0;
  double gamma = 1.0;
};

struct TrialSeeds {
  std::uint64_t trial = 0;
  std::uint64_t behaviour = 0;
  std::uint64_t evaluation = 0;
};

[[nodiscard]] inline TrialSeeds trial_seeds(std::uint64_t master, std::size_t trial) {
  const auto s = derive_seed(master, trial);
  return {s, derive_seed(s, 0), derive_seed(s, 1)};
}

/// Metrics of one cell in one trial, one entry per configured estimator.
struct TrialCell {
  double truth = 0.0;
  double on_policy_variance = 0.0;
  std::vector<MetricsSummary> metrics;
};

struct ResultRow {
  std::size_t cell = 0;
  EstimatorId estimator = EstimatorId::is;
  std::string_view metric;
  double mean = 0.0;
  double std = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string mdp_id;
  std::vector<CellSpec> cells;
  std::vector<TrialSeeds> seeds;
  /// Indexed [cell * trials + trial].
  std::vector<TrialCell> trial_cells;
  std::vector<ResultRow> rows;

  [[nodiscard]] const TrialCell& at(std::size_t cell, std::size_t trial) const {
    return trial_cells.at(cell * config.trials + trial);
  }

  [[nodiscard]] std::size_t estimator_slot(EstimatorId id) const {
    const auto it = std::find(config.estimators.begin(), config.estimators.end(), id);
    if (it == config.estimators.end()) {
      throw InputError("estimator '" + std::string{to_string(id)} + "' was not part of the sweep");
    }
    return static_cast<std::size_t>(it - config.estimators.begin());
  }

  /// Per-trial values of one metric ("bias", "variance", "mse", "mse_direct", "ess").
  [[nodiscard]] std::vector<double> trial_values(std::size_t cell, EstimatorId id, std::string_view metric) const;

  /// First cell matching the given coordinates; unspecified coordinates match anything.
  [[nodiscard]] std::optional<std::size_t> find_cell(std::optional<std::size_t> n, std::optional<std::size_t> t,
                                                     std::optional<double> beta = std::nullopt,
                                                     std::optional<double> gamma = std::nullopt,
                                                     std::optional<std::string> pair = std::nullopt) const {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      if ((!n || c.n == *n) && (!t || c.t == *t) && (!beta || c.beta == *beta) && (!gamma || c.gamma == *gamma) &&
          (!pair || c.pair_label == *pair)) {
        return i;
      }
    }
    return std::nullopt;
  }
};

[[nodiscard]] inline double metric_value(const MetricsSummary& m, std::string_view metric) {
  if (metric == "bias") return m.bias;
  if (metric == "variance") return m.variance;
  if (metric == "mse") return m.mse_identity;
  if (metric == "mse_direct") return m.mse_direct;
  if (metric == "ess") return m.ess;
  throw InputError("unknown metric '" + std::string{metric} + "'");
}

inline std::vector<double> ExperimentResult::trial_values(std::size_t cell, EstimatorId id,
                                                          std::string_view metric) const {
  const std::size_t slot = estimator_slot(id);
  std::vector<double> out;
  for (std::size_t k = 0; k < config.trials; ++k) {
    out.push_back(metric_value(at(cell, k).metrics[slot], metric));
  }
  return out;
}

/// Mean and sample standard deviation (n - 1) across trials; std is 0 for a single trial and
/// both are NaN when any trial value is NaN.
[[nodiscard]] inline std::pair<double, double> mean_and_std(std::span<const double> values) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (values.empty() || std::any_of(values.begin(), values.end(), [](double v) { return std::isnan(v); })) {
    return {nan, nan};
  }
  const double m = compensated_sum(values) / static_cast<double>(values.size());
  if (values.size() == 1) {
    return {m, 0.0};
  }
  CompensatedSum acc;
  for (double v : values) {
    acc.add((v - m) * (v - m));
  }
  return {m, std::sqrt(acc.value() / static_cast<double>(values.size() - 1))};
}

namespace detail {

inline MetricsSummary nan_metrics(TruthSource source) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan, nan, nan, nan, source};
}

inline TrialCell run_cell(const ExperimentConfig& c, const CellSpec& cell, const MdpPtr& mdp, const PolicyPair& pair,
                          const TrialSeeds& seeds) {
  const Sampler behaviour{pair.behaviour};
  const Sampler evaluation{pair.evaluation};
  const std::size_t R = c.replicates;
  const std::size_t E = c.estimators.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::vector<double>> values(E, std::vector<double>(R));
  std::vector<double> on_policy(R);
  for (std::size_t r = 0; r < R; ++r) {
    const auto first = static_cast<std::uint64_t>(r * cell.n);
    const auto b = generate_dataset(behaviour, cell.n, cell.t, seeds.behaviour, first, pair.behaviour.name());
    const auto e = generate_dataset(evaluation, cell.n, cell.t, seeds.evaluation, first, pair.evaluation.name());
    on_policy[r] = on_policy_estimate(e, cell.gamma).value;
    const auto weights = compute_weights(b, pair);
    for (std::size_t k = 0; k < E; ++k) {
      const auto id = c.estimators[k];
      if (id == EstimatorId::on_policy) {
        values[k][r] = on_policy[r];
        continue;
      }
      try {
        values[k][r] = estimate(id, b, pair, weights, cell.gamma).value;
      } catch (const DegenerateWeightsError&) {
        values[k][r] = nan;
      }
    }
  }

  TrialCell out;
  out.truth = c.truth == TruthSource::oracle ? exact_q(*mdp, pair.evaluation, cell.gamma, cell.t)
                                             : compensated_sum(on_policy) / static_cast<double>(R);
  out.on_policy_variance = sample_variance(on_policy);
  for (std::size_t k = 0; k < E; ++k) {
    const bool finite = std::all_of(values[k].begin(), values[k].end(), [](double v) { return std::isfinite(v); });
    if (!finite) {
      out.metrics.push_back(nan_metrics(c.truth));
      continue;
    }
    ReplicateSet set{c.estimators[k], values[k], out.truth, c.truth, cell.n};
    MetricsSummary m;
    m.truth_source = c.truth;
    m.bias = bias(set);
    m.variance = variance(set);
    const auto routes = mse(set);
    m.mse_direct = routes.direct;
    m.mse_identity = routes.identity;
    m.ess = m.variance > 0.0 ? ess(cell.n, out.on_policy_variance, m.variance) : nan;
    out.metrics.push_back(m);
  }
  return out;
}

}  // namespace detail

/// Runs every (cell, trial) task on `threads` workers (0 = hardware concurrency). Output does not
/// depend on the worker count.
[[nodiscard]] inline ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads = 1) {
  validate(config);
  ExperimentResult result;
  result.config = config;

  std::vector<MdpPtr> mdps;
  std::vector<std::vector<PolicyPair>> pairs;
  for (double beta : config.beta) {
    mdps.push_back(make_mdp(config, beta));
    pairs.emplace_back();
    for (const auto& p : config.pairs) {
      pairs.back().push_back(make_policy_pair(mdps.back(), p));
    }
  }
  result.mdp_id = mdps.front()->id();

  for (std::size_t bi = 0; bi < config.beta.size(); ++bi) {
    for (std::size_t pi = 0; pi < config.pairs.size(); ++pi) {
      for (auto t : config.t) {
        for (double g : config.gamma) {
          for (auto n : config.n) {
            result.cells.push_back({config.beta[bi], pi, *pairs[bi][pi].divergence_label, n, t, g});
          }
        }
      }
    }
  }
  for (std::size_t k = 0; k < config.trials; ++k) {
    result.seeds.push_back(trial_seeds(config.seed, k));
  }

  const std::size_t tasks = result.cells.size() * config.trials;
  result.trial_cells.resize(tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t cell = task / config.trials;
      const std::size_t trial = task % config.trials;
      const auto& spec = result.cells[cell];
      const std::size_t bi =
          static_cast<std::size_t>(std::find(config.beta.begin(), config.beta.end(), spec.beta) - config.beta.begin());
      try {
        result.trial_cells[task] =
            detail::run_cell(config, spec, mdps[bi], pairs[bi][spec.pair], result.seeds[trial]);
      } catch (...) {
        const std::lock_guard lock{failure_mutex};
        if (!failure) {
          failure = std::current_exception();
        }
        next = tasks;
      }
    }
  };
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, std::max<std::size_t>(tasks, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  for (std::size_t cell = 0; cell < result.cells.size(); ++cell) {
    for (auto id : config.estimators) {
      for (auto metric : kMetricNames) {
        const auto values = result.trial_values(cell, id, metric);
        const auto [mean, std] = mean_and_std(values);
        result.rows.push_back({cell, id, metric, mean, std});
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------------------------
// Outputs

[[nodiscard]] inline std::string results_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << "experiment,trial_agg,mdp,pair,N,T,gamma,beta,estimator,metric,mean,std\n";
  for (const auto& row : r.rows) {
    const auto& c = r.cells[row.cell];
    out << detail::csv_field(r.config.name) << ',' << r.config.trials << ',' << detail::csv_field(r.mdp_id) << ','
        << detail::csv_field(c.pair_label) << ',' << c.n << ',' << c.t << ',' << format_double(c.gamma) << ','
        << format_double(c.beta) << ',' << to_string(row.estimator) << ',' << row.metric << ','
        << format_double(row.mean) << ',' << format_double(row.std) << '\n';
  }
  return out.str();
}

[[nodiscard]] inline std::string trials_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << "experiment,trial,trial_seed,behaviour_seed,evaluation_seed,mdp,pair,N,T,gamma,beta,estimator,"
         "truth_source,truth,bias,variance,mse_direct,mse_identity,ess\n";
  for (std::size_t cell = 0; cell < r.cells.size(); ++cell) {
    const auto& c = r.cells[cell];
    for (std::size_t k = 0; k < r.config.trials; ++k) {
      const auto& tc = r.at(cell, k);
      const auto& s = r.seeds[k];
      for (std::size_t e = 0; e < r.config.estimators.size(); ++e) {
        const auto& m = tc.metrics[e];
        out << detail::csv_field(r.config.name) << ',' << k << ',' << s.trial << ',' << s.behaviour << ','
            << s.evaluation << ',' << detail::csv_field(r.mdp_id) << ',' << detail::csv_field(c.pair_label) << ','
            << c.n << ',' << c.t << ',' << format_double(c.gamma) << ',' << format_double(c.beta) << ','
            << to_string(r.config.estimators[e]) << ',' << to_string(m.truth_source) << ','
            << format_double(tc.truth) << ',' << format_double(m.bias) << ',' << format_double(m.variance) << ','
            << format_double(m.mse_direct) << ',' << format_double(m.mse_identity) << ',' << format_double(m.ess)
            << '\n';
      }
    }
  }
  return out.str();
}

[[nodiscard]] inline Json manifest_json(const ExperimentResult& r) {
  Json trials = Json::array();
  for (std::size_t k = 0; k < r.seeds.size(); ++k) {
    trials.push_back({{"trial", k},
                      {"seed", r.seeds[k].trial},
                      {"behaviour_seed", r.seeds[k].behaviour},
                      {"evaluation_seed", r.seeds[k].evaluation}});
  }
  return {{"version", std::string{kVersion}},
          {"experiments", Json::array({r.config.name})},
          {"config", config_to_json(r.config)},
          {"config_hash", config_hash(r.config)},
          {"master_seed", r.config.seed},
          {"truth_source", std::string{to_string(r.config.truth)}},
          {"seed_derivation",
           "trial seed = derive_seed(master_seed, trial); behaviour stream = derive_seed(trial seed, 0); "
           "evaluation stream = derive_seed(trial seed, 1); replicate r of size N uses trajectories [r*N, (r+1)*N)"},
          {"trials", trials},
          {"files", Json::array({"results.csv", "trials.csv"})}};
}

inline void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out{dir / name, std::ios::binary};
    if (!out) {
      throw InputError("cannot write '" + (dir / name).string() + "'");
    }
    out << content;
  };
  write("results.csv", results_csv(r));
  write("trials.csv", trials_csv(r));
  write("manifest.json", manifest_json(r).dump(2) + "\n");
}

// ---------------------------------------------------------------------------------------------
// Builtin sweeps

namespace detail {

inline ExperimentConfig mdp1_vs_n(std::string name, std::string pair, bool full) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.mdp = std::string{"mdp1"};
  c.pairs = {std::move(pair)};
  c.n = full ? std::vector<std::size_t>{10, 50, 100, 500, 1000, 5000, 10000, 50000, 100000}
             : std::vector<std::size_t>{10, 50, 100, 1000, 10000};
  c.t = {1};
  c.gamma = {1.0};
  c.master_size = full ? 10'000'000 : 1'000'000;
  c.master_horizon = 1;
  return c;
}

inline ExperimentConfig mdp1_vs_beta(std::string name, std::size_t n, bool full) {
  ExperimentConfig c = mdp1_vs_n(std::move(name), "1.44", full);
  c.beta = default_beta_grid();
  c.n = {n};
  return c;
}

inline ExperimentConfig mdp1_vs_pd(std::string name, std::size_t n, bool full) {
  ExperimentConfig c = mdp1_vs_n(std::move(name), "1.44", full);
  c.pairs.clear();
  for (const auto& label : builtin_pair_labels()) {
    c.pairs.emplace_back(label);
  }
  c.n = {n};
  return c;
}

inline ExperimentConfig mdp2_vs_t(std::string name, double gamma, bool full) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.mdp = std::string{"mdp2"};
  c.pairs = {std::string{"1.44^T"}};
  c.n = {1000};
  c.t = full ? std::vector<std::size_t>{1, 5, 10, 50, 100, 500, 1000} : std::vector<std::size_t>{1, 5, 10, 50, 100};
  c.gamma = {gamma};
  c.master_size = 100'000;
  c.master_horizon = full ? 1000 : 200;
  return c;
}

inline ExperimentConfig mdp2_vs_pd(std::string name, bool full) {
  ExperimentConfig c = mdp2_vs_t(std::move(name), 0.7, full);
  c.pairs.clear();
  for (const auto& label : builtin_pair_labels()) {
    c.pairs.emplace_back(label + "^T");
  }
  c.t = {10};
  return c;
}

}  // namespace detail

/// Named sweeps at desk scale, or with full = true at the large reference scale.
[[nodiscard]] inline std::vector<ExperimentConfig> builtin_experiments(bool full = false) {
  using namespace detail;
  return {
      mdp1_vs_n("fig1_var_mse_vs_N", "2.56", full),
      mdp1_vs_beta("fig2_bias_vs_beta", full ? 100000 : 10000, full),
      mdp2_vs_t("fig3_bias_vs_T", 0.7, full),
      mdp2_vs_t("fig4_var_mse_vs_T", 0.7, full),
      mdp2_vs_pd("fig_var_vs_PD", full),
      mdp1_vs_n("fig5_ess_vs_N", "2.56", full),
      mdp2_vs_t("fig6_ess_vs_T", 0.7, full),
      mdp1_vs_n("appendix_mdp1_vs_N_pd_1_44", "1.44", full),
      mdp1_vs_n("appendix_mdp1_vs_N_pd_3_61", "3.61", full),
      mdp1_vs_beta("appendix_mdp1_vs_beta_N1000", 1000, full),
      mdp1_vs_beta("appendix_mdp1_vs_beta_N100000", full ? 100000 : 10000, full),
      mdp1_vs_pd("appendix_mdp1_vs_PD_N1000", 1000, full),
      mdp1_vs_pd("appendix_mdp1_vs_PD_N100000", full ? 100000 : 10000, full),
      mdp2_vs_t("appendix_mdp2_vs_T_gamma_0_7", 0.7, full),
      mdp2_vs_t("appendix_mdp2_vs_T_gamma_0_9", 0.9, full),
      mdp2_vs_t("appendix_mdp2_vs_T_gamma_0_9999", 0.9999, full),
      mdp2_vs_pd("appendix_mdp2_vs_PD_T10", full),
  };
}

[[nodiscard]] inline ExperimentConfig builtin_experiment(std::string_view name, bool full = false) {
  for (auto& c : builtin_experiments(full)) {
    if (c.name == name) {
      return c;
    }
  }
  throw InputError("unknown builtin experiment '" + std::string{name} + "'");
}

}  // namespace factope
