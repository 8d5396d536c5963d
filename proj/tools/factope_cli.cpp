#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "factope/errors.hpp"
#include "factope/estimators.hpp"
#include "factope/experiment.hpp"
#include "factope/io.hpp"
#include "factope/oracle.hpp"

namespace {

using namespace factope;

// Exit codes: 0 ok, 1 runtime failure, 2 bad input, 3 degenerate weights, 4 resource guard.
int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DegenerateWeightsError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const ResourceError*>(&e) != nullptr) return 4;
  if (dynamic_cast<const InputError*>(&e) != nullptr) return 2;
  return 1;
}

struct MdpOptions {
  std::string mdp = "mdp1";
  double alpha = 1.0;
  double beta = 0.0;
};

void add_mdp_options(CLI::App* cmd, MdpOptions& o) {
  cmd->add_option("--mdp", o.mdp, "mdp1, mdp2, mdp2-listed, or a path to an MDP JSON file")->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "MDP-1 alpha")->capture_default_str();
  cmd->add_option("--beta", o.beta, "MDP-1 beta")->capture_default_str();
}

MdpPtr load_mdp(const MdpOptions& o) {
  if (o.mdp == "mdp1") return build_mdp1({o.alpha, o.beta});
  if (o.mdp == "mdp2") return build_mdp2(Mdp2Rewards::factored);
  if (o.mdp == "mdp2-listed") return build_mdp2(Mdp2Rewards::listed);
  return mdp_from_json(read_json_file(o.mdp));
}

// A builtin label or a pair JSON file.
PolicyPair load_pair(const MdpPtr& mdp, const std::string& spec) {
  if (spec.ends_with(".json")) {
    return pair_from_json(mdp, read_json_file(spec));
  }
  auto pair = builtin_policy_pair(mdp, spec);
  pair.divergence_label = spec;
  return pair;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out{path};
  if (!out) {
    throw InputError("cannot write '" + path + "'");
  }
  out << text;
}

std::vector<EstimatorId> parse_estimator_list(const std::string& text) {
  std::vector<EstimatorId> out;
  std::stringstream in{text};
  std::string name;
  while (std::getline(in, name, ',')) {
    if (!name.empty()) {
      out.push_back(parse_estimator(name));
    }
  }
  if (out.empty()) {
    throw InputError("no estimators given");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factored-action off-policy evaluation toolkit"};
  app.set_version_flag("--version", std::string{factope::kVersion});
  app.require_subcommand(1);

  // simulate
  MdpOptions sim_mdp;
  std::string sim_policy = "uniform";
  std::string sim_role = "behaviour";
  std::size_t sim_n = 100;
  std::size_t sim_t = 0;
  std::uint64_t sim_seed = 0;
  std::uint64_t sim_first = 0;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Generate trajectories as CSV");
  add_mdp_options(simulate, sim_mdp);
  simulate->add_option("--policy", sim_policy, "uniform, a builtin pair label, or a policy/pair JSON file")
      ->capture_default_str();
  simulate->add_option("--role", sim_role, "Which policy of a pair to run: behaviour or evaluation")
      ->check(CLI::IsMember({"behaviour", "evaluation"}))
      ->capture_default_str();
  simulate->add_option("--n", sim_n, "Number of trajectories")->capture_default_str();
  simulate->add_option("--t", sim_t, "Horizon (default: the MDP's)");
  simulate->add_option("--seed", sim_seed, "Stream seed")->required();
  simulate->add_option("--first-index", sim_first, "Index of the first trajectory in the stream")->capture_default_str();
  simulate->add_option("--out", sim_out, "Output CSV (default stdout)");

  // estimate
  MdpOptions est_mdp;
  std::string est_dataset;
  std::string est_pair;
  std::optional<double> est_gamma;
  std::string est_list = "is,pdis,pdwis,decis,decpdis,decpdwis,onpolicy";
  std::string est_grouping;
  bool est_env_rewards = false;
  std::string est_out;
  auto* est = app.add_subcommand("estimate", "Run estimators on a dataset");
  add_mdp_options(est, est_mdp);
  est->add_option("--dataset", est_dataset, "Dataset CSV")->required();
  est->add_option("--pair", est_pair, "Builtin pair label or pair JSON file")->required();
  est->add_option("--gamma", est_gamma, "Discount (default: the MDP's)");
  est->add_option("--estimators", est_list, "Comma-separated estimator ids")->capture_default_str();
  est->add_option("--grouping", est_grouping, "Factor grouping such as \"1,2|3\" (1-based)");
  est->add_flag("--environment-rewards", est_env_rewards,
                "With a single all-factor group, use the environment reward as its sub-reward");
  est->add_option("--out", est_out, "Output JSON (default stdout)");

  // oracle
  MdpOptions orc_mdp;
  std::string orc_pair = "1.44";
  std::optional<double> orc_gamma;
  std::size_t orc_t = 1;
  std::size_t orc_n = 1;
  std::string orc_list = "is,pdis,pdwis,decis,decpdis,decpdwis,onpolicy";
  bool orc_assumptions = false;
  std::string orc_out;
  auto* orc = app.add_subcommand("oracle", "Exact Q-value, estimator moments, and covariance conditions");
  add_mdp_options(orc, orc_mdp);
  orc->add_option("--pair", orc_pair, "Builtin pair label or pair JSON file")->capture_default_str();
  orc->add_option("--gamma", orc_gamma, "Discount (default: the MDP's)");
  orc->add_option("--t", orc_t, "Horizon")->capture_default_str();
  orc->add_option("--n", orc_n, "Trajectories per estimate")->capture_default_str();
  orc->add_option("--estimator", orc_list, "Comma-separated estimator ids")->capture_default_str();
  orc->add_flag("--assumptions", orc_assumptions, "Also report the covariance conditions");
  orc->add_option("--out", orc_out, "Output JSON (default stdout)");

  // sweep
  std::string sw_config;
  std::string sw_builtin;
  bool sw_full = false;
  bool sw_list = false;
  std::string sw_out = "results";
  std::size_t sw_threads = 0;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment grid and write results.csv, trials.csv, manifest.json");
  auto* sw_config_opt = sweep->add_option("--config", sw_config, "Experiment JSON");
  auto* sw_builtin_opt = sweep->add_option("--builtin", sw_builtin, "Builtin experiment name, or 'all'");
  sw_config_opt->excludes(sw_builtin_opt);
  sweep->add_flag("--full", sw_full, "Use the large grid sizes for builtin experiments");
  sweep->add_flag("--list", sw_list, "List builtin experiments and exit");
  sweep->add_option("--out-dir", sw_out, "Output directory")->capture_default_str();
  sweep->add_option("--threads", sw_threads, "Worker threads (0 = all cores)")->capture_default_str();

  // export
  MdpOptions exm_mdp;
  std::string exm_out;
  auto* export_mdp = app.add_subcommand("export-mdp", "Write an MDP as JSON");
  add_mdp_options(export_mdp, exm_mdp);
  export_mdp->add_option("--out", exm_out, "Output JSON (default stdout)");

  MdpOptions exp_mdp;
  std::string exp_pair = "1.44";
  std::string exp_out;
  auto* export_pair = app.add_subcommand("export-pair", "Write a builtin policy pair as JSON");
  add_mdp_options(export_pair, exp_mdp);
  export_pair->add_option("--pair", exp_pair, "Builtin pair label")->capture_default_str();
  export_pair->add_option("--out", exp_out, "Output JSON (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const auto mdp = load_mdp(sim_mdp);
      std::optional<FactoredPolicy> policy;
      if (sim_policy == "uniform") {
        policy = uniform_policy(mdp);
      } else if (sim_policy.ends_with(".json")) {
        const auto j = read_json_file(sim_policy);
        policy = j.contains("behaviour") ? (sim_role == "behaviour" ? pair_from_json(mdp, j).behaviour
                                                                    : pair_from_json(mdp, j).evaluation)
                                         : policy_from_json(mdp, j);
      } else {
        const auto pair = builtin_policy_pair(mdp, sim_policy);
        policy = sim_role == "behaviour" ? pair.behaviour : pair.evaluation;
      }
      const std::size_t t = sim_t != 0 ? sim_t : mdp->horizon_default();
      const auto data = generate_dataset(*policy, sim_n, t, sim_seed, sim_first);
      std::ostringstream out;
      write_dataset_csv(out, data, *mdp);
      emit(out.str(), sim_out);
    } else if (est->parsed()) {
      auto mdp = load_mdp(est_mdp);
      auto pair = load_pair(mdp, est_pair);
      const double gamma = est_gamma.value_or(mdp->discount_default());
      const auto data = read_dataset_csv(est_dataset, *mdp);
      std::optional<GroupedModel> grouped;
      std::optional<Dataset> regrouped;
      if (!est_grouping.empty()) {
        grouped = group_factors(pair, parse_grouping(est_grouping),
                                est_env_rewards ? GroupRewardSource::environment : GroupRewardSource::sum_of_members);
        regrouped = regroup_dataset(data, *grouped);
      }
      const DatasetView view = regrouped ? DatasetView{*regrouped} : DatasetView{data};
      const PolicyPair& used = grouped ? grouped->pair : pair;
      Json records = Json::array();
      for (auto id : parse_estimator_list(est_list)) {
        Json record;
        try {
          record = to_json(estimate(id, view, used, gamma));
        } catch (const DegenerateWeightsError& e) {
          record = {{"estimator", std::string{to_string(id)}}, {"value", nullptr}, {"error", e.what()}};
        }
        records.push_back(record);
      }
      Json doc{{"mdp", used.mdp()->id()},
               {"pair", used.divergence_label.value_or("custom")},
               {"gamma", gamma},
               {"n", view.size()},
               {"t", view.horizon()},
               {"estimates", records}};
      emit(doc.dump(2) + "\n", est_out);
    } else if (orc->parsed()) {
      const auto mdp = load_mdp(orc_mdp);
      const auto pair = load_pair(mdp, orc_pair);
      const double gamma = orc_gamma.value_or(mdp->discount_default());
      Json moments = Json::array();
      for (auto id : parse_estimator_list(orc_list)) {
        moments.push_back(to_json(exact_estimator_moments(pair, id, orc_n, orc_t, gamma)));
      }
      Json doc{{"mdp", mdp->id()},
               {"pair", pair.divergence_label.value_or("custom")},
               {"gamma", gamma},
               {"t", orc_t},
               {"exact_q", exact_q(pair.evaluation, gamma, orc_t)},
               {"policy_divergence", policy_divergence(pair, 1)},
               {"moments", moments}};
      if (orc_assumptions) {
        doc["assumptions"] = to_json(check_assumption_covariances(pair, orc_t));
      }
      emit(doc.dump(2) + "\n", orc_out);
    } else if (sweep->parsed()) {
      if (sw_list) {
        for (const auto& c : builtin_experiments(sw_full)) {
          std::cout << c.name << "\n";
        }
        return 0;
      }
      std::vector<ExperimentConfig> configs;
      if (!sw_config.empty()) {
        configs.push_back(config_from_json(read_json_file(sw_config)));
      } else if (sw_builtin == "all") {
        configs = builtin_experiments(sw_full);
      } else if (!sw_builtin.empty()) {
        configs.push_back(builtin_experiment(sw_builtin, sw_full));
      } else {
        throw InputError("sweep needs --config or --builtin");
      }
      for (const auto& c : configs) {
        validate(c);
      }
      for (const auto& c : configs) {
        std::cerr << "running " << c.name << "\n";
        const auto result = run_experiment(c, sw_threads);
        const auto dir = configs.size() == 1 ? std::filesystem::path{sw_out} : std::filesystem::path{sw_out} / c.name;
        write_outputs(result, dir);
        std::cerr << "wrote " << dir.string() << "\n";
      }
    } else if (export_mdp->parsed()) {
      emit(mdp_to_json(*load_mdp(exm_mdp)).dump(2) + "\n", exm_out);
    } else if (export_pair->parsed()) {
      const auto mdp = load_mdp(exp_mdp);
      emit(pair_to_json(load_pair(mdp, exp_pair)).dump(2) + "\n", exp_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
