#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factope/errors.hpp"
#include "factope/estimators.hpp"
#include "factope/numeric.hpp"

namespace factope {

enum class TruthSource {
  /// Exact value from dynamic programming.
  oracle,
  /// Mean on-policy estimate over the evaluation-policy replicates.
  on_policy,
};

[[nodiscard]] constexpr std::string_view to_string(TruthSource t) noexcept {
  return t == TruthSource::oracle ? "oracle" : "on_policy";
}

[[nodiscard]] inline TruthSource parse_truth_source(std::string_view name) {
  if (name == "oracle") {
    return TruthSource::oracle;
  }
  if (name == "on_policy" || name == "onpolicy") {
    return TruthSource::on_policy;
  }
  throw InputError("unknown truth source '" + std::string{name} + "'");
}

/// R estimates of one estimator from disjoint replicates, with the value they are judged against.
struct ReplicateSet {
  EstimatorId estimator = EstimatorId::is;
  std::vector<double> values;
  double truth = 0.0;
  TruthSource truth_source = TruthSource::oracle;
  std::size_t n_per_replicate = 0;
};

struct MetricsSummary {
  double bias = 0.0;
  double variance = 0.0;
  double mse_direct = 0.0;
  double mse_identity = 0.0;
  double ess = 0.0;
  TruthSource truth_source = TruthSource::oracle;
};

namespace detail {

inline void check_values(std::span<const double> values, std::size_t minimum) {
  if (values.size() < minimum) {
    throw InputError("need at least " + std::to_string(minimum) + " replicate values, got " +
                     std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InputError("replicate values must be finite");
    }
  }
}

inline double mean_of(std::span<const double> values) {
  return compensated_sum(values) / static_cast<double>(values.size());
}

}  // namespace detail

/// Unbiased sample variance (divides by R - 1).
[[nodiscard]] inline double sample_variance(std::span<const double> values) {
  detail::check_values(values, 2);
  const double m = detail::mean_of(values);
  CompensatedSum acc;
  for (double v : values) {
    acc.add((v - m) * (v - m));
  }
  return acc.value() / static_cast<double>(values.size() - 1);
}

/// mean(values) - truth.
[[nodiscard]] inline double bias(const ReplicateSet& set) {
  detail::check_values(set.values, 1);
  return detail::mean_of(set.values) - set.truth;
}

[[nodiscard]] inline double variance(const ReplicateSet& set) { return sample_variance(set.values); }

struct MseRoutes {
  /// Mean of squared deviations from the truth.
  double direct = 0.0;
  /// bias^2 + variance.
  double identity = 0.0;
};

[[nodiscard]] inline MseRoutes mse(const ReplicateSet& set) {
  detail::check_values(set.values, 2);
  CompensatedSum acc;
  for (double v : set.values) {
    acc.add((v - set.truth) * (v - set.truth));
  }
  const double b = bias(set);
  return {acc.value() / static_cast<double>(set.values.size()), b * b + variance(set)};
}

/// n * var_on_policy / var_ope.
[[nodiscard]] inline double ess(std::size_t n, double var_on_policy, double var_ope) {
  if (!(var_ope > 0.0)) {
    throw DegenerateWeightsError("effective sample size is undefined for zero estimator variance");
  }
  return static_cast<double>(n) * var_on_policy / var_ope;
}

/// All metrics for one replicate set; `var_on_policy` is the variance of on-policy replicates at the same N.
[[nodiscard]] inline MetricsSummary summarise(const ReplicateSet& set, double var_on_policy) {
  MetricsSummary out;
  out.truth_source = set.truth_source;
  out.bias = bias(set);
  out.variance = variance(set);
  const auto routes = mse(set);
  out.mse_direct = routes.direct;
  out.mse_identity = out.bias * out.bias + out.variance;
  out.ess = ess(set.n_per_replicate, var_on_policy, out.variance);
  return out;
}

}  // namespace factope
