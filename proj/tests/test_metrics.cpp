#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "factope/errors.hpp"
#include "factope/estimators.hpp"
#include "factope/metrics.hpp"
#include "factope/oracle.hpp"
#include "factope/policy.hpp"
#include "factope/sampling.hpp"

using namespace factope;

namespace {

ReplicateSet make_set(std::vector<double> values, double truth, std::size_t n = 1) {
  ReplicateSet s;
  s.values = std::move(values);
  s.truth = truth;
  s.n_per_replicate = n;
  return s;
}

std::vector<double> replicate_values(EstimatorId id, const PolicyPair& pair, const Dataset& data, std::size_t n,
                                     std::size_t t, std::size_t R, double gamma) {
  std::vector<double> out;
  for (std::size_t r = 0; r < R; ++r) {
    out.push_back(estimate(id, subset(data, n, t, r), pair, gamma).value);
  }
  return out;
}

}  // namespace

TEST(Bias, Examples) {
  EXPECT_EQ(bias(make_set({1.2, 1.2, 1.2}, 1.2)), 0.0);
  EXPECT_NEAR(bias(make_set({1.0, 1.4}, 1.2)), 0.0, 1e-15);
  EXPECT_NEAR(bias(make_set({3.0}, 1.0)), 2.0, 0.0);
}

TEST(Variance, Examples) {
  EXPECT_EQ(variance(make_set({4.0, 4.0, 4.0}, 0.0)), 0.0);
  EXPECT_EQ(variance(make_set({0.0, 2.0}, 1.0)), 2.0);
  EXPECT_THROW((void)variance(make_set({1.0}, 1.0)), InputError);
  EXPECT_THROW((void)variance(make_set({1.0, NAN}, 1.0)), InputError);
}

TEST(Mse, Routes) {
  const auto zero = mse(make_set({1.0, 1.0}, 1.0));
  EXPECT_EQ(zero.direct, 0.0);
  EXPECT_EQ(zero.identity, 0.0);
  const auto r = mse(make_set({0.0, 2.0}, 1.0));
  EXPECT_EQ(r.direct, 1.0);
  EXPECT_EQ(r.identity, 2.0);
}

TEST(Mse, IdentityHoldsByConstruction) {
  const auto set = make_set({0.3, 1.7, 2.2, -0.4, 0.9}, 0.5);
  const auto s = summarise(set, 1.0);
  EXPECT_NEAR(s.mse_identity, s.bias * s.bias + s.variance, 1e-12);
  // the two conventions differ only through R/(R-1) on the variance
  const double R = 5.0;
  EXPECT_NEAR(s.mse_direct, s.bias * s.bias + s.variance * (R - 1) / R, 1e-12);
}

TEST(Ess, Examples) {
  EXPECT_EQ(ess(100, 0.37, 0.37), 100.0);
  EXPECT_EQ(ess(1000, 0.5, 1.0), 500.0);
  EXPECT_THROW((void)ess(10, 1.0, 0.0), DegenerateWeightsError);
}

TEST(Ess, InverselyProportionalToVariance) {
  for (double v : {0.1, 0.7, 3.0, 1e-3}) {
    for (std::size_t n : {1, 10, 1000}) {
      EXPECT_EQ(ess(n, v, 2 * v), ess(n, v, v) / 2);
    }
  }
}

TEST(Metrics, ScaleEquivariance) {
  const std::vector<double> values{0.3, 1.7, 2.2, -0.4, 0.9};
  const auto base = summarise(make_set(values, 0.5), 1.0);
  for (double c : {2.0, -3.0, 0.25}) {
    std::vector<double> scaled;
    for (double v : values) {
      scaled.push_back(c * v);
    }
    const auto s = summarise(make_set(scaled, c * 0.5), 1.0);
    EXPECT_NEAR(s.bias, c * base.bias, 1e-12);
    EXPECT_NEAR(s.variance, c * c * base.variance, 1e-12);
    EXPECT_NEAR(s.mse_direct, c * c * base.mse_direct, 1e-12);
    EXPECT_NEAR(s.mse_identity, c * c * base.mse_identity, 1e-12);
  }
}

TEST(TruthSource, Names) {
  EXPECT_EQ(parse_truth_source("oracle"), TruthSource::oracle);
  EXPECT_EQ(parse_truth_source(to_string(TruthSource::on_policy)), TruthSource::on_policy);
  EXPECT_THROW((void)parse_truth_source("sample"), InputError);
}

TEST(MonteCarlo, VarianceOfIsMatchesOracle) {
  const auto pair = builtin_policy_pair(build_mdp1(), "2.56");
  const std::size_t R = 5000;
  const auto data = generate_dataset(pair.behaviour, R, 1, 606);
  const auto values = replicate_values(EstimatorId::is, pair, data, 1, 1, R, 1.0);
  const double exact = exact_estimator_moments(pair, EstimatorId::is, 1, 1, 1.0).variance;
  EXPECT_NEAR(sample_variance(values) / exact, 1.0, 0.10);
}

TEST(MonteCarlo, DecomposedIsUnbiasedWithinNoise) {
  const auto pair = builtin_policy_pair(build_mdp1(), "2.56");
  const std::size_t R = 5000;
  const auto data = generate_dataset(pair.behaviour, R, 1, 707);
  auto set = make_set(replicate_values(EstimatorId::dec_is, pair, data, 1, 1, R, 1.0), exact_q(pair.evaluation, 1.0, 1));
  const double v = variance(set);
  EXPECT_LE(std::abs(bias(set)), 4.0 * std::sqrt(v / static_cast<double>(R)));
  EXPECT_NEAR(mse(set).direct / v, 1.0, 0.05);
}

TEST(MonteCarlo, DecomposedWeightedHasLargerEss) {
  const auto pair = builtin_policy_pair(build_mdp1(), "2.56");
  const std::size_t N = 1000;
  const std::size_t R = 100;
  const auto off = generate_dataset(pair.behaviour, N * R, 1, 808);
  const auto on = generate_dataset(pair.evaluation, N * R, 1, 809);
  const double var_on = sample_variance(replicate_values(EstimatorId::on_policy, pair, on, N, 1, R, 1.0));
  const double plain = sample_variance(replicate_values(EstimatorId::pdwis, pair, off, N, 1, R, 1.0));
  const double dec = sample_variance(replicate_values(EstimatorId::dec_pdwis, pair, off, N, 1, R, 1.0));
  EXPECT_GT(ess(N, var_on, dec), ess(N, var_on, plain));
}
