#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "factope/errors.hpp"
#include "factope/estimators.hpp"
#include "factope/mdp.hpp"
#include "factope/oracle.hpp"
#include "factope/policy.hpp"
#include "factope/sampling.hpp"

using namespace factope;

namespace {

// Independent reference: expected discounted return by recursion over (state, steps left).
double recursive_value(const FactoredMdp& m, const FactoredPolicy& p, double gamma, std::size_t s, std::size_t left) {
  if (left == 0) {
    return 0.0;
  }
  double v = 0.0;
  for (std::size_t a = 0; a < m.num_actions(); ++a) {
    double cont = 0.0;
    for (std::size_t sp = 0; sp < m.num_states(); ++sp) {
      if (m.transition(s, a, sp) > 0.0) {
        cont += m.transition(s, a, sp) * recursive_value(m, p, gamma, sp, left - 1);
      }
    }
    v += p.joint(s, a) * (m.reward(s, a) + gamma * cont);
  }
  return v;
}

std::vector<MdpPtr> benchmark_mdps() { return {build_mdp1(), build_mdp2()}; }

}  // namespace

TEST(ExactQ, PublishedValues) {
  const auto m1 = build_mdp1();
  EXPECT_NEAR(exact_q(builtin_policy_pair(m1, "1.44").evaluation, 1.0, 1), 1.2, 1e-15);
  EXPECT_NEAR(exact_q(uniform_policy(m1), 1.0, 1), 1.0, 1e-15);
  const auto m2 = build_mdp2();
  for (std::size_t t : {1, 2, 5, 20}) {
    EXPECT_NEAR(exact_q(builtin_policy_pair(m2, "1.44").evaluation, 0.0, t), 1.2, 1e-15);
  }
  EXPECT_THROW((void)exact_q(uniform_policy(m1), 1.0, 0), InputError);
  EXPECT_THROW((void)exact_q(*m2, uniform_policy(m1), 1.0, 1), InputError);
}

TEST(ExactQ, MatchesRecursionAndEnumeration) {
  for (const auto& m : benchmark_mdps()) {
    for (const auto& label : builtin_pair_labels()) {
      const auto pair = builtin_policy_pair(m, label);
      for (std::size_t t = 1; t <= 3; ++t) {
        for (double gamma : {0.0, 0.7, 1.0}) {
          const double dp = exact_q(pair.evaluation, gamma, t);
          EXPECT_NEAR(dp, recursive_value(*m, pair.evaluation, gamma, m->initial_state(), t), 1e-12);
          const auto space = enumerate_trajectories(pair.evaluation, t);
          EXPECT_NEAR(dp, enumerated_expected_return(space, gamma), 1e-10);
        }
      }
    }
  }
}

TEST(Enumeration, ProbabilityMassIsOne) {
  for (const auto& m : benchmark_mdps()) {
    for (const auto& label : builtin_pair_labels()) {
      const auto pair = builtin_policy_pair(m, label);
      for (std::size_t t = 1; t <= 4; ++t) {
        const auto space = enumerate_trajectories(pair.behaviour, t);
        EXPECT_NEAR(space.total_probability(), 1.0, 1e-10);
        EXPECT_EQ(space.size(), std::size_t{1} << (2 * t));  // four actions, deterministic moves
      }
    }
  }
}

TEST(Enumeration, GuardThrows) {
  const auto m = build_mdp2();
  const auto p = uniform_policy(m);
  EXPECT_THROW((void)enumerate_trajectories(p, 11), ResourceError);  // 4^11 > 10^6
  EXPECT_THROW((void)enumerate_trajectories(p, 3, 63), ResourceError);
  EXPECT_NO_THROW((void)enumerate_trajectories(p, 3, 64));
  const auto pair = builtin_policy_pair(m, "1.44");
  EXPECT_THROW((void)exact_estimator_moments(pair, EstimatorId::pdwis, 4, 1, 1.0), ResourceError);
  EXPECT_THROW((void)exact_estimator_moments(pair, EstimatorId::pdwis, 3, 4, 1.0), ResourceError);
  EXPECT_THROW((void)check_assumption_covariances(pair, 11), ResourceError);
}

TEST(Moments, UnbiasedEstimatorsMatchTruth) {
  for (const auto& m : benchmark_mdps()) {
    for (const auto& label : builtin_pair_labels()) {
      const auto pair = builtin_policy_pair(m, label);
      for (std::size_t t = 1; t <= 3; ++t) {
        const double truth = exact_q(pair.evaluation, 0.7, t);
        for (auto id : {EstimatorId::is, EstimatorId::pdis, EstimatorId::dec_is, EstimatorId::dec_pdis,
                        EstimatorId::on_policy}) {
          const auto r = exact_estimator_moments(pair, id, 1, t, 0.7);
          EXPECT_NEAR(r.mean, truth, 1e-12) << m->id() << " " << label << " t=" << t << " " << to_string(id);
          EXPECT_NEAR(r.probability_mass, 1.0, 1e-10);
        }
      }
    }
  }
}

TEST(Moments, LinearVarianceScalesWithN) {
  const auto pair = builtin_policy_pair(build_mdp2(), "2.56");
  const auto one = exact_estimator_moments(pair, EstimatorId::dec_pdis, 1, 2, 0.7);
  const auto ten = exact_estimator_moments(pair, EstimatorId::dec_pdis, 10, 2, 0.7);
  EXPECT_EQ(one.mean, ten.mean);
  EXPECT_NEAR(ten.variance, one.variance / 10.0, 1e-15);
}

TEST(Moments, HandVarianceOfIsOnMdp1) {
  // IS values 2*1.44, 1*0.96, 1*0.96, 0 with probability 1/4 each under the uniform behaviour
  const auto pair = builtin_policy_pair(build_mdp1(), "1.44");
  const double mean = (2.88 + 0.96 + 0.96) / 4.0;
  const double second = (2.88 * 2.88 + 2 * 0.96 * 0.96) / 4.0;
  const auto r = exact_estimator_moments(pair, EstimatorId::is, 1, 1, 1.0);
  EXPECT_NEAR(r.mean, mean, 1e-14);
  EXPECT_NEAR(r.variance, second - mean * mean, 1e-14);
  EXPECT_EQ(r.enumeration_size, 4u);
}

TEST(Moments, WeightedSingleTrajectoryOneStepIsOnPolicyUnderBehaviour) {
  const auto pair = builtin_policy_pair(build_mdp1(), "2.56");
  // N = 1, T = 1: the weighted estimate is the observed reward, whose mean under the uniform behaviour is 1
  const auto r = exact_estimator_moments(pair, EstimatorId::pdwis, 1, 1, 1.0);
  EXPECT_NEAR(r.mean, 1.0, 1e-14);
  EXPECT_NEAR(r.variance, 0.5, 1e-14);
}

TEST(Moments, WeightedTupleEnumerationMatchesBruteForce) {
  const auto m = build_mdp1();
  const auto pair = builtin_policy_pair(m, "3.61");
  const auto r = exact_estimator_moments(pair, EstimatorId::pdwis, 2, 1, 1.0);
  EXPECT_EQ(r.enumeration_size, 16u);
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      const double wa = pair.evaluation.joint(0, a) / 0.25;
      const double wb = pair.evaluation.joint(0, b) / 0.25;
      const double v = (wa * m->reward(0, a) + wb * m->reward(0, b)) / (wa + wb);
      mean += v / 16.0;
      second += v * v / 16.0;
    }
  }
  EXPECT_NEAR(r.mean, mean, 1e-13);
  EXPECT_NEAR(r.variance, second - mean * mean, 1e-13);
}

TEST(Moments, VarianceOrderingWhereAssumptionsHold) {
  std::size_t checked = 0;
  for (const auto& m : benchmark_mdps()) {
    for (const auto& label : builtin_pair_labels()) {
      const auto pair = builtin_policy_pair(m, label);
      for (std::size_t t = 1; t <= (m->num_states() == 2 ? 1u : 2u); ++t) {
        if (!check_assumption_covariances(pair, t).passed()) {
          continue;
        }
        ++checked;
        auto var = [&](EstimatorId id) { return exact_estimator_moments(pair, id, 1, t, 0.7).variance; };
        auto leq = [](double a, double b) { return a <= b + 1e-12 * std::max(1.0, std::abs(b)); };
        EXPECT_TRUE(leq(var(EstimatorId::dec_is), var(EstimatorId::is))) << m->id() << " " << label << " t=" << t;
        EXPECT_TRUE(leq(var(EstimatorId::dec_pdis), var(EstimatorId::pdis))) << m->id() << " " << label << " t=" << t;
      }
    }
  }
  EXPECT_GT(checked, 0u);
}

namespace {

// Brute force over all n-tuples of one-step MDP-1 actions, written out independently of the oracle.
std::pair<double, double> mdp1_weighted_variances(double b, double e, std::size_t n) {
  auto prob = [](double p, std::size_t bit) { return bit != 0 ? p : 1.0 - p; };
  std::vector<double> plain;
  std::vector<double> dec;
  std::vector<double> weight;
  std::size_t tuples = 1;
  for (std::size_t k = 0; k < n; ++k) tuples *= 4;
  for (std::size_t code = 0; code < tuples; ++code) {
    double p = 1.0;
    double num = 0.0;
    double den = 0.0;
    double num_h = 0.0;
    double den_h = 0.0;
    double num_v = 0.0;
    double den_v = 0.0;
    std::size_t c = code;
    for (std::size_t k = 0; k < n; ++k, c /= 4) {
      const std::size_t h = (c % 4) / 2;
      const std::size_t v = c % 2;
      p *= prob(b, h) * prob(b, v);
      const double wh = prob(e, h) / prob(b, h);
      const double wv = prob(e, v) / prob(b, v);
      num += wh * wv * static_cast<double>(h + v);
      den += wh * wv;
      num_h += wh * static_cast<double>(h);
      den_h += wh;
      num_v += wv * static_cast<double>(v);
      den_v += wv;
    }
    plain.push_back(num / den);
    dec.push_back(num_h / den_h + num_v / den_v);
    weight.push_back(p);
  }
  auto variance = [&](const std::vector<double>& x) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m += weight[i] * x[i];
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) v += weight[i] * (x[i] - m) * (x[i] - m);
    return v;
  };
  return {variance(dec), variance(plain)};
}

}  // namespace

// The weighted pair is not always ordered at small N even where every covariance condition holds.
// These values pin the exact enumeration against an independent brute force.
TEST(Moments, WeightedVarianceAtSmallNMatchesBruteForce) {
  const auto m = build_mdp1();
  for (const auto& label : builtin_pair_labels()) {
    const auto pair = builtin_policy_pair(m, label);
    const double b = pair.behaviour.factor_probability(0, 0, 1);
    const double e = pair.evaluation.factor_probability(0, 0, 1);
    ASSERT_TRUE(check_assumption_covariances(pair, 1).passed());
    for (std::size_t n = 1; n <= 3; ++n) {
      const auto [dec, plain] = mdp1_weighted_variances(b, e, n);
      EXPECT_NEAR(exact_estimator_moments(pair, EstimatorId::dec_pdwis, n, 1, 1.0).variance, dec, 1e-12);
      EXPECT_NEAR(exact_estimator_moments(pair, EstimatorId::pdwis, n, 1, 1.0).variance, plain, 1e-12);
    }
  }
  // uniform behaviour keeps the ordering; pair 4.46 at N = 2 does not
  const auto [dec144, plain144] = mdp1_weighted_variances(0.5, 0.6, 2);
  EXPECT_LT(dec144, plain144);
  const auto [dec446, plain446] = mdp1_weighted_variances(0.45, 0.95, 2);
  EXPECT_GT(dec446, plain446);
}

TEST(Moments, BetaInducesDecomposedBias) {
  for (double beta : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    const auto m = build_mdp1({1.0, beta});
    const auto pair = builtin_policy_pair(m, "1.44");
    const double truth = exact_q(pair.evaluation, 1.0, 1);
    const double bias = exact_estimator_moments(pair, EstimatorId::dec_is, 1, 1, 1.0).mean - truth;
    const double plain = exact_estimator_moments(pair, EstimatorId::is, 1, 1, 1.0).mean - truth;
    EXPECT_NEAR(plain, 0.0, 1e-12);
    if (beta == 0.0) {
      EXPECT_NEAR(bias, 0.0, 1e-12);
    } else {
      // the sub-rewards miss the interaction term paid with probability pi_e(right,up) = 0.36
      EXPECT_GT(std::abs(bias), 0.0);
      EXPECT_NEAR(bias, -beta * 0.36, 1e-12);
    }
  }
}

TEST(Covariances, Mdp1CrossFactorTermsVanish) {
  const auto m = build_mdp1();
  for (const auto& label : builtin_pair_labels()) {
    const auto report = check_assumption_covariances(builtin_policy_pair(m, label), 1);
    for (auto c : {CovarianceCondition::ratio_ratio, CovarianceCondition::reward_ratio}) {
      for (const auto& e : report[c].entries) {
        EXPECT_NEAR(e.value, 0.0, 1e-15) << label;
      }
      EXPECT_TRUE(report[c].passed);
    }
    EXPECT_TRUE(report.passed());
    EXPECT_TRUE(report[CovarianceCondition::reward_reward].entries.empty());
  }
}

TEST(Covariances, Mdp2TwoStepsPasses) {
  const auto report = check_assumption_covariances(builtin_policy_pair(build_mdp2(), "1.44"), 2);
  EXPECT_NEAR(report.probability_mass, 1.0, 1e-12);
  for (const auto& c : report.conditions) {
    EXPECT_TRUE(c.passed) << to_string(c.condition) << " min=" << c.min << " max=" << c.max;
    EXPECT_FALSE(c.entries.empty());
  }
}

TEST(Covariances, DeterministicEqualPoliciesGiveZero) {
  const auto m = build_mdp2();
  FactoredPolicy p{m, {{0.0, 1.0, 1.0, 0.0}, {1.0, 0.0, 0.0, 1.0}}};
  const auto report = check_assumption_covariances(PolicyPair{p, p}, 3);
  for (const auto& c : report.conditions) {
    for (const auto& e : c.entries) {
      EXPECT_EQ(e.value, 0.0);
    }
    EXPECT_TRUE(c.passed);
  }
}

TEST(Covariances, CrossFactorRewardCouplingFails) {
  // the vertical factor's abstraction sees the horizontal chain, so its sub-reward tracks the horizontal ratio
  MdpTables t = build_mdp2()->tables();
  t.id = "coupled";
  t.factors[1].abstract_states = {"0,?", "1,?"};
  t.factors[1].abstraction = {0, 0, 1, 1};
  t.factors[1].sub_rewards = {0.0, 1.0, 0.0, -1.0};
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < 4; ++a) {
      const std::size_t x = s / 2;
      t.reward[s * 4 + a] = t.factors[0].sub_rewards[x * 2 + a / 2] + t.factors[1].sub_rewards[x * 2 + a % 2];
    }
  }
  const auto m = std::make_shared<const FactoredMdp>(t);
  FactoredPolicy b = uniform_policy(m);
  // vertical factor prefers up only once x = 1
  FactoredPolicy e{m, {{0.2, 0.8, 0.2, 0.8}, {0.5, 0.5, 0.05, 0.95}}};
  const auto report = check_assumption_covariances(PolicyPair{b, e}, 2);
  EXPECT_FALSE(report[CovarianceCondition::reward_ratio].passed);
  EXPECT_FALSE(report.passed());
  // factored behaviour makes every step ratio mean-one given the past, so cross-factor ratios stay uncorrelated
  EXPECT_TRUE(report[CovarianceCondition::ratio_ratio].passed);
}

TEST(Moments, MonteCarloAgreesWithOracle) {
  const auto m = build_mdp2();
  const auto pair = builtin_policy_pair(m, "2.56");
  const std::size_t R = 2000;
  const auto data = generate_dataset(pair.behaviour, R, 2, 4242);
  for (auto id : kOffPolicyEstimators) {
    const auto exact = exact_estimator_moments(pair, id, 1, 2, 0.7);
    double total = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      total += estimate(id, subset(data, 1, 2, r), pair, 0.7).value;
    }
    const double mc = total / static_cast<double>(R);
    EXPECT_NEAR(mc, exact.mean, 4.0 * std::sqrt(exact.variance / static_cast<double>(R))) << to_string(id);
  }
}
