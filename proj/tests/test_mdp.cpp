#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "factope/errors.hpp"
#include "factope/mdp.hpp"

using namespace factope;

namespace {

std::size_t act(const FactoredMdp& m, const char* name) { return m.action_index(name); }

}  // namespace

TEST(Mdp1, RewardsFollowAlphaBeta) {
  const auto m = build_mdp1({1.0, 0.0});
  const auto s = m->state_index("state");
  EXPECT_EQ(m->reward(s, act(*m, "right,up")), 2.0);
  EXPECT_EQ(m->reward(s, act(*m, "left,down")), 0.0);
  EXPECT_EQ(m->reward(s, act(*m, "left,up")), 1.0);
  EXPECT_EQ(m->reward(s, act(*m, "right,down")), 1.0);
  const auto mb = build_mdp1({1.0, 0.5});
  EXPECT_EQ(mb->reward(s, act(*mb, "right,up")), 2.5);
}

TEST(Mdp1, EveryActionEndsInTerminalWithZeroReward) {
  const auto m = build_mdp1();
  const auto term = m->state_index("terminal");
  for (std::size_t s = 0; s < m->num_states(); ++s) {
    for (std::size_t a = 0; a < m->num_actions(); ++a) {
      EXPECT_EQ(m->transition(s, a, term), 1.0);
    }
  }
  for (std::size_t a = 0; a < m->num_actions(); ++a) {
    EXPECT_EQ(m->reward(term, a), 0.0);
  }
}

TEST(Mdp1, IdentityAbstraction) {
  const auto m = build_mdp1();
  EXPECT_EQ(abstract_state(*m, 0, "state"), "state");
  EXPECT_EQ(abstract_state(*m, 1, "terminal"), "terminal");
}

TEST(Mdp1, SubRewardsIgnoreBeta) {
  const auto m = build_mdp1({1.0, 0.7});
  const auto s = m->state_index("state");
  EXPECT_EQ(m->sub_reward(0, s, m->sub_action_index(0, "right")), 1.0);
  EXPECT_EQ(m->sub_reward(1, s, m->sub_action_index(1, "up")), 1.0);
  EXPECT_EQ(m->sub_reward(0, s, m->sub_action_index(0, "left")), 0.0);
}

TEST(Mdp2, ListedRewardExamples) {
  const auto m = build_mdp2();
  EXPECT_EQ(m->reward(m->state_index("1,1"), act(*m, "right,up")), -2.0);
  EXPECT_EQ(m->reward(m->state_index("0,0"), act(*m, "right,up")), 2.0);
  EXPECT_EQ(m->transition(m->state_index("0,1"), act(*m, "left,down"), m->state_index("0,0")), 1.0);
}

TEST(Mdp2, DeterministicTransitionsByAction) {
  const auto m = build_mdp2();
  for (std::size_t s = 0; s < 4; ++s) {
    EXPECT_EQ(m->transition(s, act(*m, "right,up"), m->state_index("1,1")), 1.0);
    EXPECT_EQ(m->transition(s, act(*m, "left,up"), m->state_index("0,1")), 1.0);
    EXPECT_EQ(m->transition(s, act(*m, "right,down"), m->state_index("1,0")), 1.0);
    EXPECT_EQ(m->transition(s, act(*m, "left,down"), m->state_index("0,0")), 1.0);
  }
}

TEST(Mdp2, SubRewardsSumToReward) {
  const auto m = build_mdp2();
  const auto s = m->state_index("0,0");
  const auto a = act(*m, "right,up");
  const double total = m->sub_reward(0, m->abstract_state(0, s), m->sub_action(a, 0)) +
                       m->sub_reward(1, m->abstract_state(1, s), m->sub_action(a, 1));
  EXPECT_EQ(total, 2.0);
  EXPECT_EQ(m->reward(s, a), total);
}

TEST(Mdp2, Abstractions) {
  const auto m = build_mdp2();
  EXPECT_EQ(abstract_state(*m, 0, "0,1"), "0,?");
  EXPECT_EQ(abstract_state(*m, 1, "0,1"), "?,1");
  EXPECT_EQ(abstract_state(*m, 0, "0,0"), "0,?");
}

TEST(Mdp2, ListedTableIsNotAdditive) {
  const auto m = build_mdp2(Mdp2Rewards::listed);
  const auto report = check_reward_factorisation(*m);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.residual, 1.0);
  EXPECT_EQ(m->reward(m->state_index("1,1"), act(*m, "right,up")), -2.0);
}

TEST(AbstractState, RejectsUnknownStateAndFactor) {
  const auto m = build_mdp2();
  EXPECT_THROW((void)abstract_state(*m, 2, std::size_t{0}), InputError);
  EXPECT_THROW((void)abstract_state(*m, 0, std::size_t{9}), InputError);
  EXPECT_THROW((void)abstract_state(*m, 0, "2,2"), InputError);
}

TEST(Builders, TransitionRowsSumToOne) {
  for (const auto& m : {build_mdp1(), build_mdp1({2.0, -1.0}), build_mdp2()}) {
    for (std::size_t s = 0; s < m->num_states(); ++s) {
      for (std::size_t a = 0; a < m->num_actions(); ++a) {
        double total = 0.0;
        for (double p : m->transition_row(s, a)) {
          total += p;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
    }
  }
}

TEST(RewardFactorisation, Mdp1PassesForEveryAlphaWhenBetaIsZero) {
  for (double alpha : {-3.0, -1.0, 0.0, 0.25, 1.0, 2.5, 10.0}) {
    const auto report = check_reward_factorisation(*build_mdp1({alpha, 0.0}), 1e-12);
    EXPECT_TRUE(report.passed) << alpha;
    EXPECT_EQ(report.residual, 0.0);
  }
}

TEST(RewardFactorisation, Mdp1FailsWithResidualBeta) {
  for (double beta : {-2.0, -0.5, 0.1, 0.5, 2.0}) {
    const auto m = build_mdp1({1.0, beta});
    const auto report = check_reward_factorisation(*m, 1e-12);
    EXPECT_FALSE(report.passed);
    EXPECT_NEAR(report.residual, std::abs(beta), 1e-15);  // (2 + beta) - 2 rounds
    ASSERT_TRUE(report.witness_state.has_value());
    EXPECT_EQ(*report.witness_state, m->state_index("state"));
    EXPECT_EQ(*report.witness_action, act(*m, "right,up"));
  }
}

TEST(RewardFactorisation, Mdp2Passes) { EXPECT_TRUE(check_reward_factorisation(*build_mdp2(), 1e-12).passed); }

TEST(TransitionFactorisation, BuiltinsPass) {
  EXPECT_TRUE(check_transition_factorisation(*build_mdp2(), 1e-12).passed);
  EXPECT_TRUE(check_transition_factorisation(*build_mdp1({1.0, 0.0}), 1e-12).passed);
  EXPECT_TRUE(check_transition_factorisation(*build_mdp1({1.0, 3.0}), 1e-12).passed);
}

TEST(TransitionFactorisation, SingleFactorIdentityAbstraction) {
  MdpTables t;
  t.id = "one-factor";
  t.states = {"a", "b"};
  t.factors = {ActionFactor{"only", {"x", "y"}, {"a", "b"}, {0, 1}, {}}};
  t.transition = {0.3, 0.7, 1.0, 0.0, 0.5, 0.5, 0.0, 1.0};
  t.reward = {1.0, 2.0, 3.0, 4.0};
  FactoredMdp m{t};
  const auto report = check_transition_factorisation(m, 1e-12);
  EXPECT_TRUE(report.passed);
  const auto sub = derive_sub_transitions(m);
  EXPECT_EQ(sub.kernels[0], t.transition);
}

TEST(TransitionFactorisation, FlagsCoupledDynamics) {
  // two binary factors whose next state is the XOR of the two sub-actions
  MdpTables t;
  t.id = "xor";
  t.states = {"0,0", "0,1", "1,0", "1,1"};
  t.factors = {ActionFactor{"h", {"l", "r"}, {"0,?", "1,?"}, {0, 0, 1, 1}, {}},
               ActionFactor{"v", {"d", "u"}, {"?,0", "?,1"}, {0, 1, 0, 1}, {}}};
  t.transition.assign(4 * 4 * 4, 0.0);
  t.reward.assign(16, 0.0);
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < 4; ++a) {
      const std::size_t x = (a / 2) ^ (a % 2);
      t.transition[(s * 4 + a) * 4 + (2 * x + x)] = 1.0;
    }
  }
  FactoredMdp m{t};
  EXPECT_FALSE(check_transition_factorisation(m, 1e-12).passed);
}

TEST(Reconstruction, FactoredMdp2RoundTripsExactly) {
  const auto m = build_mdp2();
  const auto r = reconstruct_from_factors(*m);
  EXPECT_EQ(r.transition, m->tables().transition);
  EXPECT_EQ(r.reward, m->tables().reward);
}

TEST(Validation, RejectsBadTables) {
  MdpTables t;
  t.id = "bad";
  t.states = {"a"};
  t.factors = {ActionFactor{"f", {"x"}, {"a"}, {0}, {}}};
  t.transition = {0.5};
  t.reward = {0.0};
  EXPECT_THROW(FactoredMdp{t}, InputError);
  t.transition = {1.0};
  t.discount = 1.5;
  EXPECT_THROW(FactoredMdp{t}, InputError);
  t.discount = 1.0;
  t.factors[0].abstraction = {};
  EXPECT_THROW(FactoredMdp{t}, InputError);
}

TEST(RewardFactorisation, RequiresSubRewards) {
  MdpTables t;
  t.id = "plain";
  t.states = {"a"};
  t.factors = {ActionFactor{"f", {"x"}, {"a"}, {0}, {}}};
  t.transition = {1.0};
  t.reward = {0.0};
  EXPECT_THROW((void)check_reward_factorisation(FactoredMdp{t}), InputError);
}

TEST(JointActions, EncodeDecodeRoundTrip) {
  const auto m = build_mdp2();
  for (std::size_t a = 0; a < m->num_actions(); ++a) {
    const auto parts = m->decode(a);
    EXPECT_EQ(m->encode(parts), a);
    EXPECT_EQ(m->action_index(m->action_name(a)), a);
  }
  EXPECT_EQ(m->action_name(0), "left,down");
  EXPECT_EQ(m->action_name(3), "right,up");
}
