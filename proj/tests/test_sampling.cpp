#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "factope/errors.hpp"
#include "factope/mdp.hpp"
#include "factope/policy.hpp"
#include "factope/sampling.hpp"

using namespace factope;

TEST(GenerateDataset, Deterministic) {
  const auto m = build_mdp2();
  const auto pair = builtin_policy_pair(m, "2.56");
  const auto a = generate_dataset(pair.behaviour, 50, 20, 99);
  const auto b = generate_dataset(pair.behaviour, 50, 20, 99);
  EXPECT_TRUE(a == b);
  const auto c = generate_dataset(pair.behaviour, 50, 20, 100);
  EXPECT_FALSE(a == c);
}

TEST(GenerateDataset, UniformFrequenciesOnMdp1) {
  const auto m = build_mdp1();
  const auto data = generate_dataset(uniform_policy(m), 100000, 1, 2024);
  std::array<std::size_t, 4> counts{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    ++counts[data.trajectory(i).actions[0]];
  }
  for (auto c : counts) {
    EXPECT_NEAR(static_cast<double>(c) / 100000.0, 0.25, 0.006);
  }
}

TEST(GenerateDataset, TrajectoriesRespectDynamics) {
  const auto m = build_mdp2();
  const auto pair = builtin_policy_pair(m, "1.44");
  const auto data = generate_dataset(pair.behaviour, 200, 15, 5);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto traj = data.trajectory(i);
    ASSERT_EQ(traj.states.size(), 16u);
    EXPECT_EQ(traj.states[0], m->initial_state());
    for (std::size_t t = 0; t < traj.horizon(); ++t) {
      EXPECT_EQ(traj.rewards[t], m->reward(traj.states[t], traj.actions[t]));
      EXPECT_GT(m->transition(traj.states[t], traj.actions[t], traj.states[t + 1]), 0.0);
      // on this grid the next state is fixed by the action alone
      EXPECT_EQ(traj.states[t + 1], 2 * m->sub_action(traj.actions[t], 0) + m->sub_action(traj.actions[t], 1));
    }
  }
}

TEST(GenerateDataset, RightUpLeadsToCorner) {
  const auto m = build_mdp2();
  const auto pair = builtin_policy_pair(m, "361.0");
  const auto data = generate_dataset(pair.evaluation, 500, 1, 8);
  const auto ur = m->action_index("right,up");
  std::size_t seen = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto traj = data.trajectory(i);
    if (traj.actions[0] == ur) {
      ++seen;
      EXPECT_EQ(traj.states[1], m->state_index("1,1"));
    }
  }
  EXPECT_GT(seen, 0u);
}

TEST(GenerateDataset, RejectsEmpty) {
  const auto m = build_mdp1();
  EXPECT_THROW((void)generate_dataset(uniform_policy(m), 0, 1, 1), InputError);
  EXPECT_THROW((void)generate_dataset(uniform_policy(m), 1, 0, 1), InputError);
}

TEST(Subset, BlocksAndBounds) {
  const auto m = build_mdp1();
  const auto data = generate_dataset(uniform_policy(m), 1000, 1, 3);
  const auto first = subset(data, 100, 1, 0);
  EXPECT_EQ(first.first(), 0u);
  EXPECT_EQ(first.size(), 100u);
  const auto last = subset(data, 100, 1, 9);
  EXPECT_EQ(last.first(), 900u);
  EXPECT_EQ(last.trajectory(99).actions.data(), data.trajectory(999).actions.data());
  EXPECT_THROW((void)subset(data, 100, 1, 10), InputError);
  EXPECT_THROW((void)subset(data, 100, 2, 0), InputError);
}

TEST(Subset, LazyBlockIsBitIdenticalToSubsetOfMaster) {
  const auto m = build_mdp2();
  const auto pair = builtin_policy_pair(m, "2.56");
  const std::size_t n = 40;
  const std::size_t horizon = 30;
  const auto master = generate_dataset(pair.behaviour, n * 5, horizon, 777);
  const Sampler sampler{pair.behaviour};
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t t : {1, 7, 30}) {
      const auto view = subset(master, n, t, r);
      const auto lazy = generate_dataset(sampler, n, t, 777, r * n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto a = view.trajectory(i);
        const auto b = lazy.trajectory(i);
        ASSERT_TRUE(std::equal(a.states.begin(), a.states.end(), b.states.begin(), b.states.end()));
        ASSERT_TRUE(std::equal(a.actions.begin(), a.actions.end(), b.actions.begin(), b.actions.end()));
        ASSERT_TRUE(std::equal(a.rewards.begin(), a.rewards.end(), b.rewards.begin(), b.rewards.end()));
      }
    }
  }
}

TEST(Subset, ReplicatesAreDisjoint) {
  const auto m = build_mdp1();
  const auto data = generate_dataset(uniform_policy(m), 1000, 1, 3);
  for (std::size_t r = 0; r + 1 < 10; ++r) {
    const auto a = subset(data, 100, 1, r);
    const auto b = subset(data, 100, 1, r + 1);
    EXPECT_EQ(a.first() + a.size(), b.first());
  }
}

TEST(AbstractTrajectory, Mdp2FirstFactor) {
  const auto m = build_mdp2();
  const std::vector<std::uint32_t> states{0, 3};
  const std::vector<std::uint32_t> actions{static_cast<std::uint32_t>(m->action_index("right,up"))};
  const std::vector<double> rewards{2.0};
  const TrajectoryView traj{states, actions, rewards};
  const auto z = abstract_trajectory(*m, 0, traj);
  ASSERT_EQ(z.abstract_states.size(), 2u);
  EXPECT_EQ(m->factor(0).abstract_states[z.abstract_states[0]], "0,?");
  EXPECT_EQ(m->factor(0).abstract_states[z.abstract_states[1]], "1,?");
  EXPECT_EQ(m->factor(0).sub_actions[z.sub_actions[0]], "right");
  EXPECT_EQ(z.sub_rewards[0], 1.0);
  EXPECT_THROW((void)abstract_trajectory(*m, 2, traj), InputError);
}

TEST(AbstractTrajectory, Mdp1SecondFactorCarriesAlpha) {
  const auto m = build_mdp1({0.7, 0.0});
  const std::vector<std::uint32_t> states{0, 1};
  const std::vector<std::uint32_t> actions{static_cast<std::uint32_t>(m->action_index("right,up"))};
  const std::vector<double> rewards{2.0};
  const auto z = abstract_trajectory(*m, 1, TrajectoryView{states, actions, rewards});
  EXPECT_EQ(z.sub_rewards[0], 0.7);
}

TEST(AbstractTrajectory, SubRewardsSumToReward) {
  const auto m = build_mdp2();
  const auto data = generate_dataset(builtin_policy_pair(m, "1.44").behaviour, 100, 12, 11);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto traj = data.trajectory(i);
    const auto z0 = abstract_trajectory(*m, 0, traj);
    const auto z1 = abstract_trajectory(*m, 1, traj);
    for (std::size_t t = 0; t < traj.horizon(); ++t) {
      EXPECT_EQ(z0.sub_rewards[t] + z1.sub_rewards[t], traj.rewards[t]);
    }
  }
}

TEST(DiscountedReturn, Basic) {
  const std::vector<std::uint32_t> states{0, 0, 0, 0};
  const std::vector<std::uint32_t> actions{0, 0, 0};
  const std::vector<double> rewards{1.0, 2.0, 4.0};
  const TrajectoryView traj{states, actions, rewards};
  EXPECT_DOUBLE_EQ(discounted_return(traj, 0.5), 1.0 + 1.0 + 1.0);
  EXPECT_EQ(discounted_return(traj, 0.0), 1.0);
}
