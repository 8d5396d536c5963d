#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "factope/errors.hpp"
#include "factope/mdp.hpp"
#include "factope/numeric.hpp"
#include "factope/policy.hpp"

/**
 * \file
 * \brief Seeded trajectory generation, datasets and replicate views.
 *
 * Trajectory i of a dataset with seed k is rolled out from its own stream seeded with
 * derive_seed(k, i). Draws are consumed step by step, so the first t steps of a trajectory do
 * not depend on how long it is. Both properties let a replicate block be generated directly
 * instead of being cut out of a materialised master dataset.
 */

namespace factope {

/// Non-owning view of one trajectory: states s_0..s_T, joint actions a_0..a_{T-1}, rewards r_0..r_{T-1}.
struct TrajectoryView {
  std::span<const std::uint32_t> states;
  std::span<const std::uint32_t> actions;
  std::span<const double> rewards;

  [[nodiscard]] std::size_t horizon() const noexcept { return actions.size(); }
};

/// Owning trajectory.
struct Trajectory {
  std::vector<std::size_t> states;
  std::vector<std::size_t> actions;
  std::vector<double> rewards;

  [[nodiscard]] static Trajectory from(const TrajectoryView& v) {
    return {{v.states.begin(), v.states.end()}, {v.actions.begin(), v.actions.end()}, {v.rewards.begin(), v.rewards.end()}};
  }

  [[nodiscard]] std::size_t horizon() const noexcept { return actions.size(); }
};

/// Discounted return sum_t gamma^t r_t.
[[nodiscard]] inline double discounted_return(const TrajectoryView& traj, double gamma) noexcept {
  CompensatedSum acc;
  double discount = 1.0;
  for (double r : traj.rewards) {
    acc.add(discount * r);
    discount *= gamma;
  }
  return acc.value();
}

struct DatasetMetadata {
  std::string mdp_id;
  std::string policy_id;
  std::uint64_t seed = 0;
  /// Global index of the first stored trajectory within its seed's stream.
  std::uint64_t first_index = 0;

  friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

/// N fixed-horizon trajectories stored as flat arrays.
class Dataset {
 public:
  Dataset(DatasetMetadata meta, std::size_t n, std::size_t horizon)
      : meta_{std::move(meta)},
        n_{n},
        horizon_{horizon},
        states_(n * (horizon + 1)),
        actions_(n * horizon),
        rewards_(n * horizon) {}

  [[nodiscard]] const DatasetMetadata& metadata() const noexcept { return meta_; }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }

  [[nodiscard]] TrajectoryView trajectory(std::size_t i) const noexcept {
    return {{states_.data() + i * (horizon_ + 1), horizon_ + 1},
            {actions_.data() + i * horizon_, horizon_},
            {rewards_.data() + i * horizon_, horizon_}};
  }

  /// Mutable spans for filling trajectory i.
  [[nodiscard]] std::span<std::uint32_t> states_of(std::size_t i) noexcept {
    return {states_.data() + i * (horizon_ + 1), horizon_ + 1};
  }
  [[nodiscard]] std::span<std::uint32_t> actions_of(std::size_t i) noexcept {
    return {actions_.data() + i * horizon_, horizon_};
  }
  [[nodiscard]] std::span<double> rewards_of(std::size_t i) noexcept { return {rewards_.data() + i * horizon_, horizon_}; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  DatasetMetadata meta_;
  std::size_t n_;
  std::size_t horizon_;
  std::vector<std::uint32_t> states_;
  std::vector<std::uint32_t> actions_;
  std::vector<double> rewards_;
};

/// Read-only window onto a dataset: a contiguous run of trajectories, each truncated to `horizon` steps.
class DatasetView {
 public:
  DatasetView(const Dataset& data) noexcept  // NOLINT(google-explicit-constructor)
      : data_{&data}, first_{0}, count_{data.size()}, horizon_{data.horizon()} {}

  DatasetView(const Dataset& data, std::size_t first, std::size_t count, std::size_t horizon)
      : data_{&data}, first_{first}, count_{count}, horizon_{horizon} {
    if (first + count > data.size() || horizon > data.horizon()) {
      throw InputError("dataset view out of range");
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return count_; }
  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t first() const noexcept { return first_; }
  [[nodiscard]] const Dataset& base() const noexcept { return *data_; }

  [[nodiscard]] TrajectoryView trajectory(std::size_t i) const noexcept {
    const auto full = data_->trajectory(first_ + i);
    return {full.states.first(horizon_ + 1), full.actions.first(horizon_), full.rewards.first(horizon_)};
  }

 private:
  const Dataset* data_;
  std::size_t first_;
  std::size_t count_;
  std::size_t horizon_;
};

/// Rolls out trajectories of a fixed policy. Holds cumulative tables; cheap to share read-only.
class Sampler {
 public:
  explicit Sampler(const FactoredPolicy& policy) : mdp_{policy.mdp()} {
    const std::size_t S = mdp_->num_states();
    const std::size_t A = mdp_->num_actions();
    if (S > std::numeric_limits<std::uint32_t>::max() || A > std::numeric_limits<std::uint32_t>::max()) {
      throw InputError("MDP too large for compact trajectory storage");
    }
    policy_cdf_.resize(S * A);
    for (std::size_t s = 0; s < S; ++s) {
      const auto row = policy.joint_row(s);
      std::partial_sum(row.begin(), row.end(), policy_cdf_.begin() + static_cast<std::ptrdiff_t>(s * A));
    }
    transition_cdf_.resize(S * A * S);
    deterministic_next_.assign(S * A, kStochastic);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const auto row = mdp_->transition_row(s, a);
        std::partial_sum(row.begin(), row.end(),
                         transition_cdf_.begin() + static_cast<std::ptrdiff_t>((s * A + a) * S));
        const auto support = std::count_if(row.begin(), row.end(), [](double p) { return p > 0.0; });
        if (support == 1) {
          deterministic_next_[s * A + a] =
              static_cast<std::size_t>(std::find_if(row.begin(), row.end(), [](double p) { return p > 0.0; }) - row.begin());
        }
      }
    }
  }

  [[nodiscard]] const FactoredMdp& mdp() const noexcept { return *mdp_; }

  /// Fills one trajectory of length actions.size() from the stream seeded with `stream_seed`.
  void rollout(std::uint64_t stream_seed, std::span<std::uint32_t> states, std::span<std::uint32_t> actions,
               std::span<double> rewards) const {
    const std::size_t S = mdp_->num_states();
    const std::size_t A = mdp_->num_actions();
    SplitMix64 engine{stream_seed};
    std::size_t s = mdp_->initial_state();
    states[0] = static_cast<std::uint32_t>(s);
    for (std::size_t t = 0; t < actions.size(); ++t) {
      const std::size_t a = draw({policy_cdf_.data() + s * A, A}, uniform01(engine));
      actions[t] = static_cast<std::uint32_t>(a);
      rewards[t] = mdp_->reward(s, a);
      std::size_t next = deterministic_next_[s * A + a];
      if (next == kStochastic) {
        next = draw({transition_cdf_.data() + (s * A + a) * S, S}, uniform01(engine));
      }
      states[t + 1] = static_cast<std::uint32_t>(next);
      s = next;
    }
  }

 private:
  static constexpr std::size_t kStochastic = std::numeric_limits<std::size_t>::max();

  // Inverse CDF; falls back to the last positive-mass index when round-off leaves cdf.back() < u.
  static std::size_t draw(std::span<const double> cdf, double u) noexcept {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it != cdf.end()) {
      return static_cast<std::size_t>(it - cdf.begin());
    }
    std::size_t i = cdf.size() - 1;
    while (i > 0 && cdf[i] == cdf[i - 1]) {
      --i;
    }
    return i;
  }

  MdpPtr mdp_;
  std::vector<double> policy_cdf_;
  std::vector<double> transition_cdf_;
  std::vector<std::size_t> deterministic_next_;
};

/// Generates trajectories [first_index, first_index + n) of the stream identified by `seed`.
[[nodiscard]] inline Dataset generate_dataset(const Sampler& sampler, std::size_t n, std::size_t horizon,
                                              std::uint64_t seed, std::uint64_t first_index = 0,
                                              std::string policy_id = {}) {
  if (n == 0 || horizon == 0) {
    throw InputError("dataset needs n >= 1 and t >= 1");
  }
  Dataset out{{sampler.mdp().id(), std::move(policy_id), seed, first_index}, n, horizon};
  for (std::size_t i = 0; i < n; ++i) {
    sampler.rollout(derive_seed(seed, first_index + i), out.states_of(i), out.actions_of(i), out.rewards_of(i));
  }
  return out;
}

[[nodiscard]] inline Dataset generate_dataset(const FactoredPolicy& policy, std::size_t n, std::size_t horizon,
                                              std::uint64_t seed, std::uint64_t first_index = 0) {
  return generate_dataset(Sampler{policy}, n, horizon, seed, first_index, policy.name());
}

/// Replicate block `replicate` of size n, truncated to t steps: trajectories [replicate*n, (replicate+1)*n).
[[nodiscard]] inline DatasetView subset(const Dataset& data, std::size_t n, std::size_t t, std::size_t replicate) {
  if (n == 0 || t == 0) {
    throw InputError("subset needs n >= 1 and t >= 1");
  }
  if (n * (replicate + 1) > data.size()) {
    throw InputError("replicate " + std::to_string(replicate) + " of size " + std::to_string(n) +
                     " exceeds the dataset's " + std::to_string(data.size()) + " trajectories");
  }
  if (t > data.horizon()) {
    throw InputError("requested horizon " + std::to_string(t) + " exceeds the dataset horizon " +
                     std::to_string(data.horizon()));
  }
  return DatasetView{data, replicate * n, n, t};
}

/// A trajectory seen through one factor: z^d_0..z^d_T, a^d_0..a^d_{T-1}, r^d_0..r^d_{T-1}.
struct AbstractedTrajectory {
  std::vector<std::size_t> abstract_states;
  std::vector<std::size_t> sub_actions;
  /// Empty when the MDP declares no sub-rewards.
  std::vector<double> sub_rewards;
};

[[nodiscard]] inline AbstractedTrajectory abstract_trajectory(const FactoredMdp& mdp, std::size_t d,
                                                              const TrajectoryView& traj) {
  mdp.check_factor(d);
  AbstractedTrajectory out;
  out.abstract_states.reserve(traj.states.size());
  for (auto s : traj.states) {
    out.abstract_states.push_back(mdp.abstract_state(d, s));
  }
  for (std::size_t t = 0; t < traj.horizon(); ++t) {
    const std::size_t k = mdp.sub_action(traj.actions[t], d);
    out.sub_actions.push_back(k);
    if (mdp.has_sub_rewards()) {
      out.sub_rewards.push_back(mdp.sub_reward(d, out.abstract_states[t], k));
    }
  }
  return out;
}

}  // namespace factope
