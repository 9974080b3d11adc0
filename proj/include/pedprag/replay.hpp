#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pedprag/bgi.hpp"
#include "pedprag/blockrel.hpp"
#include "pedprag/goal.hpp"
#include "pedprag/rng.hpp"

namespace pedprag {

/// One goal-conditioned step, tagged by source.
struct Transition {
  std::uint16_t state = 0;
  int goal = -1;
  int action = -1;
  double reward = 0.0;
  std::uint16_t next_state = 0;
  bool done = false;
  bool is_demo = false;
};

/// Mixed store of own experience and accepted demonstrations. Each source is
/// kept in its own ring; sampling draws a demonstration transition with
/// probability rho_demo whenever both pools are nonempty.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }

  void push(const Transition& t) {
    std::vector<Transition>& pool = t.is_demo ? demo_ : own_;
    std::size_t& head = t.is_demo ? demo_head_ : own_head_;
    if (pool.size() < capacity_) {
      pool.push_back(t);
    } else {
      pool[head] = t;
      head = (head + 1) % capacity_;
    }
  }

  std::size_t own_size() const { return own_.size(); }
  std::size_t demo_size() const { return demo_.size(); }
  bool empty() const { return own_.empty() && demo_.empty(); }

  Transition sample(double rho_demo, Rng& rng) const {
    if (empty()) throw std::invalid_argument("ReplayBuffer: sample from empty buffer");
    const std::vector<Transition>* pool;
    if (demo_.empty())
      pool = &own_;
    else if (own_.empty())
      pool = &demo_;
    else
      pool = rng.bernoulli(rho_demo) ? &demo_ : &own_;
    return (*pool)[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pool->size())))];
  }

  std::vector<Transition> sample_batch(int n, double rho_demo, Rng& rng) const {
    std::vector<Transition> batch;
    batch.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) batch.push_back(sample(rho_demo, rng));
    return batch;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> own_, demo_;
  std::size_t own_head_ = 0, demo_head_ = 0;
};

/// A completed episode with everything needed for buffer insertion.
struct Rollout {
  std::vector<std::uint16_t> states;  // length n+1, includes the final config
  std::vector<int> actions;           // length n
  std::vector<double> rewards;        // length n
  GoalId pursued;
};

/// Insert an accepted demonstration with the modified imitation reward:
/// terminal reward 1 + the maximum environment reward, zero elsewhere.
/// With original_sqil the terminal reward is 1 instead.
inline void sqil_insert(ReplayBuffer& buffer, const Demonstration<BlockRelEnv>& demo,
                        GoalId goal, const BlockRelEnv& env, double env_max_reward,
                        bool original_sqil = false) {
  double terminal_reward = original_sqil ? 1.0 : 1.0 + env_max_reward;
  const std::size_t n = demo.steps.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [state, action] = demo.steps[i];
    BlockRelState next = env.step(state, action);
    Transition t;
    t.state = state.config.bits();
    t.goal = goal.index;
    t.action = action;
    t.done = (i + 1 == n);
    t.reward = t.done ? terminal_reward : 0.0;
    t.next_state = next.config.bits();
    t.is_demo = true;
    buffer.push(t);
  }
}

/// Original transitions plus k_replay copies relabeled with the goal actually
/// achieved at the final step, rewards recomputed under that goal. Rollouts
/// ending in the no-relation configuration have no achieved goal and yield no
/// relabeled copies.
inline std::vector<Transition> hindsight_relabel(const Rollout& rollout, const BlockRelEnv& env,
                                                 int k_replay) {
  if (rollout.actions.empty() || rollout.states.size() != rollout.actions.size() + 1 ||
      rollout.rewards.size() != rollout.actions.size())
    throw std::invalid_argument("hindsight_relabel: malformed rollout");
  const std::size_t n = rollout.actions.size();
  std::vector<Transition> out;

  auto push_pass = [&](GoalId goal, bool recompute) {
    for (std::size_t i = 0; i < n; ++i) {
      Transition t;
      t.state = rollout.states[i];
      t.goal = goal.index;
      t.action = rollout.actions[i];
      t.next_state = rollout.states[i + 1];
      t.done = (i + 1 == n);
      t.reward = recompute
                     ? static_cast<double>(blockrel_reward(PredicateVector::from_bits(t.next_state),
                                                           env.goal_config(goal)))
                     : rollout.rewards[i];
      t.is_demo = false;
      out.push_back(t);
    }
  };

  push_pass(rollout.pursued, /*recompute=*/false);
  std::optional<GoalId> achieved =
      env.goal_of_config(PredicateVector::from_bits(rollout.states.back()));
  if (achieved) {
    for (int k = 0; k < k_replay; ++k) push_pass(*achieved, /*recompute=*/true);
  }
  return out;
}

}  // namespace pedprag
