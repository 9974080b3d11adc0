#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "pedprag/bgi.hpp"
#include "pedprag/goal.hpp"
#include "pedprag/rng.hpp"

namespace pedprag {

inline bool contains_goal(std::span<const GoalId> goals, GoalId g) {
  return std::find(goals.begin(), goals.end(), g) != goals.end();
}

/// Play the policy conditioned on `goal` from `start` until the episode ends.
template <class Env, class Policy>
Demonstration<Env> run_episode(const Env& env, const Policy& policy, GoalId goal,
                               typename Env::State start, Rng& rng) {
  Demonstration<Env> demo;
  demo.intended = goal;
  typename Env::State s = start;
  std::vector<typename Env::Action> actions;
  while (!env.terminal(s)) {
    typename Env::Action a = policy.sample_action(s, goal, rng);
    demo.steps.emplace_back(s, a);
    actions.push_back(a);
    s = env.step(s, a);
  }
  demo.achieved = env.achieved_goals(std::span<const typename Env::Action>(actions), s);
  return demo;
}

template <class Env>
typename Env::State final_state(const Env& env, const Demonstration<Env>& demo) {
  return env.step(demo.steps.back().first, demo.steps.back().second);
}

/// Rejection-sample a demonstration that achieves `goal`, up to `attempt_cap`
/// episodes from fresh starts.
template <class Env, class Policy>
std::optional<Demonstration<Env>> successful_demo(const Env& env, const Policy& policy, GoalId goal,
                                                  int attempt_cap, Rng& rng) {
  for (int t = 0; t < attempt_cap; ++t) {
    Demonstration<Env> demo = run_episode(env, policy, goal, env.initial_state(rng), rng);
    if (contains_goal(demo.achieved, goal)) return demo;
  }
  return std::nullopt;
}

/// Same, from a fixed start state.
template <class Env, class Policy>
std::optional<Demonstration<Env>> successful_demo_from(const Env& env, const Policy& policy,
                                                       GoalId goal, typename Env::State start,
                                                       int attempt_cap, Rng& rng) {
  for (int t = 0; t < attempt_cap; ++t) {
    Demonstration<Env> demo = run_episode(env, policy, goal, start, rng);
    if (contains_goal(demo.achieved, goal)) return demo;
  }
  return std::nullopt;
}

/// Pre-generated demonstrations, demo_budget per goal, drawn from the frozen
/// teacher. Slots whose rejection cap runs out are refilled from earlier
/// successes; goals with no success at all are flagged and left empty.
template <class Env>
struct DemoPool {
  std::vector<std::vector<Demonstration<Env>>> per_goal;
  std::vector<GoalId> failed;
  int refilled_slots = 0;

  bool goal_available(GoalId g) const {
    return g.index >= 0 && g.index < static_cast<int>(per_goal.size()) &&
           !per_goal[static_cast<std::size_t>(g.index)].empty();
  }
};

template <class Env, class Policy>
DemoPool<Env> generate_demo_pool(const Env& env, const Policy& teacher,
                                 std::span<const GoalId> goals, int per_goal, int attempt_cap,
                                 Rng& rng) {
  DemoPool<Env> pool;
  int max_index = 0;
  for (GoalId g : goals) max_index = std::max(max_index, g.index);
  pool.per_goal.resize(static_cast<std::size_t>(max_index) + 1);
  for (GoalId g : goals) {
    auto& slot = pool.per_goal[static_cast<std::size_t>(g.index)];
    for (int k = 0; k < per_goal; ++k) {
      std::optional<Demonstration<Env>> demo = successful_demo(env, teacher, g, attempt_cap, rng);
      if (demo) {
        slot.push_back(std::move(*demo));
      } else if (!slot.empty()) {
        slot.push_back(slot[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(slot.size())))]);
        ++pool.refilled_slots;
      }
    }
    if (per_goal > 0 && slot.empty()) pool.failed.push_back(g);
  }
  return pool;
}

}  // namespace pedprag
