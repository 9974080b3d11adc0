#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedprag/bgi.hpp"
#include "pedprag/blockrel.hpp"
#include "pedprag/goal.hpp"
#include "pedprag/rng.hpp"
#include "pedprag/rollout.hpp"

namespace pedprag {

/// Final evaluation record for one trained agent pair.
struct MetricReport {
  double gia = 0.0;
  double ogia = 0.0;
  double gra = 0.0;
  double gia_x_gra = 0.0;
  int n_test_demos_per_goal = 0;
  int n_test_rollouts_per_goal = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"gia", gia},
                          {"ogia", ogia},
                          {"gra", gra},
                          {"gia_x_gra", gia_x_gra},
                          {"n_test_demos_per_goal", n_test_demos_per_goal},
                          {"n_test_rollouts_per_goal", n_test_rollouts_per_goal},
                          {"seed", seed}};
  }
};

/// Goal Inference Accuracy: the inferring agent runs argmax inference over
/// `goals` on successful demonstrations generated by `demonstrator`, n per
/// goal. Goals whose demonstration generation exhausts the rejection cap are
/// excluded and reported through `excluded`.
template <class Env, class InferPolicy, class DemoPolicy>
double compute_gia(const Env& env, const InferPolicy& inferrer, const DemoPolicy& demonstrator,
                   std::span<const GoalId> goals, int n_per_goal, int attempt_cap, Rng& rng,
                   std::vector<GoalId>* excluded = nullptr) {
  if (n_per_goal <= 0) throw std::invalid_argument("compute_gia: need a positive test size");
  long correct = 0, total = 0;
  for (GoalId g : goals) {
    std::vector<Demonstration<Env>> demos;
    demos.reserve(static_cast<std::size_t>(n_per_goal));
    bool failed = false;
    for (int k = 0; k < n_per_goal; ++k) {
      std::optional<Demonstration<Env>> d = successful_demo(env, demonstrator, g, attempt_cap, rng);
      if (!d) {
        failed = true;
        break;
      }
      demos.push_back(std::move(*d));
    }
    if (failed) {
      if (excluded) excluded->push_back(g);
      continue;
    }
    for (const Demonstration<Env>& d : demos) {
      GoalId inferred = infer_goal(posterior(env, inferrer, d, goals), InferMode::kArgmax);
      correct += (inferred == g) ? 1 : 0;
      ++total;
    }
  }
  if (total == 0) throw std::runtime_error("compute_gia: no demonstrable goals");
  return static_cast<double>(correct) / static_cast<double>(total);
}

/// Own Goal Inference Accuracy: GIA with the agent inferring on its own
/// trajectories.
template <class Env, class Policy>
double compute_ogia(const Env& env, const Policy& policy, std::span<const GoalId> goals,
                    int n_per_goal, int attempt_cap, Rng& rng,
                    std::vector<GoalId>* excluded = nullptr) {
  return compute_gia(env, policy, policy, goals, n_per_goal, attempt_cap, rng, excluded);
}

/// Goal Reaching Accuracy: n rollouts conditioned on each goal; success when
/// the achieved set contains the goal.
template <class Env, class Policy>
double compute_gra(const Env& env, const Policy& policy, std::span<const GoalId> goals,
                   int n_per_goal, Rng& rng) {
  if (n_per_goal <= 0) throw std::invalid_argument("compute_gra: need a positive test size");
  long success = 0, total = 0;
  for (GoalId g : goals) {
    for (int k = 0; k < n_per_goal; ++k) {
      Demonstration<Env> demo = run_episode(env, policy, g, env.initial_state(rng), rng);
      success += contains_goal(demo.achieved, g) ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(success) / static_cast<double>(total);
}

/// A start state with two goals that can both be reached from it. Used to
/// probe whether a teacher's demonstrations distinguish the two.
struct AmbiguousSituation {
  PredicateVector initial;
  GoalId goal_a;
  GoalId goal_b;
};

namespace detail {

/// Reachability of a full-reward configuration within the episode horizon.
inline bool goal_achievable_from(const BlockRelEnv& env, PredicateVector start, GoalId goal) {
  std::set<std::uint16_t> seen{start.bits()};
  std::deque<std::pair<PredicateVector, int>> frontier{{start, 0}};
  PredicateVector target = env.goal_config(goal);
  while (!frontier.empty()) {
    auto [cfg, depth] = frontier.front();
    frontier.pop_front();
    if (blockrel_reward(cfg, target) == kBlockRelMaxReward) return true;
    if (depth >= env.horizon()) continue;
    for (int a = 0; a < BlockRelEnv::kNumActions; ++a) {
      PredicateVector next = BlockRelEnv::apply(cfg, a);
      if (seen.insert(next.bits()).second) frontier.emplace_back(next, depth + 1);
    }
  }
  return false;
}

struct SituationSpec {
  // Predicates in role space (roles 0, 1, 2 are remapped to blocks by
  // permutation). kind: 0 = close(x,y), 1 = above(x,y).
  struct Pred {
    int kind, x, y;
  };
  std::vector<Pred> initial, goal_a, goal_b;
};

inline PredicateVector build_config(const std::vector<SituationSpec::Pred>& preds,
                                    const std::array<int, 3>& perm) {
  PredicateVector v;
  for (const auto& p : preds) {
    int x = perm[static_cast<std::size_t>(p.x)], y = perm[static_cast<std::size_t>(p.y)];
    if (p.kind == 0) {
      v.set_close(x, y, true);
    } else {
      v.set_above(x, y, true);
      v.set_close(x, y, true);  // contact implies proximity
    }
  }
  // Close is transitive: a block close to two others makes all three close.
  for (int pass = 0; pass < 2; ++pass)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          if (a != b && b != c && a != c && v.close(a, b) && v.close(b, c)) v.set_close(a, c, true);
  return v;
}

}  // namespace detail

/// Translate the hand-written list of ambiguous situations (a start state and
/// two overlapping goals, in role space) into concrete block configurations,
/// expanded over all block permutations. Situations that do not survive the
/// surrogate dynamics (unreachable configurations or unachievable goals) are
/// dropped and reported through `dropped`.
inline std::vector<AmbiguousSituation> build_ambiguous_situations(
    const BlockRelEnv& env, std::vector<std::string>* dropped = nullptr) {
  using Spec = detail::SituationSpec;
  // Roles: 0 = the block initially close to / above another, 1 = its partner,
  // 2 = the free block. Derived from the qualitative list: pair starts that
  // stay ambiguous between "extend the pair" and "relate to the free block".
  const std::vector<Spec> base = {
      // close pair; goals: pair plus free block close  vs  free-pair proximity alone
      {{{0, 0, 1}}, {{0, 0, 1}, {0, 2, 0}}, {{0, 0, 2}}},
      // close pair; goals: pair plus free block stacked on one  vs  the stack alone
      {{{0, 0, 1}}, {{0, 0, 1}, {1, 2, 0}}, {{1, 2, 0}}},
      // stack; goals: stack plus free block close to base  vs  free block close to top
      {{{1, 0, 1}}, {{1, 0, 1}, {0, 2, 1}}, {{0, 2, 0}}},
      // stack; goals: stack plus free block close to base  vs  that proximity alone
      {{{1, 0, 1}}, {{1, 0, 1}, {0, 2, 1}}, {{0, 2, 1}}},
      // stack; goals: stack plus free block close to top  vs  that proximity alone
      {{{1, 0, 1}}, {{1, 0, 1}, {0, 2, 0}}, {{0, 2, 0}}},
      // close pair; goals: free block resting on both (pyramid)  vs  all close
      {{{0, 0, 1}}, {{0, 0, 1}, {1, 2, 0}, {1, 2, 1}}, {{0, 0, 1}, {0, 0, 2}, {0, 1, 2}}},
  };
  static constexpr std::array<std::array<int, 3>, 6> kPerms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

  std::set<std::tuple<std::uint16_t, std::uint16_t, std::uint16_t>> seen;
  std::vector<AmbiguousSituation> out;
  for (std::size_t si = 0; si < base.size(); ++si) {
    for (const auto& perm : kPerms) {
      PredicateVector initial = detail::build_config(base[si].initial, perm);
      PredicateVector ga = detail::build_config(base[si].goal_a, perm);
      PredicateVector gb = detail::build_config(base[si].goal_b, perm);
      auto drop = [&](const std::string& why) {
        if (dropped)
          dropped->push_back("situation " + std::to_string(si + 1) + " perm " +
                             std::to_string(&perm - kPerms.data()) + ": " + why);
      };
      if (!is_valid_config(initial) || !env.reachable(initial)) {
        drop("initial state not realizable");
        continue;
      }
      if (!is_valid_config(ga) || !env.reachable(ga) || ga.bits() == 0) {
        drop("first goal not realizable: " + ga.to_string());
        continue;
      }
      if (!is_valid_config(gb) || !env.reachable(gb) || gb.bits() == 0) {
        drop("second goal not realizable: " + gb.to_string());
        continue;
      }
      GoalId goal_a = *env.goal_of_config(ga);
      GoalId goal_b = *env.goal_of_config(gb);
      if (goal_a == goal_b) {
        drop("goals coincide");
        continue;
      }
      if (!detail::goal_achievable_from(env, initial, goal_a) ||
          !detail::goal_achievable_from(env, initial, goal_b)) {
        drop("goal not achievable from the start state");
        continue;
      }
      std::uint16_t lo = std::min(ga.bits(), gb.bits()), hi = std::max(ga.bits(), gb.bits());
      if (!seen.insert({initial.bits(), lo, hi}).second) continue;
      out.push_back(AmbiguousSituation{initial, goal_a, goal_b});
    }
  }
  std::sort(out.begin(), out.end(), [](const AmbiguousSituation& a, const AmbiguousSituation& b) {
    return std::tuple(a.initial.bits(), a.goal_a.index, a.goal_b.index) <
           std::tuple(b.initial.bits(), b.goal_a.index, b.goal_b.index);
  });
  return out;
}

/// Fraction of sampled situations where the teacher's two goal-specific
/// demonstrations achieve exactly the same goal set. Situations are sampled
/// with replacement; a sample whose demonstrations cannot be generated within
/// the cap is skipped and counted through `skipped`.
template <class Policy>
double ambiguity_score(const BlockRelEnv& env, const Policy& teacher,
                       std::span<const AmbiguousSituation> situations, int n_samples,
                       int attempt_cap, Rng& rng, int* skipped = nullptr) {
  if (situations.empty()) throw std::invalid_argument("ambiguity_score: no situations");
  if (n_samples <= 0) throw std::invalid_argument("ambiguity_score: need a positive sample count");
  long ambiguous = 0, counted = 0;
  for (int k = 0; k < n_samples; ++k) {
    const AmbiguousSituation& sit =
        situations[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(situations.size())))];
    BlockRelState start = env.start_from(sit.initial);
    auto da = successful_demo_from(env, teacher, sit.goal_a, start, attempt_cap, rng);
    auto db = successful_demo_from(env, teacher, sit.goal_b, start, attempt_cap, rng);
    if (!da || !db) {
      if (skipped) ++*skipped;
      continue;
    }
    ambiguous += (da->achieved == db->achieved) ? 1 : 0;
    ++counted;
  }
  if (counted == 0) throw std::runtime_error("ambiguity_score: no scorable samples");
  return static_cast<double>(ambiguous) / static_cast<double>(counted);
}

}  // namespace pedprag
