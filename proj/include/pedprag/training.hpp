#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedprag/bgi.hpp"
#include "pedprag/blockrel.hpp"
#include "pedprag/dtb.hpp"
#include "pedprag/goal.hpp"
#include "pedprag/metrics.hpp"
#include "pedprag/policy.hpp"
#include "pedprag/replay.hpp"
#include "pedprag/rng.hpp"
#include "pedprag/rollout.hpp"

namespace pedprag {

/// Training hyperparameters shared by both environments. Members not used by
/// an environment (e.g. the replay settings for the two-pick task, which has
/// no buffer) are ignored there.
struct Hyper {
  double tau = 0.5;       // Boltzmann temperature
  double alpha = 0.1;     // multiplicative update rate (two-pick policy)
  double lr = 0.1;        // temporal-difference step size
  double gamma = 0.98;    // discount
  double bonus = 1.0;     // pedagogical / pragmatic reward
  int k_replay = 4;       // hindsight copies per trajectory
  double rho_demo = 0.5;  // demonstration share at batch sampling
  double eps_p = 1e-4;    // probability floor (two-pick policy)
  int horizon = 5;        // block environment episode length
  int batch_size = 64;
  int buffer_capacity = 20000;
  double bc_beta = 0.1;        // behaviour-cloning mix weight (B2)
  int demo_attempt_cap = 200;  // rejection cap per demonstration
};

struct AgentRole {
  enum class Kind { kNaiveTeacher, kPedagogicalTeacher, kLiteralLearner, kPragmaticLearner };

  Kind kind = Kind::kNaiveTeacher;
  double bonus = 0.0;

  static AgentRole naive_teacher() { return {Kind::kNaiveTeacher, 0.0}; }
  static AgentRole pedagogical_teacher(double bonus = 1.0) { return {Kind::kPedagogicalTeacher, bonus}; }
  static AgentRole literal_learner() { return {Kind::kLiteralLearner, 0.0}; }
  static AgentRole pragmatic_learner(double bonus = 1.0) { return {Kind::kPragmaticLearner, bonus}; }

  bool is_teacher() const { return kind == Kind::kNaiveTeacher || kind == Kind::kPedagogicalTeacher; }
  bool inference_rewarded() const {
    return kind == Kind::kPedagogicalTeacher || kind == Kind::kPragmaticLearner;
  }
};

/// Learning-from-demonstrations variants: the full method, demonstrations
/// only (B1), added behaviour cloning (B2), and the original imitation reward
/// scheme (B3).
enum class Variant { kOurs, kB1, kB2, kB3 };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kOurs: return "ours";
    case Variant::kB1: return "B1";
    case Variant::kB2: return "B2";
    case Variant::kB3: return "B3";
  }
  return "?";
}

struct EvalSpec {
  int eval_every = 100;      // curve cadence in epochs; 0 disables curves
  int n_curve_demos = 10;    // per goal, for curve GIA / OGIA samples
  int n_curve_rollouts = 10; // per goal, for curve GRA samples
};

struct CurveRow {
  int epoch = 0;
  double gia = 0.0;
  double ogia = 0.0;
  double gra = 0.0;
};

template <class PolicyT>
struct TrainOutput {
  PolicyT policy;
  std::vector<CurveRow> curve;
  std::vector<GoalId> discovered;
  long accepted_demos = 0;  // demonstrations that passed the inference gate
  long offered_demos = 0;
};

namespace detail {

// Derived stream tags; every consumer forks its own stream so evaluation
// cadence cannot perturb the training draws.
inline constexpr std::uint64_t kStreamPhase1 = 0x9111;
inline constexpr std::uint64_t kStreamPhase2 = 0x9222;
inline constexpr std::uint64_t kStreamPool = 0x9333;
inline constexpr std::uint64_t kStreamCurve = 0x9444;

template <class Env, class Policy>
CurveRow curve_sample(const Env& env, const Policy& agent, const Policy* demonstrator, int epoch,
                      std::span<const GoalId> goals, const EvalSpec& eval, const Hyper& hp,
                      Rng curve_base) {
  Rng rng = curve_base.fork(static_cast<std::uint64_t>(epoch));
  CurveRow row;
  row.epoch = epoch;
  row.ogia = compute_gia(env, agent, agent, goals, eval.n_curve_demos, hp.demo_attempt_cap, rng);
  row.gia = demonstrator ? compute_gia(env, agent, *demonstrator, goals, eval.n_curve_demos,
                                       hp.demo_attempt_cap, rng)
                         : row.ogia;
  row.gra = compute_gra(env, agent, goals, eval.n_curve_rollouts, rng);
  return row;
}

inline std::vector<Ball> dtb_actions(const Demonstration<DtbEnv>& demo) {
  std::vector<Ball> actions;
  actions.reserve(demo.steps.size());
  for (const auto& [state, action] : demo.steps) actions.push_back(action);
  return actions;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Draw-two-balls: direct multiplicative policy updates, no replay buffer.
// --------------------------------------------------------------------------

/// Phase 1, two-pick environment: pre-train a teacher over goals it has
/// discovered; the pedagogical teacher doubles the success update whenever it
/// can infer its own goal back from the trajectory.
inline TrainOutput<DtbPolicy> phase1_pretrain(const DtbEnv& env, AgentRole role, const Hyper& hp,
                                              int epochs, const EvalSpec& eval,
                                              std::uint64_t seed) {
  if (!role.is_teacher()) throw std::invalid_argument("phase1_pretrain: role must be a teacher");
  Rng root(seed);
  Rng rng = root.fork(detail::kStreamPhase1);
  Rng curve_base = root.fork(detail::kStreamCurve);

  TrainOutput<DtbPolicy> out{DtbPolicy(hp.eps_p), {}, {}, 0, 0};
  GoalSetTracker goals(env.num_goals(), GoalId{0});
  const std::vector<GoalId> all_goals = env.goal_space();

  for (int epoch = 0; epoch < epochs; ++epoch) {
    GoalId g = goals.sample(rng);
    Demonstration<DtbEnv> traj = run_episode(env, out.policy, g, env.initial_state(), rng);
    bool success = contains_goal(traj.achieved, g);
    bool bonus = role.inference_rewarded() && role.bonus > 0.0 && success &&
                 own_goal_inference_correct(env, out.policy, traj, g, goals.discovered());
    std::vector<Ball> actions = detail::dtb_actions(traj);
    out.policy.update(actions, g, success, bonus, hp.alpha);
    for (GoalId a : traj.achieved) goals.add(a);
    if (eval.eval_every > 0 && ((epoch + 1) % eval.eval_every == 0 || epoch + 1 == epochs))
      out.curve.push_back(detail::curve_sample(env, out.policy, static_cast<const DtbPolicy*>(nullptr),
                                               epoch + 1, all_goals, eval, hp, curve_base));
  }
  out.discovered = goals.discovered();
  return out;
}

/// Phase 2, two-pick environment. Each epoch: the teacher demonstrates a goal
/// sampled from the learner's discovered set; the learner infers the goal and
/// on correct inference imitates the demonstration; it then pursues its
/// inferred goal and applies the success/failure update, doubled for a
/// pragmatic learner that can re-infer its own goal.
inline TrainOutput<DtbPolicy> phase2_train(const DtbEnv& env, const DtbPolicy& teacher,
                                           AgentRole role, Variant variant, int demo_budget,
                                           const Hyper& hp, int epochs, const EvalSpec& eval,
                                           std::uint64_t seed) {
  if (role.is_teacher()) throw std::invalid_argument("phase2_train: role must be a learner");
  if (demo_budget < 0) throw std::invalid_argument("phase2_train: demo_budget must be >= 0");
  Rng root(seed);
  Rng rng = root.fork(detail::kStreamPhase2);
  Rng pool_rng = root.fork(detail::kStreamPool);
  Rng curve_base = root.fork(detail::kStreamCurve + 1);

  TrainOutput<DtbPolicy> out{DtbPolicy(hp.eps_p), {}, {}, 0, 0};
  GoalSetTracker goals(env.num_goals(), GoalId{0});
  const std::vector<GoalId> all_goals = env.goal_space();
  DemoPool<DtbEnv> pool;
  if (demo_budget > 0)
    pool = generate_demo_pool(env, teacher, all_goals, demo_budget, hp.demo_attempt_cap, pool_rng);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    GoalId pursued = goals.sample(rng);
    if (demo_budget > 0 && pool.goal_available(pursued)) {
      const auto& slot = pool.per_goal[static_cast<std::size_t>(pursued.index)];
      const Demonstration<DtbEnv>& demo =
          slot[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(slot.size())))];
      ++out.offered_demos;
      GoalId inferred =
          infer_goal(posterior(env, out.policy, demo, goals.discovered()), InferMode::kArgmax);
      if (inferred == pursued) {
        // Teacher feedback: only a correctly inferred demonstration is used.
        ++out.accepted_demos;
        std::vector<Ball> demo_actions = detail::dtb_actions(demo);
        out.policy.update(demo_actions, pursued, /*success=*/true, /*bonus=*/false, hp.alpha);
        if (variant == Variant::kB2)
          for (const auto& [state, action] : demo.steps)
            out.policy.mix_toward(state, pursued, action, hp.bc_beta);
      }
      pursued = inferred;  // the learner pursues what it believes was shown
    }

    Demonstration<DtbEnv> traj = run_episode(env, out.policy, pursued, env.initial_state(), rng);
    bool success = contains_goal(traj.achieved, pursued);
    bool bonus = role.inference_rewarded() && role.bonus > 0.0 && success &&
                 own_goal_inference_correct(env, out.policy, traj, pursued, goals.discovered());
    if (variant != Variant::kB1 && variant != Variant::kB3) {
      // B1 never uses own experience; B3 zeroes its reward, which has no
      // effect under the multiplicative rule.
      std::vector<Ball> actions = detail::dtb_actions(traj);
      out.policy.update(actions, pursued, success, bonus, hp.alpha);
    }
    for (GoalId a : traj.achieved) goals.add(a);
    if (eval.eval_every > 0 && ((epoch + 1) % eval.eval_every == 0 || epoch + 1 == epochs))
      out.curve.push_back(
          detail::curve_sample(env, out.policy, &teacher, epoch + 1, all_goals, eval, hp, curve_base));
  }
  out.discovered = goals.discovered();
  return out;
}

// --------------------------------------------------------------------------
// Block environment: tabular soft-greedy Q-learning with a replay buffer,
// imitation rewards on accepted demonstrations and hindsight relabeling.
// --------------------------------------------------------------------------

/// Apply a batch of one-step backups in order.
inline void q_update(BoltzmannQPolicy& policy, std::span<const Transition> batch, double gamma,
                     double lr) {
  for (const Transition& t : batch)
    policy.td_update(t.state, t.goal, t.action, t.reward, t.next_state, t.done, gamma, lr);
}

namespace detail {

struct BlockRolloutResult {
  Rollout rollout;
  Demonstration<BlockRelEnv> demo;
};

template <class Policy>
BlockRolloutResult run_block_rollout(const BlockRelEnv& env, const Policy& policy, GoalId goal,
                                     BlockRelState start, Rng& rng) {
  BlockRolloutResult r;
  r.rollout.pursued = goal;
  r.demo.intended = goal;
  BlockRelState s = start;
  r.rollout.states.push_back(s.config.bits());
  while (!env.terminal(s)) {
    int a = policy.sample_action(s, goal, rng);
    r.demo.steps.emplace_back(s, a);
    r.rollout.actions.push_back(a);
    s = env.step(s, a);
    r.rollout.states.push_back(s.config.bits());
    r.rollout.rewards.push_back(static_cast<double>(env.reward(s.config, goal)));
  }
  r.demo.achieved = env.achieved_goals(s.config);
  return r;
}

}  // namespace detail

/// Phase 1, block environment: goal-conditioned Q-learning over discovered
/// goals with hindsight relabeling; the pedagogical teacher adds its bonus to
/// the terminal reward of trajectories whose goal it can re-infer.
inline TrainOutput<BoltzmannQPolicy> phase1_pretrain(const BlockRelEnv& env, AgentRole role,
                                                     const Hyper& hp, int epochs,
                                                     const EvalSpec& eval, std::uint64_t seed) {
  if (!role.is_teacher()) throw std::invalid_argument("phase1_pretrain: role must be a teacher");
  Rng root(seed);
  Rng rng = root.fork(detail::kStreamPhase1);
  Rng curve_base = root.fork(detail::kStreamCurve);

  TrainOutput<BoltzmannQPolicy> out{BoltzmannQPolicy(env.num_actions(), hp.tau), {}, {}, 0, 0};
  GoalSetTracker goals(env.num_goals(), GoalId{0});
  ReplayBuffer buffer(static_cast<std::size_t>(hp.buffer_capacity));
  const std::vector<GoalId> all_goals = env.goal_space();

  for (int epoch = 0; epoch < epochs; ++epoch) {
    GoalId g = goals.sample(rng);
    detail::BlockRolloutResult r =
        detail::run_block_rollout(env, out.policy, g, env.initial_state(rng), rng);
    bool success = contains_goal(r.demo.achieved, g);
    if (role.inference_rewarded() && role.bonus > 0.0 && success &&
        own_goal_inference_correct(env, out.policy, r.demo, g, goals.discovered()))
      r.rollout.rewards.back() += role.bonus;
    for (const Transition& t : hindsight_relabel(r.rollout, env, hp.k_replay)) buffer.push(t);
    std::optional<GoalId> achieved = env.goal_of_config(PredicateVector::from_bits(r.rollout.states.back()));
    if (achieved) goals.add(*achieved);
    std::vector<Transition> batch = buffer.sample_batch(hp.batch_size, hp.rho_demo, rng);
    q_update(out.policy, batch, hp.gamma, hp.lr);
    if (eval.eval_every > 0 && ((epoch + 1) % eval.eval_every == 0 || epoch + 1 == epochs))
      out.curve.push_back(detail::curve_sample(env, out.policy,
                                               static_cast<const BoltzmannQPolicy*>(nullptr),
                                               epoch + 1, all_goals, eval, hp, curve_base));
  }
  out.discovered = goals.discovered();
  return out;
}

/// Phase 2, block environment. Each epoch: a demonstration for a goal drawn
/// from the learner's discovered set is offered; if the learner's inference
/// matches, the demonstration enters the buffer with the imitation reward.
/// The learner then pursues its inferred goal, earns the pragmatic bonus when
/// it both reaches the goal and can re-infer it, and trains on a mixed batch.
inline TrainOutput<BoltzmannQPolicy> phase2_train(const BlockRelEnv& env,
                                                  const BoltzmannQPolicy& teacher, AgentRole role,
                                                  Variant variant, int demo_budget, const Hyper& hp,
                                                  int epochs, const EvalSpec& eval,
                                                  std::uint64_t seed) {
  if (role.is_teacher()) throw std::invalid_argument("phase2_train: role must be a learner");
  if (demo_budget < 0) throw std::invalid_argument("phase2_train: demo_budget must be >= 0");
  Rng root(seed);
  Rng rng = root.fork(detail::kStreamPhase2);
  Rng pool_rng = root.fork(detail::kStreamPool);
  Rng curve_base = root.fork(detail::kStreamCurve + 1);

  TrainOutput<BoltzmannQPolicy> out{BoltzmannQPolicy(env.num_actions(), hp.tau), {}, {}, 0, 0};
  GoalSetTracker goals(env.num_goals(), GoalId{0});
  ReplayBuffer buffer(static_cast<std::size_t>(hp.buffer_capacity));
  const std::vector<GoalId> all_goals = env.goal_space();
  DemoPool<BlockRelEnv> pool;
  if (demo_budget > 0)
    pool = generate_demo_pool(env, teacher, all_goals, demo_budget, hp.demo_attempt_cap, pool_rng);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    GoalId pursued = goals.sample(rng);
    if (demo_budget > 0 && pool.goal_available(pursued)) {
      const auto& slot = pool.per_goal[static_cast<std::size_t>(pursued.index)];
      const Demonstration<BlockRelEnv>& demo =
          slot[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(slot.size())))];
      ++out.offered_demos;
      GoalId inferred =
          infer_goal(posterior(env, out.policy, demo, goals.discovered()), InferMode::kArgmax);
      if (inferred == pursued) {
        ++out.accepted_demos;
        sqil_insert(buffer, demo, pursued, env, env.max_reward(), variant == Variant::kB3);
        if (variant == Variant::kB2)
          for (const auto& [state, action] : demo.steps)
            out.policy.pull_toward(state.config.bits(), pursued.index, action, hp.bc_beta);
      }
      pursued = inferred;
    }

    detail::BlockRolloutResult r =
        detail::run_block_rollout(env, out.policy, pursued, env.initial_state(rng), rng);
    bool success = contains_goal(r.demo.achieved, pursued);
    if (role.inference_rewarded() && role.bonus > 0.0 && success &&
        own_goal_inference_correct(env, out.policy, r.demo, pursued, goals.discovered()))
      r.rollout.rewards.back() += role.bonus;
    if (variant != Variant::kB1) {
      std::vector<Transition> transitions = hindsight_relabel(r.rollout, env, hp.k_replay);
      if (variant == Variant::kB3)
        for (Transition& t : transitions) t.reward = 0.0;  // original scheme: experience reads 0
      for (const Transition& t : transitions) buffer.push(t);
    }
    std::optional<GoalId> achieved = env.goal_of_config(PredicateVector::from_bits(r.rollout.states.back()));
    if (achieved) goals.add(*achieved);
    if (!buffer.empty()) {
      std::vector<Transition> batch = buffer.sample_batch(hp.batch_size, hp.rho_demo, rng);
      q_update(out.policy, batch, hp.gamma, hp.lr);
    }
    if (eval.eval_every > 0 && ((epoch + 1) % eval.eval_every == 0 || epoch + 1 == epochs))
      out.curve.push_back(
          detail::curve_sample(env, out.policy, &teacher, epoch + 1, all_goals, eval, hp, curve_base));
  }
  out.discovered = goals.discovered();
  return out;
}

}  // namespace pedprag
