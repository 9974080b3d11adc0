#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pedprag/goal.hpp"
#include "pedprag/rng.hpp"

namespace pedprag {

/// A trajectory handed from one agent to another: (state, action) steps plus
/// the goals it achieved. The intended goal is bookkeeping for evaluation and
/// is never visible to the inferring agent.
template <class Env>
struct Demonstration {
  using State = typename Env::State;
  using Action = typename Env::Action;

  std::vector<std::pair<State, Action>> steps;
  std::vector<GoalId> achieved;
  std::optional<GoalId> intended;
};

/// Posterior over a goal set, kept in log domain with a normalized companion.
struct GoalPosterior {
  std::vector<GoalId> goals;
  std::vector<double> log_weights;
  std::vector<double> normalized;
};

template <class Env>
void validate_demonstration(const Env& env, const Demonstration<Env>& demo) {
  if (demo.steps.empty()) throw std::invalid_argument("demonstration: no steps");
  for (std::size_t i = 0; i + 1 < demo.steps.size(); ++i) {
    typename Env::State next = env.step(demo.steps[i].first, demo.steps[i].second);
    if (!(next == demo.steps[i + 1].first))
      throw std::invalid_argument("demonstration: inconsistent with the transition function");
  }
}

namespace detail {

template <class Env, class Policy>
double log_likelihood_unchecked(const Policy& policy, const Demonstration<Env>& demo, GoalId g) {
  double total = 0.0;
  for (const auto& [state, action] : demo.steps)
    total += policy.log_action_prob(state, g, action);
  return total;
}

}  // namespace detail

/// log P(d | g) = sum_i log pi(a_i | s_i, g). Deterministic transitions make
/// the state factors vanish; full-support policies keep the value finite.
template <class Env, class Policy>
double log_likelihood(const Env& env, const Policy& policy, const Demonstration<Env>& demo,
                      GoalId g) {
  validate_demonstration(env, demo);
  return detail::log_likelihood_unchecked(policy, demo, g);
}

/// Posterior over `goals` given the demonstration, from per-goal likelihoods
/// and a prior. The prior is any positive weight vector over `goals`
/// (normalized internally). Computed with a max shift; raw sums are never
/// exponentiated.
template <class Env, class Policy>
GoalPosterior posterior(const Env& env, const Policy& policy, const Demonstration<Env>& demo,
                        std::span<const GoalId> goals, std::span<const double> prior) {
  validate_demonstration(env, demo);
  if (goals.empty()) throw std::invalid_argument("posterior: empty goal set");
  if (prior.size() != goals.size()) throw std::invalid_argument("posterior: prior size mismatch");
  double prior_total = 0.0;
  for (double w : prior) {
    if (w < 0.0) throw std::invalid_argument("posterior: negative prior weight");
    prior_total += w;
  }
  if (prior_total <= 0.0) throw std::invalid_argument("posterior: prior has no mass");

  GoalPosterior post;
  post.goals.assign(goals.begin(), goals.end());
  post.log_weights.resize(goals.size());
  for (std::size_t k = 0; k < goals.size(); ++k) {
    double lp = prior[k] > 0.0 ? std::log(prior[k] / prior_total)
                               : -std::numeric_limits<double>::infinity();
    post.log_weights[k] = lp + detail::log_likelihood_unchecked(policy, demo, goals[k]);
  }
  double shift = *std::max_element(post.log_weights.begin(), post.log_weights.end());
  post.normalized.resize(goals.size());
  double total = 0.0;
  for (std::size_t k = 0; k < goals.size(); ++k) {
    post.normalized[k] = std::exp(post.log_weights[k] - shift);
    total += post.normalized[k];
  }
  for (double& v : post.normalized) v /= total;
  return post;
}

/// Uniform-prior convenience overload.
template <class Env, class Policy>
GoalPosterior posterior(const Env& env, const Policy& policy, const Demonstration<Env>& demo,
                        std::span<const GoalId> goals) {
  std::vector<double> uniform(goals.size(), 1.0);
  return posterior(env, policy, demo, goals, uniform);
}

enum class InferMode { kArgmax, kSample };

/// Pick a goal from a posterior: the most probable one (lowest index wins
/// ties) or a draw from the distribution.
inline GoalId infer_goal(const GoalPosterior& post, InferMode mode, Rng* rng = nullptr) {
  if (post.goals.empty()) throw std::invalid_argument("infer_goal: empty posterior");
  if (mode == InferMode::kSample) {
    if (!rng) throw std::invalid_argument("infer_goal: sample mode needs an rng");
    return post.goals[static_cast<std::size_t>(rng->categorical(post.normalized))];
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < post.goals.size(); ++k) {
    if (post.log_weights[k] > post.log_weights[best] ||
        (post.log_weights[k] == post.log_weights[best] &&
         post.goals[k].index < post.goals[best].index))
      best = k;
  }
  return post.goals[best];
}

/// Would a learner recover the pursued goal from this trajectory? Argmax
/// inference under a uniform prior over `goals`.
template <class Env, class Policy>
bool own_goal_inference_correct(const Env& env, const Policy& policy,
                                const Demonstration<Env>& demo, GoalId pursued,
                                std::span<const GoalId> goals) {
  return infer_goal(posterior(env, policy, demo, goals), InferMode::kArgmax) == pursued;
}

}  // namespace pedprag
