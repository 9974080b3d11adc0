#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedprag/goal.hpp"
#include "pedprag/rng.hpp"

namespace pedprag {

/// Ball colors for the two-pick environment.
enum class Ball : int { kPurple = 0, kOrange = 1, kPink = 2 };

constexpr int kDtbNumColors = 3;

inline const char* ball_name(Ball b) {
  switch (b) {
    case Ball::kPurple: return "purple";
    case Ball::kOrange: return "orange";
    case Ball::kPink: return "pink";
  }
  return "?";
}

/// State of a two-pick episode: how many balls have been drawn, and the first
/// pick once one exists. Episodes terminate exactly after the second pick.
struct DtbState {
  int step = 0;
  std::optional<Ball> first;

  bool operator==(const DtbState&) const = default;
};

/// "Draw two balls": pick two balls in sequence from a bucket of purple,
/// orange and pink. (orange, orange) and (pink, orange) reach goal 1;
/// (orange, pink) reaches goals 1 and 2 at once; every other pair reaches
/// goal 0 (nothing happens). The (orange, pink) overlap is the built-in
/// goal ambiguity.
class DtbEnv {
 public:
  using State = DtbState;
  using Action = Ball;

  static constexpr int kNumGoals = 3;
  static constexpr int kNumActions = kDtbNumColors;
  static constexpr int kEpisodeLength = 2;

  int num_goals() const { return kNumGoals; }
  int num_actions() const { return kNumActions; }
  int horizon() const { return kEpisodeLength; }

  State initial_state() const { return State{}; }
  State initial_state(Rng&) const { return State{}; }

  bool terminal(const State& s) const { return s.step >= kEpisodeLength; }

  State step(const State& s, Action a) const {
    if (terminal(s)) throw std::invalid_argument("dtb: step on terminal state");
    State next;
    next.step = s.step + 1;
    next.first = (s.step == 0) ? std::optional<Ball>(a) : s.first;
    return next;
  }

  /// Goals reached by a complete two-pick sequence.
  static std::vector<GoalId> achieved_for_pair(Ball first, Ball second) {
    if (first == Ball::kOrange && second == Ball::kOrange) return {GoalId{1}};
    if (first == Ball::kPink && second == Ball::kOrange) return {GoalId{1}};
    if (first == Ball::kOrange && second == Ball::kPink) return {GoalId{1}, GoalId{2}};
    return {GoalId{0}};
  }

  std::vector<GoalId> achieved_goals(std::span<const Action> actions, const State&) const {
    if (actions.size() != kEpisodeLength)
      throw std::invalid_argument("dtb: achieved_goals needs exactly two picks");
    return achieved_for_pair(actions[0], actions[1]);
  }

  std::vector<GoalId> goal_space() const { return {GoalId{0}, GoalId{1}, GoalId{2}}; }

  static std::string goal_name(GoalId g) {
    switch (g.index) {
      case 0: return "goal0";
      case 1: return "goal1";
      case 2: return "goal2";
    }
    throw std::invalid_argument("dtb: unknown goal");
  }

  // Feature tokens for the demonstration classifier.
  std::string state_token(const State& s) const {
    if (s.step == 0) return "s0";
    return std::string("s1:") + ball_name(*s.first);
  }
  std::string action_token(Action a) const { return ball_name(a); }
};

}  // namespace pedprag
