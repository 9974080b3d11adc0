#include <catch2/catch_amalgamated.hpp>

#include "pedprag/dtb.hpp"

using namespace pedprag;

namespace {
std::vector<GoalId> achieved(Ball first, Ball second) {
  DtbEnv env;
  DtbState s = env.initial_state();
  s = env.step(s, first);
  DtbState done = env.step(s, second);
  std::vector<Ball> actions = {first, second};
  return env.achieved_goals(actions, done);
}
}  // namespace

TEST_CASE("orange then pink reaches goals 1 and 2 at once") {
  REQUIRE(achieved(Ball::kOrange, Ball::kPink) == std::vector<GoalId>{GoalId{1}, GoalId{2}});
}

TEST_CASE("two purples reach only goal 0") {
  REQUIRE(achieved(Ball::kPurple, Ball::kPurple) == std::vector<GoalId>{GoalId{0}});
}

TEST_CASE("pink then orange reaches goal 1 alone") {
  REQUIRE(achieved(Ball::kPink, Ball::kOrange) == std::vector<GoalId>{GoalId{1}});
  REQUIRE(achieved(Ball::kOrange, Ball::kOrange) == std::vector<GoalId>{GoalId{1}});
}

TEST_CASE("state tracks the first pick and terminates after two") {
  DtbEnv env;
  DtbState s = env.initial_state();
  REQUIRE(s.step == 0);
  REQUIRE_FALSE(s.first.has_value());
  s = env.step(s, Ball::kOrange);
  REQUIRE(s.step == 1);
  REQUIRE(s.first == Ball::kOrange);
  s = env.step(s, Ball::kPink);
  REQUIRE(env.terminal(s));
  REQUIRE_THROWS_AS(env.step(s, Ball::kPink), std::invalid_argument);
}

TEST_CASE("goal space has three contiguous goals") {
  DtbEnv env;
  auto goals = env.goal_space();
  REQUIRE(goals.size() == 3);
  for (int k = 0; k < 3; ++k) REQUIRE(goals[static_cast<std::size_t>(k)].index == k);
  REQUIRE(DtbEnv::goal_name(GoalId{0}) == "goal0");
}
