#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "pedprag/blockrel.hpp"

using namespace pedprag;

namespace {

PredicateVector config_from(std::initializer_list<std::pair<int, int>> closes,
                            std::initializer_list<std::pair<int, int>> aboves = {}) {
  PredicateVector v;
  for (auto [i, j] : closes) v.set_close(i, j, true);
  for (auto [t, b] : aboves) {
    v.set_above(t, b, true);
    v.set_close(t, b, true);
  }
  return v;
}

constexpr int A = 0, B = 1, C = 2;

}  // namespace

TEST_CASE("predicate vector serializes in fixed bit order") {
  PredicateVector v;
  v.set_close(A, B, true);
  REQUIRE(v.to_string() == "100000000");
  v.set_above(B, A, true);
  REQUIRE(v.to_string() == "100010000");
  v.set_above(C, B, true);
  REQUIRE(v.to_string() == "100010001");
  REQUIRE(PredicateVector::from_string("100010001") == v);
  REQUIRE(PredicateVector::from_bits(v.bits()) == v);
}

TEST_CASE("validity rejects chains, double stacks and orphan aboves") {
  REQUIRE(is_valid_config(PredicateVector{}));
  REQUIRE(is_valid_config(config_from({{A, B}})));
  REQUIRE(is_valid_config(config_from({{A, B}, {A, C}, {B, C}})));
  REQUIRE(is_valid_config(config_from({}, {{A, B}})));                        // two-stack
  REQUIRE(is_valid_config(config_from({{B, C}}, {{A, B}, {A, C}})));          // pyramid
  // chain of closes
  REQUIRE_FALSE(is_valid_config(config_from({{A, B}, {B, C}})));
  // above without close
  PredicateVector orphan;
  orphan.set_above(A, B, true);
  REQUIRE_FALSE(is_valid_config(orphan));
  // both directions stacked
  PredicateVector both = config_from({}, {{A, B}});
  both.set_above(B, A, true);
  REQUIRE_FALSE(is_valid_config(both));
  // stack of three
  REQUIRE_FALSE(is_valid_config(config_from({{A, C}}, {{A, B}, {B, C}})));
  // stack with a flat bystander close to it
  PredicateVector bystander = config_from({{A, B}, {A, C}, {B, C}}, {{A, B}});
  REQUIRE_FALSE(is_valid_config(bystander));
}

TEST_CASE("action enumeration is fixed and total") {
  REQUIRE(BlockRelAction::kCount == 16);
  std::set<std::string> names;
  for (int id = 0; id < BlockRelAction::kCount; ++id) {
    BlockRelAction a = BlockRelAction::decode(id);
    REQUIRE(a.encode() == id);
    names.insert(a.to_string());
  }
  REQUIRE(names.size() == 16);
}

TEST_CASE("enumeration reaches the golden configuration count") {
  BlockRelEnv env;
  // 1 empty + 3 close pairs + 6 two-stacks + 1 all-close + 3 pyramids.
  REQUIRE(env.valid_configs().size() == 14);
  REQUIRE(env.num_goals() == 13);
  REQUIRE(env.valid_configs()[0] == PredicateVector{});
  for (PredicateVector v : env.valid_configs()) REQUIRE(is_valid_config(v));

  // Idempotent and order-stable: a fresh enumeration matches exactly.
  BlockRelEnv env2;
  REQUIRE(env.valid_configs() == env2.valid_configs());

  // The closure agrees with the structural validity predicate.
  std::set<std::uint16_t> enumerated;
  for (PredicateVector v : env.valid_configs()) enumerated.insert(v.bits());
  for (std::uint16_t bits = 0; bits < (1u << 9); ++bits)
    REQUIRE(enumerated.count(bits) == (is_valid_config(PredicateVector::from_bits(bits)) ? 1u : 0u));
}

TEST_CASE("goal space excludes the empty configuration and is contiguous") {
  BlockRelEnv env;
  auto goals = env.goal_space();
  REQUIRE(static_cast<int>(goals.size()) == env.num_goals());
  for (int k = 0; k < env.num_goals(); ++k) REQUIRE(goals[static_cast<std::size_t>(k)].index == k);
  for (GoalId g : goals) REQUIRE(env.goal_config(g).bits() != 0);
  REQUIRE_FALSE(env.goal_of_config(PredicateVector{}).has_value());
}

TEST_CASE("bring_close sets a single pair from the empty configuration") {
  PredicateVector next = BlockRelEnv::apply(PredicateVector{},
                                            BlockRelAction{BlockRelAction::Kind::kBringClose, A, B}.encode());
  REQUIRE(next == config_from({{A, B}}));
}

TEST_CASE("bring_close merges clusters transitively") {
  PredicateVector pair = config_from({{A, B}});
  PredicateVector next =
      BlockRelEnv::apply(pair, BlockRelAction{BlockRelAction::Kind::kBringClose, B, C}.encode());
  REQUIRE(next == config_from({{A, B}, {A, C}, {B, C}}));
}

TEST_CASE("stack onto a paired block forms a pyramid, as the enumerator allows") {
  PredicateVector pair = config_from({{A, B}});
  PredicateVector next =
      BlockRelEnv::apply(pair, BlockRelAction{BlockRelAction::Kind::kStack, C, A}.encode());
  REQUIRE(next.above(C, A));
  REQUIRE(next.close(C, A));
  REQUIRE(next.close(A, B));
  REQUIRE(is_valid_config(next));
  REQUIRE(next == config_from({{A, B}}, {{C, A}, {C, B}}));
}

TEST_CASE("noop and invalid actions leave the configuration unchanged") {
  BlockRelEnv env;
  for (PredicateVector v : env.valid_configs()) {
    REQUIRE(BlockRelEnv::apply(v, BlockRelAction{BlockRelAction::Kind::kNoop, -1, -1}.encode()) == v);
  }
  // Stacking onto an occupied block resolves to noop.
  PredicateVector stack = config_from({}, {{A, B}});
  REQUIRE(BlockRelEnv::apply(stack, BlockRelAction{BlockRelAction::Kind::kStack, C, B}.encode()) == stack);
  // Stacking the base out from under its rider resolves to noop.
  REQUIRE(BlockRelEnv::apply(stack, BlockRelAction{BlockRelAction::Kind::kStack, B, C}.encode()) == stack);
}

TEST_CASE("every transition lands on a valid configuration") {
  BlockRelEnv env;
  for (PredicateVector v : env.valid_configs())
    for (int a = 0; a < BlockRelEnv::kNumActions; ++a)
      REQUIRE(is_valid_config(BlockRelEnv::apply(v, a)));
}

TEST_CASE("step is deterministic and advances the clock") {
  BlockRelEnv env;
  BlockRelState s = env.initial_state();
  BlockRelState s1 = env.step(s, BlockRelAction{BlockRelAction::Kind::kNoop, -1, -1}.encode());
  REQUIRE(s1.config == s.config);
  REQUIRE(s1.steps_elapsed == 1);
  for (PredicateVector v : env.valid_configs())
    for (int a = 0; a < BlockRelEnv::kNumActions; ++a)
      REQUIRE(BlockRelEnv::apply(v, a) == BlockRelEnv::apply(v, a));
}

TEST_CASE("unstack returns the rider beside its support") {
  PredicateVector stack = config_from({}, {{A, B}});
  PredicateVector next =
      BlockRelEnv::apply(stack, BlockRelAction{BlockRelAction::Kind::kUnstack, A, -1}.encode());
  REQUIRE(next == config_from({{A, B}}));
  PredicateVector pyramid = config_from({{B, C}}, {{A, B}, {A, C}});
  PredicateVector flat =
      BlockRelEnv::apply(pyramid, BlockRelAction{BlockRelAction::Kind::kUnstack, A, -1}.encode());
  REQUIRE(flat == config_from({{A, B}, {A, C}, {B, C}}));
}

TEST_CASE("reward: exact match scores 3") {
  BlockRelEnv env;
  for (GoalId g : env.goal_space()) REQUIRE(env.reward(env.goal_config(g), g) == 3);
}

TEST_CASE("reward: unmatched constrained pair scores 0 even with vacuous pairs") {
  REQUIRE(blockrel_reward(PredicateVector{}, config_from({{A, B}})) == 0);
}

TEST_CASE("reward: all-close satisfies a single-pair goal") {
  REQUIRE(blockrel_reward(config_from({{A, B}, {A, C}, {B, C}}), config_from({{A, B}})) == 3);
}

TEST_CASE("reward: partially matched all-close goal scores 1") {
  REQUIRE(blockrel_reward(config_from({{A, B}}), config_from({{A, B}, {A, C}, {B, C}})) == 1);
}

TEST_CASE("reward is 0, 1 or 3 for every valid (config, goal) pair, exhaustively") {
  BlockRelEnv env;
  for (PredicateVector c : env.valid_configs()) {
    for (GoalId g : env.goal_space()) {
      int r = env.reward(c, g);
      INFO("config " << c.to_string() << " goal " << env.goal_config(g).to_string());
      REQUIRE((r == 0 || r == 1 || r == 3));
    }
  }
}

TEST_CASE("ambiguity exists: some final configuration achieves several goals") {
  BlockRelEnv env;
  bool found = false;
  for (PredicateVector c : env.valid_configs())
    if (env.achieved_goals(c).size() >= 2) found = true;
  REQUIRE(found);
  // The all-close configuration fully satisfies every single-pair goal.
  REQUIRE(env.achieved_goals(config_from({{A, B}, {A, C}, {B, C}})).size() >= 4);
}

TEST_CASE("achieved goal is the final configuration itself") {
  BlockRelEnv env;
  PredicateVector pair = config_from({{A, B}});
  BlockRelState final_state{pair, env.horizon()};
  REQUIRE(env.achieved_goal(final_state) == env.goal_of_config(pair));
}
