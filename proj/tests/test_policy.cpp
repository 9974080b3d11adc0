#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "pedprag/policy.hpp"

using namespace pedprag;
using Catch::Approx;

namespace {
DtbState step0() { return DtbState{}; }
DtbState step1(Ball first) { return DtbState{1, first}; }
}  // namespace

TEST_CASE("fresh two-pick policy is uniform and normalized") {
  DtbPolicy p;
  for (int g = 0; g < 3; ++g) {
    double total = 0.0;
    for (int a = 0; a < 3; ++a) {
      double prob = p.action_prob(step0(), GoalId{g}, static_cast<Ball>(a));
      REQUIRE(prob == Approx(1.0 / 3.0));
      total += prob;
    }
    REQUIRE(total == Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("success update: selected grows by (1+alpha), the rest share the remainder") {
  DtbPolicy p;
  std::array<Ball, 2> picks = {Ball::kOrange, Ball::kPink};
  p.update(picks, GoalId{1}, /*success=*/true, /*bonus=*/false, 0.1);
  // From uniform: selected 1/3 * 1.1 = 0.366667, others (1 - 0.366667) / 2.
  REQUIRE(p.action_prob(step0(), GoalId{1}, Ball::kOrange) == Approx(0.3666667).epsilon(1e-5));
  REQUIRE(p.action_prob(step0(), GoalId{1}, Ball::kPurple) == Approx(0.3166667).epsilon(1e-5));
  REQUIRE(p.action_prob(step0(), GoalId{1}, Ball::kPink) == Approx(0.3166667).epsilon(1e-5));
  REQUIRE(p.action_prob(step1(Ball::kOrange), GoalId{1}, Ball::kPink) == Approx(0.3666667).epsilon(1e-5));
  // Untouched conditionals stay uniform.
  REQUIRE(p.action_prob(step1(Ball::kPink), GoalId{1}, Ball::kPink) == Approx(1.0 / 3.0));
}

TEST_CASE("one success update beats every untouched action from uniform") {
  DtbPolicy p;
  std::array<Ball, 2> picks = {Ball::kPink, Ball::kOrange};
  p.update(picks, GoalId{1}, true, false, 0.1);
  double chosen = p.action_prob(step0(), GoalId{1}, Ball::kPink);
  REQUIRE(chosen > p.action_prob(step0(), GoalId{1}, Ball::kPurple));
  REQUIRE(chosen > p.action_prob(step0(), GoalId{1}, Ball::kOrange));
}

TEST_CASE("failure shrinks the selected actions") {
  DtbPolicy p;
  std::array<Ball, 2> picks = {Ball::kPurple, Ball::kPurple};
  p.update(picks, GoalId{0}, false, false, 0.1);
  REQUIRE(p.action_prob(step0(), GoalId{0}, Ball::kPurple) == Approx(0.3).epsilon(1e-9));
  REQUIRE(p.action_prob(step0(), GoalId{0}, Ball::kOrange) == Approx(0.35).epsilon(1e-9));
}

TEST_CASE("inference bonus strictly increases the selected probability") {
  DtbPolicy with_bonus, without;
  std::array<Ball, 2> picks = {Ball::kPink, Ball::kOrange};
  with_bonus.update(picks, GoalId{1}, true, true, 0.1);
  without.update(picks, GoalId{1}, true, false, 0.1);
  REQUIRE(with_bonus.action_prob(step0(), GoalId{1}, Ball::kPink) >
          without.action_prob(step0(), GoalId{1}, Ball::kPink));
}

TEST_CASE("updates preserve the simplex and the probability floor") {
  DtbPolicy p(1e-4);
  Rng rng(11);
  for (int k = 0; k < 5000; ++k) {
    std::array<Ball, 2> picks = {static_cast<Ball>(rng.uniform_int(3)),
                                 static_cast<Ball>(rng.uniform_int(3))};
    GoalId g{rng.uniform_int(3)};
    p.update(picks, g, rng.bernoulli(0.6), rng.bernoulli(0.3), 0.1);
  }
  for (int g = 0; g < 3; ++g) {
    const auto& first = p.first_row(GoalId{g});
    double total = first[0] + first[1] + first[2];
    REQUIRE(total == Approx(1.0).margin(1e-9));
    for (double v : first) REQUIRE(v >= 1e-4 - 1e-12);
    for (int f = 0; f < 3; ++f) {
      const auto& second = p.second_row(GoalId{g}, static_cast<Ball>(f));
      REQUIRE(second[0] + second[1] + second[2] == Approx(1.0).margin(1e-9));
      for (double v : second) REQUIRE(v >= 1e-4 - 1e-12);
    }
  }
}

TEST_CASE("alpha outside (0,1) is rejected") {
  DtbPolicy p;
  std::array<Ball, 2> picks = {Ball::kPink, Ball::kOrange};
  REQUIRE_THROWS_AS(p.update(picks, GoalId{0}, true, false, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(p.update(picks, GoalId{0}, true, false, 1.0), std::invalid_argument);
}

TEST_CASE("two-pick policy snapshots round-trip") {
  DtbPolicy p;
  std::array<Ball, 2> picks = {Ball::kOrange, Ball::kOrange};
  p.update(picks, GoalId{1}, true, true, 0.2);
  DtbPolicy q = DtbPolicy::from_json(p.to_json());
  REQUIRE(q.to_json() == p.to_json());
}

TEST_CASE("fresh soft-greedy policy is uniform over 16 actions") {
  BoltzmannQPolicy p(16, 0.5);
  std::vector<double> probs = p.action_probs_raw(0, 0);
  for (double v : probs) REQUIRE(v == Approx(1.0 / 16.0));
}

TEST_CASE("soft-greedy probabilities are normalized with full support") {
  BoltzmannQPolicy p(16, 0.5);
  Rng rng(5);
  for (int k = 0; k < 500; ++k)
    p.td_update(static_cast<std::uint16_t>(rng.uniform_int(512)), rng.uniform_int(13),
                rng.uniform_int(16), rng.uniform() * 4 - 1,
                static_cast<std::uint16_t>(rng.uniform_int(512)), rng.bernoulli(0.2), 0.98, 0.1);
  for (std::uint16_t s = 0; s < 512; s += 7) {
    for (int g = 0; g < 13; ++g) {
      std::vector<double> probs = p.action_probs_raw(s, g);
      double total = 0.0;
      for (double v : probs) {
        REQUIRE(v > 0.0);
        total += v;
      }
      REQUIRE(total == Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("log probabilities agree with probabilities to 1e-12") {
  BoltzmannQPolicy p(16, 0.5);
  p.td_update(3, 1, 4, 2.5, 9, true, 0.98, 0.5);
  p.td_update(3, 1, 7, -1.0, 9, true, 0.98, 0.5);
  for (int a = 0; a < 16; ++a) {
    double prob = p.action_probs_raw(3, 1)[static_cast<std::size_t>(a)];
    REQUIRE(std::abs(std::exp(p.log_action_prob_raw(3, 1, a)) - prob) < 1e-12);
  }
}

TEST_CASE("single terminal backup moves q by lr * reward") {
  BoltzmannQPolicy p(16, 0.5);
  p.td_update(0, 0, 2, 3.0, 1, true, 0.98, 0.1);
  REQUIRE(p.q_value(0, 0, 2) == Approx(0.3));
}

TEST_CASE("repeated terminal reward drives q to its fixed point monotonically") {
  BoltzmannQPolicy p(16, 0.5);
  double prev = 0.0;
  for (int k = 0; k < 200; ++k) {
    p.td_update(0, 0, 2, 1.0, 1, true, 0.98, 0.1);
    double q = p.q_value(0, 0, 2);
    REQUIRE(q > prev);
    prev = q;
  }
  REQUIRE(prev == Approx(1.0).margin(1e-6));
}

TEST_CASE("two-step chain converges to the discounted return") {
  // s0 --a0--> s1 --a1--> terminal, rewards 1 then 3, gamma 0.9.
  BoltzmannQPolicy p(2, 0.5);
  for (int k = 0; k < 3000; ++k) {
    p.td_update(1, 0, 1, 3.0, 2, true, 0.9, 0.2);
    p.td_update(0, 0, 0, 1.0, 1, false, 0.9, 0.2);
  }
  REQUIRE(p.q_value(1, 0, 1) == Approx(3.0).margin(1e-6));
  REQUIRE(p.q_value(0, 0, 0) == Approx(1.0 + 0.9 * 3.0).margin(1e-6));
}

TEST_CASE("lowering the temperature sharpens the argmax") {
  BoltzmannQPolicy warm(4, 1.0), cold(4, 0.25);
  for (auto* p : {&warm, &cold}) {
    p->td_update(0, 0, 1, 2.0, 1, true, 0.9, 1.0);
    p->td_update(0, 0, 2, 1.0, 1, true, 0.9, 1.0);
  }
  REQUIRE(cold.action_probs_raw(0, 0)[1] > warm.action_probs_raw(0, 0)[1]);
}

TEST_CASE("sampling follows the exact categorical and is seed-reproducible") {
  BoltzmannQPolicy p(16, 0.5);
  BlockRelState s;
  Rng a(17), b(17);
  for (int k = 0; k < 50; ++k)
    REQUIRE(p.sample_action(s, GoalId{0}, a) == p.sample_action(s, GoalId{0}, b));

  std::array<long, 16> counts{};
  Rng rng(23);
  const int n = 160000;
  for (int k = 0; k < n; ++k) counts[static_cast<std::size_t>(p.sample_action(s, GoalId{0}, rng))]++;
  for (long c : counts)
    REQUIRE(std::abs(c / static_cast<double>(n) - 1.0 / 16.0) < 0.01);
}

TEST_CASE("a near-deterministic row samples its mode almost always") {
  BoltzmannQPolicy p(16, 0.5);
  for (int k = 0; k < 200; ++k) p.td_update(0, 0, 5, 10.0, 1, true, 0.98, 0.5);
  BlockRelState s;
  Rng rng(29);
  int hits = 0;
  const int n = 2000;
  for (int k = 0; k < n; ++k) hits += (p.sample_action(s, GoalId{0}, rng) == 5) ? 1 : 0;
  REQUIRE(hits >= static_cast<int>(0.99 * n));
}

TEST_CASE("soft-greedy snapshots round-trip") {
  BoltzmannQPolicy p(16, 0.5);
  p.td_update(0, 3, 2, 1.5, 1, false, 0.98, 0.1);
  p.td_update(37, 1, 15, -0.5, 0, true, 0.98, 0.1);
  BoltzmannQPolicy q = BoltzmannQPolicy::from_json(p.to_json());
  REQUIRE(q.to_json() == p.to_json());
  REQUIRE(q.q_value(37, 1, 15) == p.q_value(37, 1, 15));
}

TEST_CASE("probability-space pull moves the conditional toward the action") {
  BoltzmannQPolicy p(4, 0.5);
  std::vector<double> before = p.action_probs_raw(0, 0);
  p.pull_toward(0, 0, 2, 0.1);
  std::vector<double> after = p.action_probs_raw(0, 0);
  REQUIRE(after[2] == Approx((1.0 - 0.1) * before[2] + 0.1).margin(1e-9));
  REQUIRE(after[0] == Approx(0.9 * before[0]).margin(1e-9));
}
