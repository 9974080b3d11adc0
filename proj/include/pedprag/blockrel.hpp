#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedprag/goal.hpp"
#include "pedprag/rng.hpp"

namespace pedprag {

/// Semantic relation vector over three blocks A, B, C: three unordered
/// "close" predicates and six ordered "above" predicates (x on top of y).
/// Serialized as 9 bits in fixed order:
///   close AB, AC, BC, above AB, BA, AC, CA, BC, CB.
class PredicateVector {
 public:
  static constexpr int kNumBits = 9;
  static constexpr int kNumBlocks = 3;

  PredicateVector() = default;

  static PredicateVector from_bits(std::uint16_t bits) {
    if (bits >= (1u << kNumBits)) throw std::invalid_argument("PredicateVector: bits out of range");
    PredicateVector v;
    v.bits_ = bits;
    return v;
  }

  std::uint16_t bits() const { return bits_; }

  static int close_bit(int i, int j) {
    order_pair(i, j);
    if (i == 0) return j == 1 ? 0 : 1;
    return 2;  // (1,2)
  }

  static int above_bit(int top, int bottom) {
    check_pair(top, bottom);
    static constexpr int kIdx[3][3] = {{-1, 3, 5}, {4, -1, 7}, {6, 8, -1}};
    return kIdx[top][bottom];
  }

  bool close(int i, int j) const { return get(close_bit(i, j)); }
  bool above(int top, int bottom) const { return get(above_bit(top, bottom)); }

  void set_close(int i, int j, bool v) { set(close_bit(i, j), v); }
  void set_above(int top, int bottom, bool v) { set(above_bit(top, bottom), v); }

  bool get(int bit) const { return (bits_ >> bit) & 1u; }
  void set(int bit, bool v) {
    if (v)
      bits_ |= static_cast<std::uint16_t>(1u << bit);
    else
      bits_ &= static_cast<std::uint16_t>(~(1u << bit));
  }

  int close_count() const {
    return static_cast<int>(get(0)) + static_cast<int>(get(1)) + static_cast<int>(get(2));
  }

  /// True if some block sits on top of `i`.
  bool carries(int i) const {
    for (int k = 0; k < kNumBlocks; ++k)
      if (k != i && above(k, i)) return true;
    return false;
  }

  /// True if block `i` sits on top of some block.
  bool stacked(int i) const {
    for (int k = 0; k < kNumBlocks; ++k)
      if (k != i && above(i, k)) return true;
    return false;
  }

  std::string to_string() const {
    std::string s(kNumBits, '0');
    for (int b = 0; b < kNumBits; ++b)
      if (get(b)) s[static_cast<std::size_t>(b)] = '1';
    return s;
  }

  static PredicateVector from_string(const std::string& s) {
    if (s.size() != kNumBits) throw std::invalid_argument("PredicateVector: bad string length");
    PredicateVector v;
    for (int b = 0; b < kNumBits; ++b) {
      char c = s[static_cast<std::size_t>(b)];
      if (c != '0' && c != '1') throw std::invalid_argument("PredicateVector: bad character");
      v.set(b, c == '1');
    }
    return v;
  }

  auto operator<=>(const PredicateVector&) const = default;

 private:
  static void check_pair(int i, int j) {
    if (i < 0 || i >= kNumBlocks || j < 0 || j >= kNumBlocks || i == j)
      throw std::invalid_argument("PredicateVector: bad block pair");
  }
  static void order_pair(int& i, int& j) {
    check_pair(i, j);
    if (i > j) std::swap(i, j);
  }

  std::uint16_t bits_ = 0;
};

/// Physical realizability of a relation vector under the surrogate semantics.
///
/// "close" is treated as transitive (blocks sit in clusters), so chain
/// patterns with exactly two close pairs are not realizable. Stacks of three
/// are excluded; the reachable shapes are:
///   - all blocks apart
///   - one close pair, flat
///   - a two-block stack (close + above on that pair), third block apart
///   - all three close, flat
///   - a pyramid: one block resting on a close pair (all close, two aboves
///     sharing the top block)
inline bool is_valid_config(PredicateVector v) {
  constexpr int kN = PredicateVector::kNumBlocks;
  // Collect above edges.
  int num_above = 0;
  int top0 = -1, bot0 = -1, top1 = -1, bot1 = -1;
  for (int t = 0; t < kN; ++t) {
    for (int b = 0; b < kN; ++b) {
      if (t == b || !v.above(t, b)) continue;
      if (!v.close(t, b)) return false;  // contact implies proximity
      if (num_above == 0) {
        top0 = t;
        bot0 = b;
      } else if (num_above == 1) {
        top1 = t;
        bot1 = b;
      }
      ++num_above;
    }
  }
  int closes = v.close_count();
  if (num_above == 0) return closes == 0 || closes == 1 || closes == 3;
  if (num_above == 1) return closes == 1;  // isolated two-block stack
  if (num_above == 2) {
    // Pyramid: both aboves share the top block and rest on distinct bases.
    return top0 == top1 && bot0 != bot1 && closes == 3;
  }
  return false;
}

/// Discrete manipulation action over blocks A=0, B=1, C=2. The enumeration is
/// fixed and total: 3 bring_close + 3 separate + 6 stack + 3 unstack + 1 noop.
struct BlockRelAction {
  enum class Kind { kBringClose, kSeparate, kStack, kUnstack, kNoop };

  Kind kind = Kind::kNoop;
  int i = -1;
  int j = -1;

  static constexpr int kCount = 16;

  static BlockRelAction decode(int id) {
    static constexpr std::array<std::array<int, 2>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};
    static constexpr std::array<std::array<int, 2>, 6> kOrdered = {
        {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}}};
    if (id < 0 || id >= kCount) throw std::invalid_argument("BlockRelAction: bad id");
    if (id < 3) return {Kind::kBringClose, kPairs[static_cast<std::size_t>(id)][0], kPairs[static_cast<std::size_t>(id)][1]};
    if (id < 6) return {Kind::kSeparate, kPairs[static_cast<std::size_t>(id - 3)][0], kPairs[static_cast<std::size_t>(id - 3)][1]};
    if (id < 12) return {Kind::kStack, kOrdered[static_cast<std::size_t>(id - 6)][0], kOrdered[static_cast<std::size_t>(id - 6)][1]};
    if (id < 15) return {Kind::kUnstack, id - 12, -1};
    return {Kind::kNoop, -1, -1};
  }

  int encode() const {
    switch (kind) {
      case Kind::kBringClose: return pair_index(i, j);
      case Kind::kSeparate: return 3 + pair_index(i, j);
      case Kind::kStack: return 6 + ordered_index(i, j);
      case Kind::kUnstack: return 12 + i;
      case Kind::kNoop: return 15;
    }
    throw std::invalid_argument("BlockRelAction: bad kind");
  }

  std::string to_string() const {
    static constexpr const char* kBlock = "ABC";
    switch (kind) {
      case Kind::kBringClose: return std::string("bring_close(") + kBlock[i] + "," + kBlock[j] + ")";
      case Kind::kSeparate: return std::string("separate(") + kBlock[i] + "," + kBlock[j] + ")";
      case Kind::kStack: return std::string("stack(") + kBlock[i] + "," + kBlock[j] + ")";
      case Kind::kUnstack: return std::string("unstack(") + kBlock[i] + ")";
      case Kind::kNoop: return "noop";
    }
    return "?";
  }

 private:
  static int pair_index(int a, int b) {
    if (a > b) std::swap(a, b);
    if (a == 0) return b == 1 ? 0 : 1;
    return 2;
  }
  static int ordered_index(int a, int b) {
    static constexpr int kIdx[3][3] = {{-1, 0, 2}, {1, -1, 4}, {3, 5, -1}};
    return kIdx[a][b];
  }
};

struct BlockRelState {
  PredicateVector config;
  int steps_elapsed = 0;

  bool operator==(const BlockRelState&) const = default;
};

/// Pair-matching reward: for each unordered block pair, the pair counts as
/// matched when every true goal predicate touching it is also true in the
/// current vector. Pairs the goal says nothing about count as matched only
/// when every constrained pair is matched; otherwise the score is the number
/// of matched constrained pairs. Values are always 0, 1 or 3 over valid
/// (current, goal) pairs.
inline int blockrel_reward(PredicateVector current, PredicateVector goal) {
  static constexpr std::uint16_t kPairMask[3] = {
      static_cast<std::uint16_t>((1u << 0) | (1u << 3) | (1u << 4)),  // AB: close AB, above AB, above BA
      static_cast<std::uint16_t>((1u << 1) | (1u << 5) | (1u << 6)),  // AC
      static_cast<std::uint16_t>((1u << 2) | (1u << 7) | (1u << 8)),  // BC
  };
  int matched = 0, constrained = 0;
  for (std::uint16_t mask : kPairMask) {
    std::uint16_t want = static_cast<std::uint16_t>(goal.bits() & mask);
    if (!want) continue;
    ++constrained;
    if ((current.bits() & want) == want) ++matched;
  }
  if (matched == constrained) return 3;
  return matched;
}

constexpr int kBlockRelMaxReward = 3;

/// Deterministic three-block environment over semantic relation vectors.
/// Illegal actions resolve to noop so that every action is available in every
/// state, which keeps goal-conditioned action probabilities well defined.
class BlockRelEnv {
 public:
  using State = BlockRelState;
  using Action = int;  // BlockRelAction id, 0..15

  static constexpr int kNumActions = BlockRelAction::kCount;

  explicit BlockRelEnv(int horizon = 5) : horizon_(horizon) {
    if (horizon_ < 1) throw std::invalid_argument("blockrel: horizon must be >= 1");
    enumerate();
  }

  int num_actions() const { return kNumActions; }
  int horizon() const { return horizon_; }

  State initial_state() const { return State{PredicateVector{}, 0}; }

  /// Episode start drawn uniformly over the reachable configurations.
  State initial_state(Rng& rng) const {
    return State{configs_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(configs_.size())))], 0};
  }

  State start_from(PredicateVector config) const {
    if (!is_valid_config(config)) throw std::invalid_argument("blockrel: invalid start config");
    return State{config, 0};
  }

  bool terminal(const State& s) const { return s.steps_elapsed >= horizon_; }

  State step(const State& s, Action a) const {
    if (terminal(s)) throw std::invalid_argument("blockrel: step past horizon");
    return State{apply(s.config, a), s.steps_elapsed + 1};
  }

  /// Pure transition on the relation vector; invalid outcomes resolve to the
  /// unchanged vector.
  static PredicateVector apply(PredicateVector c, Action action_id) {
    const BlockRelAction a = BlockRelAction::decode(action_id);
    PredicateVector out = c;
    switch (a.kind) {
      case BlockRelAction::Kind::kNoop:
        return c;
      case BlockRelAction::Kind::kBringClose: {
        // Merge the close-clusters of the two blocks.
        std::array<bool, 3> in_cluster = {false, false, false};
        in_cluster[static_cast<std::size_t>(a.i)] = in_cluster[static_cast<std::size_t>(a.j)] = true;
        for (int k = 0; k < 3; ++k) {
          if (k == a.i || k == a.j) continue;
          if (c.close(k, a.i) || c.close(k, a.j)) in_cluster[static_cast<std::size_t>(k)] = true;
        }
        for (int x = 0; x < 3; ++x)
          for (int y = x + 1; y < 3; ++y)
            if (in_cluster[static_cast<std::size_t>(x)] && in_cluster[static_cast<std::size_t>(y)])
              out.set_close(x, y, true);
        break;
      }
      case BlockRelAction::Kind::kSeparate: {
        out.set_close(a.i, a.j, false);
        out.set_above(a.i, a.j, false);
        out.set_above(a.j, a.i, false);
        break;
      }
      case BlockRelAction::Kind::kStack: {
        if (c.carries(a.i)) return c;   // something rests on the moved block
        if (c.carries(a.j)) return c;   // target already has a block on top
        if (c.stacked(a.j)) return c;   // no stacks of three
        // Lift the moved block out of its current relations.
        for (int k = 0; k < 3; ++k) {
          if (k == a.i) continue;
          out.set_close(a.i, k, false);
          out.set_above(a.i, k, false);
        }
        out.set_close(a.i, a.j, true);
        out.set_above(a.i, a.j, true);
        // Landing on a block with a flat neighbor makes a pyramid.
        for (int k = 0; k < 3; ++k) {
          if (k == a.i || k == a.j) continue;
          if (out.close(a.j, k) && !out.stacked(k) && !out.carries(k)) {
            out.set_close(a.i, k, true);
            out.set_above(a.i, k, true);
          }
        }
        break;
      }
      case BlockRelAction::Kind::kUnstack: {
        // The block steps down beside its former support(s); proximity stays.
        for (int k = 0; k < 3; ++k)
          if (k != a.i) out.set_above(a.i, k, false);
        break;
      }
    }
    return is_valid_config(out) ? out : c;
  }

  /// Breadth-first closure of the dynamics from the all-false configuration.
  /// Deterministic order: all-false first, then discovery order over action ids.
  const std::vector<PredicateVector>& valid_configs() const { return configs_; }

  int config_index(PredicateVector v) const {
    auto it = config_index_.find(v.bits());
    if (it == config_index_.end()) throw std::invalid_argument("blockrel: config not reachable");
    return it->second;
  }

  bool reachable(PredicateVector v) const { return config_index_.count(v.bits()) != 0; }

  /// One goal per reachable configuration except the all-false one (an empty
  /// demonstration target is degenerate for inference).
  int num_goals() const { return static_cast<int>(configs_.size()) - 1; }

  std::vector<GoalId> goal_space() const {
    std::vector<GoalId> out;
    out.reserve(static_cast<std::size_t>(num_goals()));
    for (int g = 0; g < num_goals(); ++g) out.push_back(GoalId{g});
    return out;
  }

  PredicateVector goal_config(GoalId g) const {
    if (g.index < 0 || g.index >= num_goals()) throw std::invalid_argument("blockrel: bad goal");
    return configs_[static_cast<std::size_t>(g.index) + 1];
  }

  std::optional<GoalId> goal_of_config(PredicateVector v) const {
    auto it = config_index_.find(v.bits());
    if (it == config_index_.end() || it->second == 0) return std::nullopt;
    return GoalId{it->second - 1};
  }

  int reward(PredicateVector current, GoalId g) const {
    return blockrel_reward(current, goal_config(g));
  }

  int max_reward() const { return kBlockRelMaxReward; }

  /// Goals fully satisfied by a final configuration (reward 3), sorted.
  std::vector<GoalId> achieved_goals(std::span<const Action>, const State& final_state) const {
    return achieved_goals(final_state.config);
  }

  std::vector<GoalId> achieved_goals(PredicateVector final_config) const {
    std::vector<GoalId> out;
    for (int g = 0; g < num_goals(); ++g)
      if (blockrel_reward(final_config, goal_config(GoalId{g})) == kBlockRelMaxReward)
        out.push_back(GoalId{g});
    return out;
  }

  /// The goal identified with the final configuration itself (used for
  /// hindsight relabeling and goal discovery).
  std::optional<GoalId> achieved_goal(const State& final_state) const {
    return goal_of_config(final_state.config);
  }

  std::string goal_name(GoalId g) const { return goal_config(g).to_string(); }

  // Feature tokens for the demonstration classifier.
  std::string state_token(const State& s) const { return "c:" + s.config.to_string(); }
  std::string action_token(Action a) const { return BlockRelAction::decode(a).to_string(); }

 private:
  void enumerate() {
    configs_.clear();
    config_index_.clear();
    std::deque<std::pair<PredicateVector, int>> frontier;
    auto visit = [&](PredicateVector v, int depth) {
      if (config_index_.count(v.bits())) return;
      config_index_[v.bits()] = static_cast<int>(configs_.size());
      configs_.push_back(v);
      frontier.emplace_back(v, depth);
    };
    visit(PredicateVector{}, 0);
    while (!frontier.empty()) {
      auto [v, depth] = frontier.front();
      frontier.pop_front();
      if (depth >= horizon_) continue;
      for (int a = 0; a < kNumActions; ++a) visit(apply(v, a), depth + 1);
    }
  }

  int horizon_;
  std::vector<PredicateVector> configs_;
  std::map<std::uint16_t, int> config_index_;
};

}  // namespace pedprag
