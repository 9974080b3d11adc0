#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pedprag/rng.hpp"

namespace pedprag {

/// Index into an environment's enumerated goal set. Equality is index equality.
struct GoalId {
  int index = -1;

  constexpr GoalId() = default;
  constexpr explicit GoalId(int idx) : index(idx) {}

  auto operator<=>(const GoalId&) const = default;
};

/// Ordered set of goals discovered during training. Starts with a single seed
/// goal and only grows; append order is deterministic.
class GoalSetTracker {
 public:
  GoalSetTracker(int num_goals, GoalId first)
      : present_(static_cast<std::size_t>(num_goals), 0) {
    if (first.index < 0 || first.index >= num_goals)
      throw std::invalid_argument("GoalSetTracker: first goal out of range");
    add(first);
  }

  bool contains(GoalId g) const {
    return g.index >= 0 && g.index < static_cast<int>(present_.size()) &&
           present_[static_cast<std::size_t>(g.index)] != 0;
  }

  void add(GoalId g) {
    if (g.index < 0 || g.index >= static_cast<int>(present_.size()))
      throw std::invalid_argument("GoalSetTracker: goal out of range");
    if (!present_[static_cast<std::size_t>(g.index)]) {
      present_[static_cast<std::size_t>(g.index)] = 1;
      discovered_.push_back(g);
    }
  }

  const std::vector<GoalId>& discovered() const { return discovered_; }
  std::size_t size() const { return discovered_.size(); }
  bool complete() const { return discovered_.size() == present_.size(); }

  GoalId sample(Rng& rng) const {
    return discovered_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(discovered_.size())))];
  }

 private:
  std::vector<GoalId> discovered_;
  std::vector<char> present_;
};

}  // namespace pedprag
