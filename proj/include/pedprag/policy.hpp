#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "pedprag/blockrel.hpp"
#include "pedprag/dtb.hpp"
#include "pedprag/goal.hpp"
#include "pedprag/rng.hpp"

namespace pedprag {

namespace detail {

/// Clamp every entry to at least `floor` and rescale the rest so the vector
/// stays on the simplex with the floored entries exactly at the floor.
template <std::size_t N>
inline void enforce_floor(std::array<double, N>& p, double floor) {
  for (int pass = 0; pass < static_cast<int>(N); ++pass) {
    double fixed_mass = 0.0, free_mass = 0.0;
    bool any_low = false;
    for (double v : p) {
      if (v <= floor) {
        fixed_mass += floor;
        if (v < floor) any_low = true;
      } else {
        free_mass += v;
      }
    }
    if (!any_low) break;
    double scale = (1.0 - fixed_mass) / free_mass;
    for (double& v : p) v = (v <= floor) ? floor : v * scale;
  }
}

}  // namespace detail

/// Goal-conditioned two-stage categorical policy for "Draw two balls":
/// a per-goal distribution over the first pick and a per-(goal, first pick)
/// distribution over the second. All probabilities are kept at or above a
/// floor so no trajectory ever has zero likelihood under any goal.
class DtbPolicy {
 public:
  using State = DtbState;
  using Action = Ball;

  explicit DtbPolicy(double eps_p = 1e-4) : eps_p_(eps_p) {
    if (eps_p <= 0.0 || eps_p >= 1.0 / kDtbNumColors)
      throw std::invalid_argument("DtbPolicy: eps_p out of range");
    const std::array<double, 3> uniform = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    for (auto& row : p_first_) row = uniform;
    for (auto& per_goal : p_second_)
      for (auto& row : per_goal) row = uniform;
  }

  double eps_p() const { return eps_p_; }

  double action_prob(const State& s, GoalId g, Action a) const {
    return row(s, g)[static_cast<std::size_t>(a)];
  }

  double log_action_prob(const State& s, GoalId g, Action a) const {
    return std::log(action_prob(s, g, a));
  }

  Action sample_action(const State& s, GoalId g, Rng& rng) const {
    const auto& r = row(s, g);
    return static_cast<Action>(rng.categorical(std::span<const double>(r.data(), r.size())));
  }

  /// Multiplicative update on a completed two-pick trajectory: on success the
  /// two selected probabilities grow by (1+alpha) with the other entries
  /// rescaled to the remaining mass; on failure they shrink by (1-alpha).
  /// A granted inference bonus applies the success update a second time.
  void update(std::span<const Action> actions, GoalId g, bool success, bool inference_bonus,
              double alpha) {
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("DtbPolicy: alpha must be in (0,1)");
    if (actions.size() != 2) throw std::invalid_argument("DtbPolicy: trajectory must have two picks");
    int reps = (success && inference_bonus) ? 2 : 1;
    double factor = success ? 1.0 + alpha : 1.0 - alpha;
    for (int r = 0; r < reps; ++r) {
      reweight(p_first_[goal_index(g)], static_cast<int>(actions[0]), factor);
      reweight(p_second_[goal_index(g)][static_cast<std::size_t>(actions[0])],
               static_cast<int>(actions[1]), factor);
    }
  }

  /// Pull a conditional toward a target action: p <- (1-beta) p + beta one_hot.
  void mix_toward(const State& s, GoalId g, Action a, double beta) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("DtbPolicy: beta out of range");
    auto& r = mutable_row(s, g);
    for (std::size_t k = 0; k < r.size(); ++k)
      r[k] = (1.0 - beta) * r[k] + (k == static_cast<std::size_t>(a) ? beta : 0.0);
    detail::enforce_floor(r, eps_p_);
  }

  const std::array<double, 3>& first_row(GoalId g) const { return p_first_[goal_index(g)]; }
  const std::array<double, 3>& second_row(GoalId g, Ball first) const {
    return p_second_[goal_index(g)][static_cast<std::size_t>(first)];
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "dtb-policy.v1";
    j["eps_p"] = eps_p_;
    j["p_first"] = p_first_;
    j["p_second"] = p_second_;
    return j;
  }

  static DtbPolicy from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != "dtb-policy.v1")
      throw std::invalid_argument("DtbPolicy: unknown snapshot format");
    DtbPolicy p(j.at("eps_p").get<double>());
    j.at("p_first").get_to(p.p_first_);
    j.at("p_second").get_to(p.p_second_);
    return p;
  }

 private:
  static std::size_t goal_index(GoalId g) {
    if (g.index < 0 || g.index >= DtbEnv::kNumGoals) throw std::invalid_argument("DtbPolicy: bad goal");
    return static_cast<std::size_t>(g.index);
  }

  const std::array<double, 3>& row(const State& s, GoalId g) const {
    if (s.step == 0) return p_first_[goal_index(g)];
    if (s.step == 1) return p_second_[goal_index(g)][static_cast<std::size_t>(*s.first)];
    throw std::invalid_argument("DtbPolicy: terminal state has no actions");
  }

  std::array<double, 3>& mutable_row(const State& s, GoalId g) {
    return const_cast<std::array<double, 3>&>(row(s, g));
  }

  void reweight(std::array<double, 3>& p, int idx, double factor) {
    double cap = 1.0 - eps_p_ * (kDtbNumColors - 1);
    double old = p[static_cast<std::size_t>(idx)];
    double next = std::clamp(old * factor, eps_p_, cap);
    double rest_old = 1.0 - old;
    double rest_new = 1.0 - next;
    if (rest_old > 0.0) {
      double scale = rest_new / rest_old;
      for (std::size_t k = 0; k < p.size(); ++k)
        if (k != static_cast<std::size_t>(idx)) p[k] *= scale;
    }
    p[static_cast<std::size_t>(idx)] = next;
    detail::enforce_floor(p, eps_p_);
  }

  double eps_p_;
  std::array<std::array<double, 3>, 3> p_first_;                 // [goal][color]
  std::array<std::array<std::array<double, 3>, 3>, 3> p_second_; // [goal][first][color]
};

/// Tabular soft-greedy policy: pi(a|s,g) = softmax(q[s,g,.] / temperature).
/// Rows absent from the table read as all-zero, i.e. a uniform policy, so the
/// distribution has full support everywhere by construction.
class BoltzmannQPolicy {
 public:
  using State = BlockRelState;
  using Action = int;

  BoltzmannQPolicy(int num_actions, double temperature)
      : num_actions_(num_actions), temperature_(temperature) {
    if (num_actions_ < 1) throw std::invalid_argument("BoltzmannQPolicy: need at least one action");
    if (temperature_ <= 0.0) throw std::invalid_argument("BoltzmannQPolicy: temperature must be positive");
  }

  int num_actions() const { return num_actions_; }
  double temperature() const { return temperature_; }

  // --- raw (state key, goal) interface ---

  std::vector<double> action_probs_raw(std::uint16_t state, int goal) const {
    const std::vector<double>* q = find_row(state, goal);
    std::vector<double> p(static_cast<std::size_t>(num_actions_));
    if (!q) {
      std::fill(p.begin(), p.end(), 1.0 / num_actions_);
      return p;
    }
    double maxq = *std::max_element(q->begin(), q->end());
    double total = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      p[a] = std::exp(((*q)[a] - maxq) / temperature_);
      total += p[a];
    }
    for (double& v : p) v /= total;
    return p;
  }

  double log_action_prob_raw(std::uint16_t state, int goal, int action) const {
    check_action(action);
    const std::vector<double>* q = find_row(state, goal);
    if (!q) return -std::log(static_cast<double>(num_actions_));
    double maxq = *std::max_element(q->begin(), q->end());
    double lse = 0.0;
    for (double v : *q) lse += std::exp((v - maxq) / temperature_);
    return ((*q)[static_cast<std::size_t>(action)] - maxq) / temperature_ - std::log(lse);
  }

  double q_value(std::uint16_t state, int goal, int action) const {
    check_action(action);
    const std::vector<double>* q = find_row(state, goal);
    return q ? (*q)[static_cast<std::size_t>(action)] : 0.0;
  }

  double max_q(std::uint16_t state, int goal) const {
    const std::vector<double>* q = find_row(state, goal);
    return q ? *std::max_element(q->begin(), q->end()) : 0.0;
  }

  /// One-step temporal-difference backup.
  void td_update(std::uint16_t state, int goal, int action, double reward,
                 std::uint16_t next_state, bool done, double gamma, double lr) {
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("BoltzmannQPolicy: gamma must be in [0,1)");
    if (lr <= 0.0 || lr > 1.0) throw std::invalid_argument("BoltzmannQPolicy: lr must be in (0,1]");
    check_action(action);
    double target = reward + (done ? 0.0 : gamma * max_q(next_state, goal));
    std::vector<double>& row = mutable_row(state, goal);
    double& q = row[static_cast<std::size_t>(action)];
    q += lr * (target - q);
  }

  /// Move the conditional at one state toward a target action in probability
  /// space: p' = (1-beta) p + beta one_hot, realized as q = tau log p'.
  void pull_toward(std::uint16_t state, int goal, int action, double beta) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("BoltzmannQPolicy: beta out of range");
    check_action(action);
    std::vector<double> p = action_probs_raw(state, goal);
    std::vector<double>& row = mutable_row(state, goal);
    for (std::size_t a = 0; a < p.size(); ++a) {
      double mixed = (1.0 - beta) * p[a] + (a == static_cast<std::size_t>(action) ? beta : 0.0);
      row[a] = temperature_ * std::log(mixed);
    }
  }

  // --- environment-typed interface ---

  static std::uint16_t state_key(const State& s) { return s.config.bits(); }

  double action_prob(const State& s, GoalId g, Action a) const {
    return action_probs_raw(state_key(s), g.index)[static_cast<std::size_t>(a)];
  }
  double log_action_prob(const State& s, GoalId g, Action a) const {
    return log_action_prob_raw(state_key(s), g.index, a);
  }
  Action sample_action(const State& s, GoalId g, Rng& rng) const {
    std::vector<double> p = action_probs_raw(state_key(s), g.index);
    return rng.categorical(p);
  }

  std::size_t table_size() const { return q_.size(); }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [key, row] : q_) {
      rows.push_back({key >> 16, key & 0xffffu, row});
    }
    nlohmann::json j;
    j["format"] = "boltzmann-q.v1";
    j["num_actions"] = num_actions_;
    j["temperature"] = temperature_;
    j["q"] = std::move(rows);
    return j;
  }

  static BoltzmannQPolicy from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != "boltzmann-q.v1")
      throw std::invalid_argument("BoltzmannQPolicy: unknown snapshot format");
    BoltzmannQPolicy p(j.at("num_actions").get<int>(), j.at("temperature").get<double>());
    for (const auto& entry : j.at("q")) {
      std::uint16_t state = entry.at(0).get<std::uint16_t>();
      int goal = entry.at(1).get<int>();
      p.mutable_row(state, goal) = entry.at(2).get<std::vector<double>>();
    }
    return p;
  }

 private:
  static std::uint32_t key(std::uint16_t state, int goal) {
    if (goal < 0 || goal > 0xffff) throw std::invalid_argument("BoltzmannQPolicy: bad goal");
    return (static_cast<std::uint32_t>(state) << 16) | static_cast<std::uint32_t>(goal);
  }

  void check_action(int a) const {
    if (a < 0 || a >= num_actions_) throw std::invalid_argument("BoltzmannQPolicy: bad action");
  }

  const std::vector<double>* find_row(std::uint16_t state, int goal) const {
    auto it = q_.find(key(state, goal));
    return it == q_.end() ? nullptr : &it->second;
  }

  std::vector<double>& mutable_row(std::uint16_t state, int goal) {
    auto [it, inserted] = q_.try_emplace(key(state, goal));
    if (inserted) it->second.assign(static_cast<std::size_t>(num_actions_), 0.0);
    return it->second;
  }

  int num_actions_;
  double temperature_;
  std::map<std::uint32_t, std::vector<double>> q_;
};

}  // namespace pedprag
