#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedprag/bgi.hpp"
#include "pedprag/goal.hpp"

namespace pedprag {

/// Order-insensitive demonstration summary: (state, action) occurrence
/// counts, the true predicates of the final configuration, and an action
/// histogram. Extraction is deterministic.
struct TrajectoryFeatures {
  std::map<std::string, int> counts;

  template <class Env>
  static TrajectoryFeatures extract(const Env& env, const Demonstration<Env>& demo) {
    if (demo.steps.empty()) throw std::invalid_argument("features: empty demonstration");
    TrajectoryFeatures f;
    for (const auto& [state, action] : demo.steps) {
      f.counts["sa|" + env.state_token(state) + "|" + env.action_token(action)] += 1;
      f.counts["a|" + env.action_token(action)] += 1;
    }
    typename Env::State final_state = demo.steps.back().first;
    final_state = env.step(final_state, demo.steps.back().second);
    f.counts["fin|" + env.state_token(final_state)] += 1;
    return f;
  }
};

/// Demonstration -> goal classifier: a smoothed multinomial count model over
/// the feature vocabulary (Laplace alpha = 1). Closed-form fit, no training
/// randomness, so comparisons against policy-based inference are clean.
class GoalClassifier {
 public:
  void fit(std::span<const std::pair<TrajectoryFeatures, GoalId>> labeled, int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("classifier: need at least one class");
    std::vector<std::map<std::string, int>> class_counts(static_cast<std::size_t>(num_classes));
    std::vector<int> class_total(static_cast<std::size_t>(num_classes), 0);
    std::vector<int> class_demos(static_cast<std::size_t>(num_classes), 0);
    std::map<std::string, int> vocab;
    for (const auto& [features, goal] : labeled) {
      if (goal.index < 0 || goal.index >= num_classes)
        throw std::invalid_argument("classifier: label out of range");
      class_demos[static_cast<std::size_t>(goal.index)] += 1;
      for (const auto& [token, count] : features.counts) {
        class_counts[static_cast<std::size_t>(goal.index)][token] += count;
        class_total[static_cast<std::size_t>(goal.index)] += count;
        vocab.try_emplace(token, 0);
      }
    }
    for (int g = 0; g < num_classes; ++g)
      if (class_demos[static_cast<std::size_t>(g)] == 0)
        throw std::invalid_argument("classifier: class with no demonstrations");

    num_classes_ = num_classes;
    vocab_size_ = static_cast<int>(vocab.size());
    log_theta_.assign(static_cast<std::size_t>(num_classes), {});
    log_unseen_.assign(static_cast<std::size_t>(num_classes), 0.0);
    log_prior_.assign(static_cast<std::size_t>(num_classes), 0.0);
    const double total_demos = static_cast<double>(labeled.size());
    for (int g = 0; g < num_classes; ++g) {
      auto gi = static_cast<std::size_t>(g);
      // +1 in the denominator reserves smoothed mass for unseen tokens.
      double denom = class_total[gi] + static_cast<double>(vocab_size_) + 1.0;
      for (const auto& [token, _] : vocab) {
        auto it = class_counts[gi].find(token);
        int c = it == class_counts[gi].end() ? 0 : it->second;
        log_theta_[gi][token] = std::log((c + 1.0) / denom);
      }
      log_unseen_[gi] = std::log(1.0 / denom);
      log_prior_[gi] = std::log(class_demos[gi] / total_demos);
    }
    fitted_ = true;
  }

  /// Most probable class, lowest index on ties.
  GoalId predict(const TrajectoryFeatures& features) const {
    const std::vector<double> scores = log_scores(features);
    std::size_t best = 0;
    for (std::size_t g = 1; g < scores.size(); ++g)
      if (scores[g] > scores[best]) best = g;
    return GoalId{static_cast<int>(best)};
  }

  /// Normalized class distribution (max-shifted softmax of log scores).
  std::vector<double> predict_proba(const TrajectoryFeatures& features) const {
    std::vector<double> scores = log_scores(features);
    double shift = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) {
      s = std::exp(s - shift);
      total += s;
    }
    for (double& s : scores) s /= total;
    return scores;
  }

  bool fitted() const { return fitted_; }
  int num_classes() const { return num_classes_; }

 private:
  std::vector<double> log_scores(const TrajectoryFeatures& features) const {
    if (!fitted_) throw std::logic_error("classifier: predict before fit");
    std::vector<double> scores(log_prior_);
    for (const auto& [token, count] : features.counts) {
      for (std::size_t g = 0; g < scores.size(); ++g) {
        auto it = log_theta_[g].find(token);
        scores[g] += count * (it == log_theta_[g].end() ? log_unseen_[g] : it->second);
      }
    }
    return scores;
  }

  bool fitted_ = false;
  int num_classes_ = 0;
  int vocab_size_ = 0;
  std::vector<std::map<std::string, double>> log_theta_;
  std::vector<double> log_unseen_;
  std::vector<double> log_prior_;
};

}  // namespace pedprag
