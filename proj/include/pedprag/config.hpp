#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedprag/training.hpp"

namespace pedprag {

/// Thrown for any malformed or out-of-range experiment configuration; carries
/// a field path or line diagnostic.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class EnvKind { kDtb, kBlockRel };

inline std::string env_name(EnvKind e) { return e == EnvKind::kDtb ? "dtb" : "blockrel"; }

struct EvalSettings {
  int eval_every = 100;
  int n_curve_demos = 10;
  int n_curve_rollouts = 10;
  int n_test_demos_per_goal = 50;
  int n_test_rollouts_per_goal = 50;
  int ambiguity_samples = 500;
};

/// Declarative description of one experiment: environment, agent pair,
/// variant, demonstration budget, epochs, seeds and hyperparameters.
/// Parsing is strict: unknown keys and out-of-range values are rejected.
struct ExperimentConfig {
  std::string name = "experiment";
  EnvKind env = EnvKind::kDtb;
  AgentRole::Kind teacher = AgentRole::Kind::kNaiveTeacher;
  AgentRole::Kind learner = AgentRole::Kind::kLiteralLearner;
  Variant variant = Variant::kOurs;
  int demo_budget = 20;
  int teacher_epochs = 4000;
  int epochs = 3000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  Hyper hyper;
  EvalSettings eval;
  std::string output_dir = "results";

  AgentRole teacher_role() const {
    return teacher == AgentRole::Kind::kPedagogicalTeacher
               ? AgentRole::pedagogical_teacher(hyper.bonus)
               : AgentRole::naive_teacher();
  }
  AgentRole learner_role() const {
    return learner == AgentRole::Kind::kPragmaticLearner ? AgentRole::pragmatic_learner(hyper.bonus)
                                                         : AgentRole::literal_learner();
  }

  std::string teacher_name() const {
    return teacher == AgentRole::Kind::kPedagogicalTeacher ? "pedagogical" : "naive";
  }
  std::string learner_name() const {
    return learner == AgentRole::Kind::kPragmaticLearner ? "pragmatic" : "literal";
  }

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);

  /// FNV-1a over the canonical serialization minus the output location;
  /// stable across machines for identical configs.
  std::string hash() const;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw ConfigError("unknown field \"" + where + key + "\"");
  }
}

template <class T>
T get_field(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("field \"" + where + key + "\" has the wrong type");
  }
}

inline void require_range(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("field \"" + field + "\" " + what);
}

}  // namespace detail

inline nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["env"] = env_name(env);
  j["teacher"] = teacher_name();
  j["learner"] = learner_name();
  j["variant"] = variant_name(variant);
  j["demo_budget"] = demo_budget;
  j["teacher_epochs"] = teacher_epochs;
  j["epochs"] = epochs;
  j["seeds"] = seeds;
  j["hyperparameters"] = {{"tau", hyper.tau},
                          {"alpha", hyper.alpha},
                          {"lr", hyper.lr},
                          {"gamma", hyper.gamma},
                          {"bonus", hyper.bonus},
                          {"k_replay", hyper.k_replay},
                          {"rho_demo", hyper.rho_demo},
                          {"eps_p", hyper.eps_p},
                          {"horizon", hyper.horizon},
                          {"batch_size", hyper.batch_size},
                          {"buffer_capacity", hyper.buffer_capacity},
                          {"bc_beta", hyper.bc_beta},
                          {"demo_attempt_cap", hyper.demo_attempt_cap}};
  j["evaluation"] = {{"eval_every", eval.eval_every},
                     {"n_curve_demos", eval.n_curve_demos},
                     {"n_curve_rollouts", eval.n_curve_rollouts},
                     {"n_test_demos_per_goal", eval.n_test_demos_per_goal},
                     {"n_test_rollouts_per_goal", eval.n_test_rollouts_per_goal},
                     {"ambiguity_samples", eval.ambiguity_samples}};
  j["output_dir"] = output_dir;
  return j;
}

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  detail::reject_unknown_keys(j,
                              {"name", "env", "teacher", "learner", "variant", "demo_budget",
                               "teacher_epochs", "epochs", "seeds", "hyperparameters", "evaluation",
                               "output_dir"},
                              "");
  ExperimentConfig c;
  c.name = detail::get_field<std::string>(j, "name", c.name, "");

  std::string env = detail::get_field<std::string>(j, "env", "dtb", "");
  if (env == "dtb")
    c.env = EnvKind::kDtb;
  else if (env == "blockrel")
    c.env = EnvKind::kBlockRel;
  else
    throw ConfigError("field \"env\" must be \"dtb\" or \"blockrel\"");

  std::string teacher = detail::get_field<std::string>(j, "teacher", "naive", "");
  if (teacher == "naive")
    c.teacher = AgentRole::Kind::kNaiveTeacher;
  else if (teacher == "pedagogical")
    c.teacher = AgentRole::Kind::kPedagogicalTeacher;
  else
    throw ConfigError("field \"teacher\" must be \"naive\" or \"pedagogical\"");

  std::string learner = detail::get_field<std::string>(j, "learner", "literal", "");
  if (learner == "literal")
    c.learner = AgentRole::Kind::kLiteralLearner;
  else if (learner == "pragmatic")
    c.learner = AgentRole::Kind::kPragmaticLearner;
  else
    throw ConfigError("field \"learner\" must be \"literal\" or \"pragmatic\"");

  std::string variant = detail::get_field<std::string>(j, "variant", "ours", "");
  if (variant == "ours")
    c.variant = Variant::kOurs;
  else if (variant == "B1")
    c.variant = Variant::kB1;
  else if (variant == "B2")
    c.variant = Variant::kB2;
  else if (variant == "B3")
    c.variant = Variant::kB3;
  else
    throw ConfigError("field \"variant\" must be one of \"ours\", \"B1\", \"B2\", \"B3\"");

  c.demo_budget = detail::get_field<int>(j, "demo_budget", c.demo_budget, "");
  detail::require_range(c.demo_budget >= 0, "demo_budget", "must be >= 0");
  c.teacher_epochs = detail::get_field<int>(j, "teacher_epochs", c.teacher_epochs, "");
  detail::require_range(c.teacher_epochs >= 1, "teacher_epochs", "must be >= 1");
  c.epochs = detail::get_field<int>(j, "epochs", c.epochs, "");
  detail::require_range(c.epochs >= 1, "epochs", "must be >= 1");
  c.seeds = detail::get_field<std::vector<std::uint64_t>>(j, "seeds", c.seeds, "");
  detail::require_range(!c.seeds.empty(), "seeds", "must list at least one seed");

  if (j.contains("hyperparameters")) {
    const nlohmann::json& h = j.at("hyperparameters");
    if (!h.is_object()) throw ConfigError("field \"hyperparameters\" must be an object");
    detail::reject_unknown_keys(h,
                                {"tau", "alpha", "lr", "gamma", "bonus", "k_replay", "rho_demo",
                                 "eps_p", "horizon", "batch_size", "buffer_capacity", "bc_beta",
                                 "demo_attempt_cap"},
                                "hyperparameters.");
    const std::string w = "hyperparameters.";
    Hyper& hp = c.hyper;
    hp.tau = detail::get_field<double>(h, "tau", hp.tau, w);
    detail::require_range(hp.tau > 0.0, w + "tau", "must be positive");
    hp.alpha = detail::get_field<double>(h, "alpha", hp.alpha, w);
    detail::require_range(hp.alpha > 0.0 && hp.alpha < 1.0, w + "alpha", "must be in (0,1)");
    hp.lr = detail::get_field<double>(h, "lr", hp.lr, w);
    detail::require_range(hp.lr > 0.0 && hp.lr <= 1.0, w + "lr", "must be in (0,1]");
    hp.gamma = detail::get_field<double>(h, "gamma", hp.gamma, w);
    detail::require_range(hp.gamma >= 0.0 && hp.gamma < 1.0, w + "gamma", "must be in [0,1)");
    hp.bonus = detail::get_field<double>(h, "bonus", hp.bonus, w);
    detail::require_range(hp.bonus >= 0.0, w + "bonus", "must be >= 0");
    hp.k_replay = detail::get_field<int>(h, "k_replay", hp.k_replay, w);
    detail::require_range(hp.k_replay >= 0, w + "k_replay", "must be >= 0");
    hp.rho_demo = detail::get_field<double>(h, "rho_demo", hp.rho_demo, w);
    detail::require_range(hp.rho_demo >= 0.0 && hp.rho_demo <= 1.0, w + "rho_demo",
                          "must be in [0,1]");
    hp.eps_p = detail::get_field<double>(h, "eps_p", hp.eps_p, w);
    detail::require_range(hp.eps_p > 0.0 && hp.eps_p < 1.0 / 3.0, w + "eps_p",
                          "must be in (0, 1/3)");
    hp.horizon = detail::get_field<int>(h, "horizon", hp.horizon, w);
    detail::require_range(hp.horizon >= 1 && hp.horizon <= 64, w + "horizon",
                          "must be in [1, 64]");
    hp.batch_size = detail::get_field<int>(h, "batch_size", hp.batch_size, w);
    detail::require_range(hp.batch_size >= 1, w + "batch_size", "must be >= 1");
    hp.buffer_capacity = detail::get_field<int>(h, "buffer_capacity", hp.buffer_capacity, w);
    detail::require_range(hp.buffer_capacity >= 1, w + "buffer_capacity", "must be >= 1");
    hp.bc_beta = detail::get_field<double>(h, "bc_beta", hp.bc_beta, w);
    detail::require_range(hp.bc_beta >= 0.0 && hp.bc_beta <= 1.0, w + "bc_beta",
                          "must be in [0,1]");
    hp.demo_attempt_cap = detail::get_field<int>(h, "demo_attempt_cap", hp.demo_attempt_cap, w);
    detail::require_range(hp.demo_attempt_cap >= 1, w + "demo_attempt_cap", "must be >= 1");
  }

  if (j.contains("evaluation")) {
    const nlohmann::json& e = j.at("evaluation");
    if (!e.is_object()) throw ConfigError("field \"evaluation\" must be an object");
    detail::reject_unknown_keys(e,
                                {"eval_every", "n_curve_demos", "n_curve_rollouts",
                                 "n_test_demos_per_goal", "n_test_rollouts_per_goal",
                                 "ambiguity_samples"},
                                "evaluation.");
    const std::string w = "evaluation.";
    EvalSettings& ev = c.eval;
    ev.eval_every = detail::get_field<int>(e, "eval_every", ev.eval_every, w);
    detail::require_range(ev.eval_every >= 0, w + "eval_every", "must be >= 0");
    ev.n_curve_demos = detail::get_field<int>(e, "n_curve_demos", ev.n_curve_demos, w);
    detail::require_range(ev.n_curve_demos >= 1, w + "n_curve_demos", "must be >= 1");
    ev.n_curve_rollouts = detail::get_field<int>(e, "n_curve_rollouts", ev.n_curve_rollouts, w);
    detail::require_range(ev.n_curve_rollouts >= 1, w + "n_curve_rollouts", "must be >= 1");
    ev.n_test_demos_per_goal =
        detail::get_field<int>(e, "n_test_demos_per_goal", ev.n_test_demos_per_goal, w);
    detail::require_range(ev.n_test_demos_per_goal >= 1, w + "n_test_demos_per_goal",
                          "must be >= 1");
    ev.n_test_rollouts_per_goal =
        detail::get_field<int>(e, "n_test_rollouts_per_goal", ev.n_test_rollouts_per_goal, w);
    detail::require_range(ev.n_test_rollouts_per_goal >= 1, w + "n_test_rollouts_per_goal",
                          "must be >= 1");
    ev.ambiguity_samples = detail::get_field<int>(e, "ambiguity_samples", ev.ambiguity_samples, w);
    detail::require_range(ev.ambiguity_samples >= 1, w + "ambiguity_samples", "must be >= 1");
  }

  c.output_dir = detail::get_field<std::string>(j, "output_dir", c.output_dir, "");
  return c;
}

inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line/column diagnostic.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON parse error: " + e.what());
  }
  return from_json(j);
}

inline std::string ExperimentConfig::hash() const {
  nlohmann::json j = to_json();
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace pedprag
