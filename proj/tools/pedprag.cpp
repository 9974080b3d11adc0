// Experiment runner for the teacher/learner goal-inference suite.
//
// Subcommands: run, matrix, report, enumerate-goals, validate-config.
// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pedprag/config.hpp"
#include "pedprag/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

/// Relative output directories resolve under PEDPRAG_OUTPUT_ROOT when set.
void resolve_output_root(pedprag::ExperimentConfig& cfg) {
  const char* root = std::getenv("PEDPRAG_OUTPUT_ROOT");
  if (root && *root && std::filesystem::path(cfg.output_dir).is_relative())
    cfg.output_dir = (std::filesystem::path(root) / cfg.output_dir).string();
}

std::string resolve_dir(const std::string& dir) {
  const char* root = std::getenv("PEDPRAG_OUTPUT_ROOT");
  if (root && *root && std::filesystem::path(dir).is_relative())
    return (std::filesystem::path(root) / dir).string();
  return dir;
}

int cmd_run(const std::string& config_path, bool force, int jobs) {
  pedprag::ExperimentConfig cfg;
  try {
    cfg = pedprag::ExperimentConfig::load(config_path);
  } catch (const pedprag::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  resolve_output_root(cfg);
  try {
    std::cout << "run " << cfg.name << " (" << pedprag::env_name(cfg.env) << ", "
              << cfg.teacher_name() << " + " << cfg.learner_name() << ", "
              << pedprag::variant_name(cfg.variant) << ", budget " << cfg.demo_budget << ")\n";
    pedprag::RunResult r = pedprag::run_experiment(cfg, force, jobs, &std::cout);
    std::cout << "results written to " << r.root.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_matrix(const std::string& config_path, const std::string& out,
               std::vector<std::string> teachers, std::vector<std::string> learners,
               std::vector<int> budgets, std::vector<std::uint64_t> seeds, bool force, int jobs) {
  pedprag::ExperimentConfig base;
  try {
    base = pedprag::ExperimentConfig::load(config_path);
    for (const std::string& t : teachers)
      if (t != "naive" && t != "pedagogical")
        throw pedprag::ConfigError("--teachers entries must be naive or pedagogical");
    for (const std::string& l : learners)
      if (l != "literal" && l != "pragmatic")
        throw pedprag::ConfigError("--learners entries must be literal or pragmatic");
  } catch (const pedprag::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  pedprag::MatrixAxes axes;
  if (!teachers.empty()) axes.teachers = teachers;
  if (!learners.empty()) axes.learners = learners;
  axes.budgets = budgets;
  axes.seeds = seeds;
  try {
    std::vector<pedprag::MatrixCellResult> cells =
        pedprag::run_matrix(base, axes, resolve_dir(out), force, jobs, &std::cout);
    bool any_failed = false;
    for (const auto& c : cells) any_failed |= c.failed;
    std::cout << "matrix summary written to " << resolve_dir(out) << "\n";
    return any_failed ? kExitRuntime : kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_report(const std::string& dir) {
  try {
    return pedprag::report_results(resolve_dir(dir), std::cout) == 0 ? kExitOk : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_enumerate_goals(const std::string& env, int horizon, const std::string& json_out) {
  try {
    nlohmann::json j;
    if (env == "dtb") {
      pedprag::DtbEnv e;
      for (pedprag::GoalId g : e.goal_space()) {
        j[std::to_string(g.index)] = pedprag::DtbEnv::goal_name(g);
        std::cout << g.index << "\t" << pedprag::DtbEnv::goal_name(g) << "\n";
      }
    } else if (env == "blockrel") {
      pedprag::BlockRelEnv e(horizon);
      for (pedprag::GoalId g : e.goal_space()) {
        j[std::to_string(g.index)] = e.goal_name(g);
        std::cout << g.index << "\t" << e.goal_name(g) << "\n";
      }
    } else {
      std::cerr << "config error: --env must be dtb or blockrel\n";
      return kExitConfig;
    }
    if (!json_out.empty()) {
      std::ofstream out(json_out);
      if (!out) throw std::runtime_error("cannot write " + json_out);
      out << j.dump(2) << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_validate(const std::string& config_path) {
  try {
    pedprag::ExperimentConfig cfg = pedprag::ExperimentConfig::load(config_path);
    std::cout << "ok: " << config_path << " (hash " << cfg.hash() << ")\n";
    return kExitOk;
  } catch (const pedprag::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher/learner training with Bayesian goal inference"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results", report_dir = "results";
  std::string enum_env = "blockrel", enum_json;
  int horizon = 5, jobs = 0;
  bool force = false;
  std::vector<std::string> teachers, learners;
  std::vector<int> budgets;
  std::vector<std::uint64_t> seeds;

  CLI::App* run = app.add_subcommand("run", "Run one experiment config across its seeds");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_flag("--force", force, "overwrite existing results");
  run->add_option("--jobs", jobs, "parallel seed workers (default: hardware)");

  CLI::App* matrix = app.add_subcommand("matrix", "Run the teacher x learner x budget grid");
  matrix->add_option("--config", config_path, "template config (JSON)")->required();
  matrix->add_option("--out", out_dir, "output root for all cells");
  matrix->add_option("--teachers", teachers, "teacher axis (default naive,pedagogical)")->delimiter(',');
  matrix->add_option("--learners", learners, "learner axis (default literal,pragmatic)")->delimiter(',');
  matrix->add_option("--budgets", budgets, "demo budget axis (default: template budget)")->delimiter(',');
  matrix->add_option("--seeds", seeds, "seed axis (default: template seeds)")->delimiter(',');
  matrix->add_flag("--force", force, "overwrite existing results");
  matrix->add_option("--jobs", jobs, "parallel seed workers");

  CLI::App* report = app.add_subcommand("report", "Summarize result directories");
  report->add_option("--dir", report_dir, "directory to scan");

  CLI::App* enumerate = app.add_subcommand("enumerate-goals", "Print an environment's goal space");
  enumerate->add_option("--env", enum_env, "dtb or blockrel");
  enumerate->add_option("--horizon", horizon, "block environment horizon");
  enumerate->add_option("--json", enum_json, "also write a JSON mapping to this path");

  CLI::App* validate = app.add_subcommand("validate-config", "Strictly validate a config file");
  validate->add_option("--config", config_path, "experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, force, jobs);
  if (matrix->parsed())
    return cmd_matrix(config_path, out_dir, teachers, learners, budgets, seeds, force, jobs);
  if (report->parsed()) return cmd_report(report_dir);
  if (enumerate->parsed()) return cmd_enumerate_goals(enum_env, horizon, enum_json);
  if (validate->parsed()) return cmd_validate(config_path);
  return kExitRuntime;
}
