#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "pedprag/classifier.hpp"
#include "pedprag/config.hpp"
#include "pedprag/metrics.hpp"
#include "pedprag/training.hpp"

namespace pedprag {

inline constexpr const char* kCurvesSchema = "pedprag-curves.v1";
inline constexpr const char* kMetricsSchema = "pedprag-metrics.v1";

/// Fit the count classifier on the same demonstration pool the learner saw
/// and score it on a fresh test set from the teacher, mirroring compute_gia.
template <class Env, class Policy>
double classifier_gia(const Env& env, const Policy& teacher, const DemoPool<Env>& pool,
                      std::span<const GoalId> goals, int n_test_per_goal, int attempt_cap,
                      Rng& rng) {
  std::vector<std::pair<TrajectoryFeatures, GoalId>> labeled;
  std::vector<GoalId> trainable;
  for (GoalId g : goals)
    if (pool.goal_available(g)) trainable.push_back(g);
  if (trainable.empty()) throw std::runtime_error("classifier_gia: empty demonstration pool");
  for (std::size_t k = 0; k < trainable.size(); ++k)
    for (const Demonstration<Env>& d :
         pool.per_goal[static_cast<std::size_t>(trainable[k].index)])
      labeled.emplace_back(TrajectoryFeatures::extract(env, d), GoalId{static_cast<int>(k)});
  GoalClassifier clf;
  clf.fit(labeled, static_cast<int>(trainable.size()));

  long correct = 0, total = 0;
  for (std::size_t k = 0; k < trainable.size(); ++k) {
    for (int t = 0; t < n_test_per_goal; ++t) {
      std::optional<Demonstration<Env>> d =
          successful_demo(env, teacher, trainable[k], attempt_cap, rng);
      if (!d) break;
      GoalId predicted = clf.predict(TrajectoryFeatures::extract(env, *d));
      correct += (predicted.index == static_cast<int>(k)) ? 1 : 0;
      ++total;
    }
  }
  if (total == 0) throw std::runtime_error("classifier_gia: no test demonstrations");
  return static_cast<double>(correct) / static_cast<double>(total);
}

/// One seed's full outcome: the final report plus the side metrics the result
/// tables need.
struct SeedOutcome {
  std::uint64_t seed = 0;
  MetricReport report;
  double teacher_ogia = 0.0;
  double teacher_gra = 0.0;
  double ambiguity_teacher = -1.0;  // block environment only
  double classifier_gia = -1.0;     // demo-budget runs only
  long accepted_demos = 0;
  long offered_demos = 0;
  double wall_seconds = 0.0;
  std::vector<CurveRow> teacher_curve;
  std::vector<CurveRow> learner_curve;
  nlohmann::json teacher_snapshot;
  nlohmann::json learner_snapshot;
};

struct RunResult {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<SeedOutcome> seeds;
  std::filesystem::path root;
};

namespace detail {

inline std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

template <class Env>
SeedOutcome run_seed_env(const Env& env, const ExperimentConfig& cfg, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  SeedOutcome out;
  out.seed = seed;
  const Hyper& hp = cfg.hyper;
  EvalSpec curve_spec{cfg.eval.eval_every, cfg.eval.n_curve_demos, cfg.eval.n_curve_rollouts};
  Rng final_rng = Rng(seed).fork(0xF17A1);

  const std::vector<GoalId> goals = env.goal_space();
  auto teacher = phase1_pretrain(env, cfg.teacher_role(), hp, cfg.teacher_epochs, curve_spec, seed);
  out.teacher_curve = teacher.curve;
  auto learner = phase2_train(env, teacher.policy, cfg.learner_role(), cfg.variant, cfg.demo_budget,
                              hp, cfg.epochs, curve_spec, seed);
  out.learner_curve = learner.curve;
  out.accepted_demos = learner.accepted_demos;
  out.offered_demos = learner.offered_demos;

  out.teacher_ogia = compute_ogia(env, teacher.policy, goals, cfg.eval.n_test_demos_per_goal,
                                  hp.demo_attempt_cap, final_rng);
  out.teacher_gra =
      compute_gra(env, teacher.policy, goals, cfg.eval.n_test_rollouts_per_goal, final_rng);
  out.report.seed = seed;
  out.report.n_test_demos_per_goal = cfg.eval.n_test_demos_per_goal;
  out.report.n_test_rollouts_per_goal = cfg.eval.n_test_rollouts_per_goal;
  out.report.gia = compute_gia(env, learner.policy, teacher.policy, goals,
                               cfg.eval.n_test_demos_per_goal, hp.demo_attempt_cap, final_rng);
  out.report.ogia = compute_ogia(env, learner.policy, goals, cfg.eval.n_test_demos_per_goal,
                                 hp.demo_attempt_cap, final_rng);
  out.report.gra =
      compute_gra(env, learner.policy, goals, cfg.eval.n_test_rollouts_per_goal, final_rng);
  out.report.gia_x_gra = out.report.gia * out.report.gra;

  if constexpr (std::is_same_v<Env, BlockRelEnv>) {
    Rng ambiguity_rng = Rng(seed).fork(0xA3B16);
    std::vector<AmbiguousSituation> situations = build_ambiguous_situations(env);
    out.ambiguity_teacher = ambiguity_score(env, teacher.policy, situations,
                                            cfg.eval.ambiguity_samples, hp.demo_attempt_cap,
                                            ambiguity_rng);
  }
  if (cfg.demo_budget > 0) {
    // Rebuild the exact pool the learner saw (same stream) for the
    // information-parity comparison.
    Rng pool_rng = Rng(seed).fork(0x9333);
    Rng classifier_rng = Rng(seed).fork(0xC1A55);
    DemoPool<Env> pool = generate_demo_pool(env, teacher.policy, goals, cfg.demo_budget,
                                            hp.demo_attempt_cap, pool_rng);
    out.classifier_gia = classifier_gia(env, teacher.policy, pool, goals,
                                        cfg.eval.n_test_demos_per_goal, hp.demo_attempt_cap,
                                        classifier_rng);
  }
  out.teacher_snapshot = teacher.policy.to_json();
  out.learner_snapshot = learner.policy.to_json();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.env == EnvKind::kDtb) return run_seed_env(DtbEnv{}, cfg, seed);
  return run_seed_env(BlockRelEnv{cfg.hyper.horizon}, cfg, seed);
}

inline void append_curve_rows(std::ostream& os, const std::vector<CurveRow>& rows,
                              std::uint64_t seed, const std::string& variant) {
  for (const CurveRow& r : rows) {
    os << r.epoch << ',' << seed << ',' << variant << ',' << format_rate(r.gia) << ','
       << format_rate(r.ogia) << ',' << format_rate(r.gra) << ','
       << format_rate(r.gia * r.gra) << '\n';
  }
}

inline nlohmann::json seed_outcome_json(const SeedOutcome& s, const std::string& seed_dir) {
  nlohmann::json j = s.report.to_json();
  j["teacher_ogia"] = s.teacher_ogia;
  j["teacher_gra"] = s.teacher_gra;
  if (s.ambiguity_teacher >= 0.0) j["ambiguity_teacher"] = s.ambiguity_teacher;
  if (s.classifier_gia >= 0.0) j["classifier_gia"] = s.classifier_gia;
  j["accepted_demos"] = s.accepted_demos;
  j["offered_demos"] = s.offered_demos;
  j["wall_seconds"] = s.wall_seconds;
  j["artifacts"] = {{"teacher_snapshot", seed_dir + "/teacher.snapshot"},
                    {"learner_snapshot", seed_dir + "/learner.snapshot"}};
  return j;
}

inline void aggregate_stat(nlohmann::json& agg, const char* key, const std::vector<double>& v) {
  if (v.empty()) return;
  agg[key] = {{"mean", mean_of(v)}, {"std", std_of(v)}};
}

}  // namespace detail

/// Execute every seed of a config and persist config, curves, metrics and
/// policy snapshots under `<output_dir>/<name>`. Existing results are only
/// overwritten with `force`. Seeds run in parallel worker slots; all outputs
/// are deterministic functions of (config, seed).
inline RunResult run_experiment(const ExperimentConfig& cfg, bool force = false, int jobs = 0,
                                std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  RunResult result;
  result.config = cfg;
  result.config_hash = cfg.hash();
  result.root = fs::path(cfg.output_dir) / cfg.name;
  if (fs::exists(result.root / "metrics.json") && !force)
    throw std::runtime_error("results already exist at " + result.root.string() +
                             " (use --force to overwrite)");
  fs::create_directories(result.root);

  result.seeds.resize(cfg.seeds.size());
  int n_jobs = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  n_jobs = std::max(1, std::min<int>(n_jobs, static_cast<int>(cfg.seeds.size())));
  std::mutex log_mutex;
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  std::vector<std::thread> workers;
  std::size_t next = 0;
  std::mutex next_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= cfg.seeds.size()) return;
        k = next++;
      }
      try {
        result.seeds[k] = detail::run_seed(cfg, cfg.seeds[k]);
        if (log) {
          std::lock_guard<std::mutex> lock(log_mutex);
          *log << "  seed " << cfg.seeds[k] << ": gia=" << result.seeds[k].report.gia
               << " gra=" << result.seeds[k].report.gra << " ("
               << result.seeds[k].wall_seconds << "s)\n";
        }
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  for (int t = 0; t < n_jobs; ++t) workers.emplace_back(worker);
  for (std::thread& t : workers) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  // config.json: the effective config with defaults filled in.
  detail::write_text_file(result.root / "config.json", cfg.to_json().dump(2) + "\n");

  // curves.csv: phase-1 teacher rows then phase-2 learner rows, per seed.
  std::ostringstream curves;
  curves << "# " << kCurvesSchema << '\n';
  curves << "epoch,seed,variant,gia,ogia,gra,gia_x_gra\n";
  for (const SeedOutcome& s : result.seeds) {
    detail::append_curve_rows(curves, s.teacher_curve, s.seed, "teacher-" + cfg.teacher_name());
    detail::append_curve_rows(curves, s.learner_curve, s.seed, variant_name(cfg.variant));
  }
  detail::write_text_file(result.root / "curves.csv", curves.str());

  // Per-seed policy snapshots.
  for (const SeedOutcome& s : result.seeds) {
    fs::path seed_dir = result.root / ("seed" + std::to_string(s.seed));
    fs::create_directories(seed_dir);
    detail::write_text_file(seed_dir / "teacher.snapshot", s.teacher_snapshot.dump() + "\n");
    detail::write_text_file(seed_dir / "learner.snapshot", s.learner_snapshot.dump() + "\n");
  }

  // metrics.json: per-seed records plus mean/std aggregates.
  nlohmann::json metrics;
  metrics["schema"] = kMetricsSchema;
  metrics["name"] = cfg.name;
  metrics["config_hash"] = result.config_hash;
  metrics["env"] = env_name(cfg.env);
  metrics["teacher"] = cfg.teacher_name();
  metrics["learner"] = cfg.learner_name();
  metrics["variant"] = variant_name(cfg.variant);
  metrics["demo_budget"] = cfg.demo_budget;
  nlohmann::json seed_rows = nlohmann::json::array();
  std::vector<double> gia, ogia, gra, gxg, t_ogia, t_gra, amb, clf;
  for (const SeedOutcome& s : result.seeds) {
    seed_rows.push_back(detail::seed_outcome_json(s, "seed" + std::to_string(s.seed)));
    gia.push_back(s.report.gia);
    ogia.push_back(s.report.ogia);
    gra.push_back(s.report.gra);
    gxg.push_back(s.report.gia_x_gra);
    t_ogia.push_back(s.teacher_ogia);
    t_gra.push_back(s.teacher_gra);
    if (s.ambiguity_teacher >= 0.0) amb.push_back(s.ambiguity_teacher);
    if (s.classifier_gia >= 0.0) clf.push_back(s.classifier_gia);
  }
  metrics["seeds"] = std::move(seed_rows);
  nlohmann::json agg;
  detail::aggregate_stat(agg, "gia", gia);
  detail::aggregate_stat(agg, "ogia", ogia);
  detail::aggregate_stat(agg, "gra", gra);
  detail::aggregate_stat(agg, "gia_x_gra", gxg);
  detail::aggregate_stat(agg, "teacher_ogia", t_ogia);
  detail::aggregate_stat(agg, "teacher_gra", t_gra);
  detail::aggregate_stat(agg, "ambiguity_teacher", amb);
  detail::aggregate_stat(agg, "classifier_gia", clf);
  metrics["aggregate"] = std::move(agg);
  detail::write_text_file(result.root / "metrics.json", metrics.dump(2) + "\n");
  return result;
}

struct MatrixAxes {
  std::vector<std::string> teachers = {"naive", "pedagogical"};
  std::vector<std::string> learners = {"literal", "pragmatic"};
  std::vector<int> budgets;  // empty: use the template's budget
  std::vector<std::uint64_t> seeds;  // empty: use the template's seeds
};

struct MatrixCellResult {
  std::string name;
  std::string teacher, learner;
  int demo_budget = 0;
  bool failed = false;
  std::string error;
  nlohmann::json aggregate;
};

/// Run the full teacher x learner x budget grid from a template config and
/// aggregate mean/std per cell into a summary table.
inline std::vector<MatrixCellResult> run_matrix(const ExperimentConfig& base,
                                                const MatrixAxes& axes,
                                                const std::string& out_dir, bool force = false,
                                                int jobs = 0, std::ostream* log = nullptr) {
  std::vector<int> budgets = axes.budgets.empty() ? std::vector<int>{base.demo_budget} : axes.budgets;
  std::vector<MatrixCellResult> cells;
  for (int budget : budgets) {
    for (const std::string& teacher : axes.teachers) {
      for (const std::string& learner : axes.learners) {
        ExperimentConfig cfg = base;
        cfg.teacher = (teacher == "pedagogical") ? AgentRole::Kind::kPedagogicalTeacher
                                                 : AgentRole::Kind::kNaiveTeacher;
        cfg.learner = (learner == "pragmatic") ? AgentRole::Kind::kPragmaticLearner
                                               : AgentRole::Kind::kLiteralLearner;
        cfg.demo_budget = budget;
        if (!axes.seeds.empty()) cfg.seeds = axes.seeds;
        cfg.output_dir = out_dir;
        cfg.name = env_name(cfg.env) + "_" + teacher + "_" + learner + "_" +
                   variant_name(cfg.variant) + "_b" + std::to_string(budget);
        MatrixCellResult cell;
        cell.name = cfg.name;
        cell.teacher = teacher;
        cell.learner = learner;
        cell.demo_budget = budget;
        if (log) *log << "cell " << cfg.name << "\n";
        try {
          RunResult r = run_experiment(cfg, force, jobs, log);
          std::ifstream in(r.root / "metrics.json");
          nlohmann::json m = nlohmann::json::parse(in);
          cell.aggregate = m.at("aggregate");
        } catch (const std::exception& e) {
          cell.failed = true;
          cell.error = e.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }

  // Summary files mirroring the result-table layout.
  std::ostringstream csv;
  csv << "# pedprag-matrix.v1\n";
  csv << "cell,teacher,learner,demo_budget,gia_mean,gia_std,gra_mean,gra_std,gia_x_gra_mean,"
         "gia_x_gra_std,status\n";
  std::ostringstream table;
  table << "Teacher + Learner                GIA              GRA              GIAxGRA\n";
  int last_budget = std::numeric_limits<int>::min();
  for (const MatrixCellResult& cell : cells) {
    if (cell.demo_budget != last_budget) {
      table << "--- " << cell.demo_budget << " demonstrations per goal ---\n";
      last_budget = cell.demo_budget;
    }
    if (cell.failed) {
      csv << cell.name << ',' << cell.teacher << ',' << cell.learner << ',' << cell.demo_budget
          << ",,,,,,,failed\n";
      table << cell.teacher << " + " << cell.learner << "  FAILED: " << cell.error << "\n";
      continue;
    }
    auto stat = [&](const char* key, const char* field) {
      return cell.aggregate.at(key).at(field).get<double>();
    };
    csv << cell.name << ',' << cell.teacher << ',' << cell.learner << ',' << cell.demo_budget
        << ',' << detail::format_rate(stat("gia", "mean")) << ','
        << detail::format_rate(stat("gia", "std")) << ','
        << detail::format_rate(stat("gra", "mean")) << ','
        << detail::format_rate(stat("gra", "std")) << ','
        << detail::format_rate(stat("gia_x_gra", "mean")) << ','
        << detail::format_rate(stat("gia_x_gra", "std")) << ",ok\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s + %-10s  %5.1f +- %4.1f %%  %5.1f +- %4.1f %%  %0.2f",
                  cell.teacher.c_str(), cell.learner.c_str(), 100.0 * stat("gia", "mean"),
                  100.0 * stat("gia", "std"), 100.0 * stat("gra", "mean"),
                  100.0 * stat("gra", "std"), stat("gia_x_gra", "mean"));
    table << line << "\n";
  }
  std::filesystem::create_directories(out_dir);
  detail::write_text_file(std::filesystem::path(out_dir) / "matrix_summary.csv", csv.str());
  detail::write_text_file(std::filesystem::path(out_dir) / "matrix_table.txt", table.str());
  if (log) *log << table.str();
  return cells;
}

/// Collect every metrics.json under `dir` into plain-text and CSV summaries;
/// recomputes the GIA x GRA column as a consistency check and flags files
/// that cannot be parsed.
inline int report_results(const std::string& dir, std::ostream& os) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir)) {
    os << "no results: directory " << dir << " does not exist\n";
    return 0;
  }
  struct Row {
    std::string env, name, teacher, learner, variant;
    int budget = 0;
    nlohmann::json metrics;
  };
  std::vector<Row> rows;
  std::vector<std::string> issues;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "metrics.json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& path : files) {
    try {
      std::ifstream in(path);
      nlohmann::json m = nlohmann::json::parse(in);
      if (m.at("schema").get<std::string>() != kMetricsSchema)
        throw std::runtime_error("unknown schema");
      Row r;
      r.env = m.at("env").get<std::string>();
      r.name = m.at("name").get<std::string>();
      r.teacher = m.at("teacher").get<std::string>();
      r.learner = m.at("learner").get<std::string>();
      r.variant = m.at("variant").get<std::string>();
      r.budget = m.at("demo_budget").get<int>();
      for (const auto& s : m.at("seeds")) {
        double gia = s.at("gia").get<double>(), gra = s.at("gra").get<double>();
        double stored = s.at("gia_x_gra").get<double>();
        if (std::abs(stored - gia * gra) > 1e-9)
          throw std::runtime_error("gia_x_gra inconsistent with gia*gra");
      }
      r.metrics = std::move(m);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      issues.push_back(path.string() + ": " + e.what());
    }
  }
  if (rows.empty() && issues.empty()) {
    os << "no results found under " << dir << "\n";
    return 0;
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.env, a.budget, a.name) < std::tie(b.env, b.budget, b.name);
  });

  std::ostringstream text, csv, comparison;
  csv << "# pedprag-summary.v1\n";
  csv << "env,name,teacher,learner,variant,demo_budget,gia_mean,gia_std,gra_mean,gra_std,"
         "gia_x_gra_mean,gia_x_gra_std,teacher_ogia_mean,ambiguity_mean,classifier_gia_mean\n";
  comparison << "# pedprag-comparison.v1\n";
  comparison << "demo_budget,method,teacher,gia\n";
  std::string current_env;
  for (const Row& r : rows) {
    if (r.env != current_env) {
      text << "== environment: " << r.env << " ==\n";
      current_env = r.env;
    }
    const nlohmann::json& agg = r.metrics.at("aggregate");
    auto stat = [&](const char* key, const char* field, double fallback) {
      if (!agg.contains(key)) return fallback;
      return agg.at(key).at(field).get<double>();
    };
    double gia_m = stat("gia", "mean", 0), gia_s = stat("gia", "std", 0);
    double gra_m = stat("gra", "mean", 0), gra_s = stat("gra", "std", 0);
    double gxg_m = stat("gia_x_gra", "mean", 0), gxg_s = stat("gia_x_gra", "std", 0);
    double togia = stat("teacher_ogia", "mean", 0);
    double amb = stat("ambiguity_teacher", "mean", -1);
    double clf = stat("classifier_gia", "mean", -1);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%-40s %-12s + %-10s %-5s b=%-4d GIA %5.1f+-%4.1f%%  GRA %5.1f+-%4.1f%%  "
                  "GIAxGRA %.2f+-%.2f",
                  r.name.c_str(), r.teacher.c_str(), r.learner.c_str(), r.variant.c_str(),
                  r.budget, 100 * gia_m, 100 * gia_s, 100 * gra_m, 100 * gra_s, gxg_m, gxg_s);
    text << line << "\n";
    csv << r.env << ',' << r.name << ',' << r.teacher << ',' << r.learner << ',' << r.variant
        << ',' << r.budget << ',' << detail::format_rate(gia_m) << ','
        << detail::format_rate(gia_s) << ',' << detail::format_rate(gra_m) << ','
        << detail::format_rate(gra_s) << ',' << detail::format_rate(gxg_m) << ','
        << detail::format_rate(gxg_s) << ',' << detail::format_rate(togia) << ','
        << (amb >= 0 ? detail::format_rate(amb) : "") << ','
        << (clf >= 0 ? detail::format_rate(clf) : "") << '\n';
    if (clf >= 0) {
      comparison << r.budget << ",BGI," << r.teacher << ',' << detail::format_rate(gia_m) << '\n';
      comparison << r.budget << ",classifier," << r.teacher << ',' << detail::format_rate(clf)
                 << '\n';
    }
  }
  for (const std::string& issue : issues) text << "ISSUE: " << issue << "\n";

  detail::write_text_file(fs::path(dir) / "summary.txt", text.str());
  detail::write_text_file(fs::path(dir) / "summary.csv", csv.str());
  detail::write_text_file(fs::path(dir) / "comparison.csv", comparison.str());
  os << text.str();
  return issues.empty() ? 0 : 1;
}

}  // namespace pedprag
