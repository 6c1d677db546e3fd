// SPDX-License-Identifier: Apache-2.0
#include "dlo/app/commands.hpp"

#include "dlo/error.hpp"
#include "dlo/nn/checkpoint.hpp"
#include "dlo/train/evaluate.hpp"
#include "dlo/train/split.hpp"
#include "dlo/train/trainer.hpp"
#include "dlo/train/windows.hpp"
#include "dlo/util.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <ostream>
#include <sstream>

namespace dlo::app {

namespace fs = std::filesystem;

namespace {

void note(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

void write_config(const fs::path& dir, const std::string& command, const RunConfig& config) {
  fs::create_directories(dir);
  write_file_atomic(dir / (command + ".config"), "# resolved configuration of '" + command + "'\n" + config.to_text());
}

std::string csv_number(double v) {
  // reports never carry NaN or inf cells
  if (!std::isfinite(v)) throw NumericError("non-finite value in a report");
  return format_double(v);
}

std::string csv_text(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

sim::TrajectoryDataset load_checked_dataset(const RunConfig& config, const fs::path& path) {
  if (!fs::exists(path)) throw IoError("dataset not found: " + path.string());
  sim::TrajectoryDataset data = sim::load_dataset(path);
  if (data.config_hash != config.rod.hash()) {
    throw PreconditionError(path.string() + " was collected with a different rod configuration");
  }
  return data;
}

bool is_transformer(const std::string& name) { return name == "p2ft" || name == "f2pt"; }

int kind_index(dyn::ModelKind kind) {
  const auto it = std::find(std::begin(dyn::kAllKinds), std::end(dyn::kAllKinds), kind);
  return static_cast<int>(it - std::begin(dyn::kAllKinds));
}

void write_epoch_csv(const fs::path& path, const std::vector<train::EpochLog>& log) {
  std::ostringstream s;
  train::write_log_csv(s, log);
  write_file_atomic(path, s.str());
}

void write_metrics(const fs::path& path, const std::vector<std::pair<std::string, double>>& rows) {
  std::string s = "metric,value\n";
  for (const auto& [k, v] : rows) s += k + "," + csv_number(v) + "\n";
  write_file_atomic(path, s);
}

dyn::DynModel load_dynamics(const fs::path& models, const std::string& name) {
  const dyn::ModelKind kind = dyn::model_kind_from_string(name);
  const fs::path p = models / (name + ".ckpt");
  if (!fs::exists(p)) throw IoError("checkpoint not found: " + p.string());
  return dyn::from_checkpoint(nn::load_checkpoint(p), kind);
}

repr::ForceTransformer load_transformer_checked(const fs::path& models, repr::TransformerKind kind) {
  const fs::path p = models / (repr::to_string(kind) + ".ckpt");
  if (!fs::exists(p)) throw IoError("checkpoint not found: " + p.string());
  auto net = repr::load_transformer(p);
  if (net.kind != kind) throw ConfigError(p.string() + " holds a " + repr::to_string(net.kind) + " network");
  return net;
}

/// Hash of everything that shapes a training run except how far it got.
std::uint64_t run_hash(const RunConfig& config, const std::string& name, const train::TrainConfig& tc) {
  train::TrainConfig t = tc;
  t.stop_after = 0;
  std::string text = name + "|" + t.canonical() + "|" + config.rod.canonical() + "|split " +
                     std::to_string(config.split.train) + "," + std::to_string(config.split.val) + "," +
                     std::to_string(config.split.test) + "," + std::to_string(config.split.seed);
  if (!is_transformer(name)) text += "|" + config.model_config(dyn::model_kind_from_string(name)).canonical();
  return fnv1a64(text);
}

/// Epoch-at-a-time driver that persists the fit state after every epoch.
template <class Step>
train::FitState drive_fit(const RunConfig& config, const fs::path& state_path, const std::string& name,
                          const train::TrainConfig& tc, bool resume, Step&& step, std::ostream* log) {
  const std::uint64_t h = run_hash(config, name, tc);
  train::FitState st;
  if (resume && fs::exists(state_path)) {
    const nn::ParameterStore stored = nn::load_checkpoint(state_path);
    if (stored.config_hash != h) throw ConfigError(state_path.string() + " belongs to a different run configuration");
    st = train::fit_state_from_store(stored);
    note(log, name + ": resuming at epoch " + std::to_string(st.next_epoch));
  }
  train::TrainConfig one = tc;
  one.stop_after = 1;
  int ran = 0;
  while (!st.finished && st.next_epoch < tc.max_epochs && (tc.stop_after == 0 || ran < tc.stop_after)) {
    step(one, st);
    ++ran;
    nn::ParameterStore out = train::fit_state_to_store(st);
    out.config_hash = h;
    nn::save_checkpoint(state_path, out);
    const auto& e = st.log.back();
    std::ostringstream s;
    s << name << ": epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss;
    note(log, s.str());
    if (st.diverged) break;
  }
  return st;
}

}  // namespace

CollectSummary cmd_collect(const RunConfig& config, const fs::path& out, std::ostream* log) {
  config.validate();
  const OutputLayout paths = layout(config, out);
  note(log, "collecting " + std::to_string(config.collect.n_traj) + " x " +
                std::to_string(config.collect.steps_per_traj) + " records");
  const sim::TrajectoryDataset data = sim::collect_trajectories(config.rod, config.collect);
  fs::create_directories(paths.dataset.parent_path());
  sim::save_dataset(paths.dataset, data);
  write_config(paths.dataset.parent_path(), "collect", config);
  return {paths.dataset, data.records.size()};
}

std::vector<std::string> trainable_names() {
  std::vector<std::string> names;
  for (auto k : dyn::kAllKinds) names.push_back(dyn::to_string(k));
  names.push_back("p2ft");
  names.push_back("f2pt");
  return names;
}

TrainSummary cmd_train(const RunConfig& config, const fs::path& out, const std::string& name, bool resume,
                       std::ostream* log) {
  config.validate();
  const auto names = trainable_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("unknown model '" + name + "'");
  }
  const OutputLayout paths = layout(config, out);
  const sim::TrajectoryDataset data = load_checked_dataset(config, paths.dataset);
  const train::Splits sp = train::split_dataset(data, config.split);
  fs::create_directories(paths.models);
  fs::create_directories(paths.reports);

  TrainSummary s;
  s.name = name;
  s.checkpoint = paths.models / (name + ".ckpt");
  s.log_csv = paths.reports / ("train_" + name + ".csv");
  s.metrics_csv = paths.reports / ("train_" + name + "_metrics.csv");
  const fs::path state_path = paths.models / (name + ".state");
  std::vector<std::pair<std::string, double>> metrics;
  train::FitState st;

  if (is_transformer(name)) {
    const auto kind = repr::transformer_kind_from_string(name);
    std::mt19937_64 rng(config.seed + (kind == repr::TransformerKind::p2ft ? 11 : 13));
    const repr::ForceTransformer net0 = repr::make_transformer(kind, config.rod.n_keypoints, rng, config.transformer_activation);
    const train::PairSet ptr = train::pairs_from(sp.train), pva = train::pairs_from(sp.val),
                         pte = train::pairs_from(sp.test);
    st = drive_fit(config, state_path, name, config.transformer, resume,
                   [&](const train::TrainConfig& one, train::FitState& f) {
                     train::train_transformer(net0, ptr, pva, one, &f);
                   },
                   log);
    if (st.params.size() == 0) st = train::start_fit(net0.params, config.transformer);
    repr::ForceTransformer best = net0;
    train::fit_normalization(best, ptr);
    best.params = st.best;
    repr::set_normalization(best, best.in_norm, best.out_norm);
    repr::save_transformer(s.checkpoint, best);
    metrics.push_back({"val_loss", train::transformer_loss(best, pva)});
    metrics.push_back({"test_loss", train::transformer_loss(best, pte)});
    if (kind == repr::TransformerKind::p2ft) {
      const auto e = train::p2ft_errors(best, pte);
      const char* comp[3] = {"fx", "fy", "mz"};
      for (int k = 0; k < 3; ++k) {
        metrics.push_back({std::string("test_mae_") + comp[k], e.mae[k]});
        metrics.push_back({std::string("test_relative_") + comp[k], e.relative[k]});
      }
    } else {
      const double err = train::f2pt_keypoint_error(best, pte);
      metrics.push_back({"test_keypoint_error", err});
      metrics.push_back({"test_keypoint_error_fraction_of_length", err / config.rod.total_length});
    }
  } else {
    const dyn::ModelKind kind = dyn::model_kind_from_string(name);
    const dyn::DynConfig dc = config.model_config(kind);
    std::mt19937_64 rng(config.seed + 101 * static_cast<std::uint64_t>(kind_index(kind) + 1));
    const dyn::DynModel model0 = dyn::make_model(dc, rng);
    const auto tr = train::WindowSet::one_step(sp.train, dc.history);
    const auto va = train::WindowSet::one_step(sp.val, dc.history);
    st = drive_fit(config, state_path, name, config.train, resume,
                   [&](const train::TrainConfig& one, train::FitState& f) { train::train_model(model0, tr, va, one, &f); },
                   log);
    if (st.params.size() == 0) st = train::start_fit(model0.params, config.train);
    const dyn::DynModel best{dc, st.best};
    dyn::save_model(s.checkpoint, best);
    const auto te = train::WindowSet::multi_step(sp.test, dc.history, config.eval_horizon);
    const auto curve = train::evaluate_multistep(best, te, config.eval_horizon);
    metrics.push_back({"parameters", static_cast<double>(best.parameter_count())});
    for (std::size_t k = 0; k < curve.size(); ++k) metrics.push_back({"test_rmse_step" + std::to_string(k + 1), curve[k]});
  }
  s.epochs_run = static_cast<int>(st.log.size());
  s.best_epoch = st.best_epoch;
  s.best_val = st.best_val;
  s.diverged = st.diverged;
  metrics.insert(metrics.begin(), {{"epochs", s.epochs_run}, {"best_epoch", s.best_epoch}, {"best_val_loss", s.best_val},
                                   {"diverged", s.diverged ? 1.0 : 0.0}});
  write_epoch_csv(s.log_csv, st.log);
  write_metrics(s.metrics_csv, metrics);
  write_config(paths.reports, "train_" + name, config);
  if (s.diverged) throw NumericError(name + ": training diverged; kept the best iterate at epoch " + std::to_string(s.best_epoch));
  return s;
}

EvalSummary cmd_eval(const RunConfig& config, const fs::path& out, std::vector<std::string> models,
                     std::ostream* log) {
  config.validate();
  const OutputLayout paths = layout(config, out);
  if (models.empty()) {
    for (auto k : dyn::kAllKinds) models.push_back(dyn::to_string(k));
  }
  const sim::TrajectoryDataset data = load_checked_dataset(config, paths.dataset);
  const train::Splits sp = train::split_dataset(data, config.split);
  EvalSummary s;
  s.models = models;
  const int h = config.eval_horizon;
  for (const auto& name : models) {
    const dyn::DynModel model = load_dynamics(paths.models, name);
    const auto te = train::WindowSet::multi_step(sp.test, model.config.history, h);
    s.rmse.push_back(train::evaluate_multistep(model, te, h));
    s.timing_mean.push_back(0.0);
    note(log, name + ": step-" + std::to_string(h) + " rmse " + format_double(s.rmse.back().back()));
  }
  s.persistence = train::evaluate_persistence(train::WindowSet::multi_step(sp.test, config.model.history, h), h);

  std::string rm = "step";
  for (const auto& n : models) rm += "," + n;
  rm += ",persistence\n";
  for (int k = 0; k < h; ++k) {
    rm += std::to_string(k + 1);
    for (const auto& c : s.rmse) rm += "," + csv_number(c[k]);
    rm += "," + csv_number(s.persistence[k]) + "\n";
  }
  fs::create_directories(paths.reports);
  s.rmse_csv = paths.reports / "eval_rmse.csv";
  write_file_atomic(s.rmse_csv, rm);

  // wall-clock numbers live in their own file
  std::string tm = "model,mean_seconds,median_seconds,stddev_seconds,trials\n";
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto t = train::time_inference(load_dynamics(paths.models, models[i]), config.timing_trials);
    s.timing_mean[i] = t.mean_seconds;
    tm += models[i] + "," + csv_number(t.mean_seconds) + "," + csv_number(t.median_seconds) + "," +
          csv_number(t.stddev_seconds) + "," + std::to_string(t.trials) + "\n";
    note(log, models[i] + ": single step " + format_double(t.mean_seconds) + " s");
  }
  s.timing_csv = paths.reports / "eval_timing.csv";
  write_file_atomic(s.timing_csv, tm);
  write_config(paths.reports, "eval", config);
  return s;
}

BenchmarkSuite cmd_gen_suite(const RunConfig& config, const fs::path& out, std::ostream* log) {
  const OutputLayout paths = layout(config, out);
  note(log, "sampling " + std::to_string(config.suite.pool) + " candidate shapes");
  BenchmarkSuite suite = generate_suite(config);
  fs::create_directories(paths.suite.parent_path());
  save_suite(paths.suite, suite);
  write_config(paths.suite.parent_path(), "gen-suite", config);
  return suite;
}

std::string to_string(Strategy s) { return s == Strategy::hybrid ? "hybrid" : "pmpc"; }

Strategy strategy_from_string(const std::string& s) {
  if (s == "hybrid") return Strategy::hybrid;
  if (s == "pmpc") return Strategy::pmpc;
  throw ConfigError("unknown strategy '" + s + "' (expected hybrid or pmpc)");
}

double BenchSummary::mean_final_rmse(Strategy s) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& e : episodes) {
    if (e.strategy != s) continue;
    sum += e.result.final_rmse;
    ++n;
  }
  return n ? sum / n : 0.0;
}

const ClassStats& BenchSummary::stats(Strategy s, DeformationClass c) const {
  for (const auto& t : table) {
    if (t.strategy == s && t.label == c) return t;
  }
  throw PreconditionError("no benchmark results for " + to_string(s) + "/" + to_string(c));
}

BenchSummary cmd_bench(const RunConfig& config, const fs::path& out, const std::string& model_name,
                       const std::vector<Strategy>& strategies, int max_tasks, std::ostream* log) {
  config.validate();
  if (strategies.empty()) throw ConfigError("no strategies requested");
  const OutputLayout paths = layout(config, out);
  if (!fs::exists(paths.suite)) throw IoError("suite not found: " + paths.suite.string());
  const BenchmarkSuite suite = load_suite(paths.suite);
  if (suite.rod_hash != config.rod.hash()) throw PreconditionError("suite was generated for a different rod");
  const dyn::DynModel model = load_dynamics(paths.models, model_name);
  const auto p2ft = load_transformer_checked(paths.models, repr::TransformerKind::p2ft);
  const auto f2pt = load_transformer_checked(paths.models, repr::TransformerKind::f2pt);
  const fs::path episodes_dir = paths.reports / "episodes";
  fs::create_directories(episodes_dir);

  BenchSummary s;
  const int n = max_tasks > 0 ? std::min<int>(max_tasks, static_cast<int>(suite.tasks.size()))
                              : static_cast<int>(suite.tasks.size());
  const auto& cap = config.rod.u_max;
  for (int i = 0; i < n; ++i) {
    const BenchmarkTask& task = suite.tasks[i];
    const auto x0 = sim::keypoints(config.rod, task.initial);
    for (Strategy strat : strategies) {
      control::WaypointPlan plan;
      int budget = 0;
      if (strat == Strategy::hybrid) {
        plan = control::plan_waypoints(p2ft, f2pt, x0, task.target_keypoints, config.control.waypoints);
        budget = config.control.steps_per_waypoint;
      } else {
        plan = control::direct_plan(task.target_keypoints);
        budget = config.control.direct_budget;
      }
      EpisodeRecord rec;
      rec.task = task.id;
      rec.label = task.label;
      rec.strategy = strat;
      rec.result = control::run_episode(config.rod, task.initial, model, plan, config.control, budget);
      for (const auto& st : rec.result.log) {
        if (st.final_loss > st.initial_loss) ++rec.guard_violations;
        if (std::abs(st.action.dx) > cap.dx) ++rec.action_violations;
        if (std::abs(st.action.dy) > cap.dy) ++rec.action_violations;
        if (std::abs(st.action.dtheta) > cap.dtheta) ++rec.action_violations;
      }
      const fs::path log_path = episodes_dir / ("task" + std::to_string(task.id) + "_" + to_string(strat) + ".jsonl");
      control::save_episode_log(log_path, task.initial, rec.result);
      rec.replay_deviation = control::replay_deviation(config.rod, control::load_episode_log(log_path), config.collect.dt);
      note(log, "task " + std::to_string(task.id) + " (" + to_string(task.label) + ") " + to_string(strat) +
                    (rec.result.success ? ": success" : ": failure") + " after " + std::to_string(rec.result.steps) +
                    " steps, final rmse " + format_double(rec.result.final_rmse));
      s.episodes.push_back(std::move(rec));
    }
  }

  for (Strategy strat : strategies) {
    for (DeformationClass c : {DeformationClass::large, DeformationClass::small}) {
      ClassStats cs;
      cs.strategy = strat;
      cs.label = c;
      double sum = 0.0;
      for (const auto& e : s.episodes) {
        if (e.strategy != strat || e.label != c) continue;
        ++cs.tasks;
        if (e.result.success) ++cs.successes;
        sum += e.result.final_rmse;
      }
      cs.mean_final_rmse = cs.tasks ? sum / cs.tasks : 0.0;
      s.table.push_back(cs);
    }
  }

  std::string table = "strategy,class,tasks,successes,success_rate,mean_final_rmse\n";
  for (const auto& c : s.table) {
    table += to_string(c.strategy) + "," + to_string(c.label) + "," + std::to_string(c.tasks) + "," +
             std::to_string(c.successes) + "," + csv_number(c.success_rate()) + "," + csv_number(c.mean_final_rmse) + "\n";
  }
  for (Strategy strat : strategies) {
    table += to_string(strat) + ",all," + std::to_string(n) + ",";
    int succ = 0;
    for (const auto& e : s.episodes) succ += e.strategy == strat && e.result.success;
    table += std::to_string(succ) + "," + csv_number(n ? static_cast<double>(succ) / n : 0.0) + "," +
             csv_number(s.mean_final_rmse(strat)) + "\n";
  }
  std::string eps = "task,class,strategy,success,steps,final_rmse,guard_violations,action_violations,replay_deviation,error\n";
  std::string curves = "task,strategy,t,waypoint,rmse_waypoint,rmse_target\n";
  for (const auto& e : s.episodes) {
    eps += std::to_string(e.task) + "," + to_string(e.label) + "," + to_string(e.strategy) + "," +
           (e.result.success ? "1" : "0") + "," + std::to_string(e.result.steps) + "," +
           csv_number(e.result.final_rmse) + "," + std::to_string(e.guard_violations) + "," +
           std::to_string(e.action_violations) + "," + csv_number(e.replay_deviation) + "," +
           (e.result.error.empty() ? "none" : csv_text(e.result.error)) + "\n";
    const std::string prefix = std::to_string(e.task) + "," + to_string(e.strategy) + ",";
    for (const auto& st : e.result.log) {
      curves += prefix + std::to_string(st.t) + "," + std::to_string(st.waypoint) + "," +
                csv_number(st.rmse_waypoint) + "," + csv_number(st.rmse_target) + "\n";
    }
    // the state after the last action
    curves += prefix + std::to_string(e.result.steps) + ",-1,0," + csv_number(e.result.final_rmse) + "\n";
  }
  s.table_csv = paths.reports / "bench_table.csv";
  write_file_atomic(s.table_csv, table);
  write_file_atomic(paths.reports / "bench_episodes.csv", eps);
  write_file_atomic(paths.reports / "bench_curves.csv", curves);
  write_config(paths.reports, "bench", config);
  return s;
}

}  // namespace dlo::app
