// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/app/config.hpp"
#include "dlo/app/suite.hpp"
#include "dlo/control/episode.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dlo::app {

// Experiment commands. Each writes its resolved config as <command>.config
// next to its outputs; all files are written atomically. Progress goes to
// `log` when given.

struct CollectSummary {
  std::filesystem::path dataset;
  std::size_t records = 0;
};
CollectSummary cmd_collect(const RunConfig& config, const std::filesystem::path& out, std::ostream* log = nullptr);

/// A dynamics kind ("ea-pe-gat", "mlp", ...) or "p2ft" / "f2pt".
struct TrainSummary {
  std::string name;
  std::filesystem::path checkpoint;
  std::filesystem::path log_csv;
  std::filesystem::path metrics_csv;
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val = 0.0;
  bool diverged = false;
};
/// With `resume`, continues the saved fit state <models>/<name>.state if it
/// exists. The fit state is saved after every epoch.
TrainSummary cmd_train(const RunConfig& config, const std::filesystem::path& out, const std::string& name,
                       bool resume, std::ostream* log = nullptr);
/// Names accepted by cmd_train.
std::vector<std::string> trainable_names();

struct EvalSummary {
  std::filesystem::path rmse_csv;
  std::filesystem::path timing_csv;
  std::vector<std::string> models;
  /// rmse[k][s]: model k at step s + 1; the persistence curve is separate.
  std::vector<std::vector<double>> rmse;
  std::vector<double> persistence;
  std::vector<double> timing_mean;
};
/// Per-step test RMSE of each model checkpoint plus the persistence baseline,
/// and single-step timing. `models` empty means all five kinds.
EvalSummary cmd_eval(const RunConfig& config, const std::filesystem::path& out, std::vector<std::string> models,
                     std::ostream* log = nullptr);

BenchmarkSuite cmd_gen_suite(const RunConfig& config, const std::filesystem::path& out, std::ostream* log = nullptr);

enum class Strategy { hybrid, pmpc };
std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct EpisodeRecord {
  int task = 0;
  DeformationClass label = DeformationClass::large;
  Strategy strategy = Strategy::hybrid;
  control::EpisodeResult result;
  /// Cycles whose returned cost exceeded the initial one.
  int guard_violations = 0;
  /// Executed action components beyond u_max.
  int action_violations = 0;
  /// Largest keypoint deviation when the log is replayed on the simulator.
  double replay_deviation = 0.0;
};
struct ClassStats {
  Strategy strategy = Strategy::hybrid;
  DeformationClass label = DeformationClass::large;
  int tasks = 0;
  int successes = 0;
  double mean_final_rmse = 0.0;
  double success_rate() const { return tasks ? static_cast<double>(successes) / tasks : 0.0; }
};
struct BenchSummary {
  std::vector<EpisodeRecord> episodes;
  std::vector<ClassStats> table;
  std::filesystem::path table_csv;
  /// Mean final RMSE over every task of a strategy.
  double mean_final_rmse(Strategy s) const;
  const ClassStats& stats(Strategy s, DeformationClass c) const;
};
/// Runs every suite task with each strategy using the `model` checkpoint and
/// the two transformers from the models directory. `tasks` limits the run to
/// the first n tasks when positive.
BenchSummary cmd_bench(const RunConfig& config, const std::filesystem::path& out, const std::string& model,
                       const std::vector<Strategy>& strategies, int tasks = 0, std::ostream* log = nullptr);

}  // namespace dlo::app
