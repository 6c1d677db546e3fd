// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/control/mpc.hpp"
#include "dlo/dyn/model.hpp"
#include "dlo/nn/layers.hpp"
#include "dlo/sim/dataset.hpp"
#include "dlo/sim/rod.hpp"
#include "dlo/train/split.hpp"
#include "dlo/train/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dlo::app {

struct SuiteConfig {
  /// Candidate shapes sampled before pairing.
  int pool = 40;
  int large = 8;
  int small = 2;
  /// Random-motion steps from rest that produce each candidate shape.
  int settle_steps = 60;
  /// Wrench-distance quantiles bounding the two classes.
  double large_quantile = 0.7;
  double small_quantile = 0.3;
};

/// Everything a command reads. Text form is one "key = value" per line; '#'
/// starts a comment. Unknown keys are a ConfigError.
struct RunConfig {
  std::uint64_t seed = 1;
  sim::RodConfig rod;
  sim::CollectConfig collect;
  train::SplitSpec split;
  /// Architecture; kind, n_keypoints, dt, length and u_max are filled in per use.
  dyn::DynConfig model;
  train::TrainConfig train;
  train::TrainConfig transformer{.batch_size = 32, .max_epochs = 40, .patience = 20};
  nn::Activation transformer_activation = nn::Activation::tanh;
  int eval_horizon = 10;
  int timing_trials = 200;
  control::ControlConfig control;
  SuiteConfig suite;
  /// Relative paths resolve against the output directory.
  std::string dataset_path = "dataset.txt";
  std::string models_dir = "models";
  std::string reports_dir = "reports";
  std::string suite_path = "suite.json";

  /// Desk defaults, or 3000 x 150 trajectories and the 128-wide models.
  static RunConfig defaults(bool paper_scale);

  /// Applies one key; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Applies every line of a config text.
  void apply_text(const std::string& text);
  /// Sets `seed` and propagates it to collection, split and training.
  void set_seed(std::uint64_t s);
  /// All keys with their current values, in a fixed order; apply_text of it
  /// reproduces this config.
  std::string to_text() const;
  /// Cross-checks the sub-configs; throws ConfigError.
  void validate() const;

  /// Dynamics config of `kind` consistent with the rod and collection settings.
  dyn::DynConfig model_config(dyn::ModelKind kind) const;
};

/// Known keys in to_text order.
std::vector<std::string> config_keys();

struct OutputLayout {
  std::filesystem::path root;
  std::filesystem::path dataset;
  std::filesystem::path models;
  std::filesystem::path reports;
  std::filesystem::path suite;
};
OutputLayout layout(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace dlo::app
