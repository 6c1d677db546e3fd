// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/dyn/model.hpp"
#include "dlo/nn/optim.hpp"
#include "dlo/nn/parameter_store.hpp"
#include "dlo/nn/tape.hpp"
#include "dlo/repr/transformers.hpp"
#include "dlo/train/windows.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dlo::train {

struct TrainConfig {
  int batch_size = 128;
  double lr_max = 1e-3;
  double lr_min = 1e-6;
  int max_epochs = 20;
  /// Epochs without a validation improvement before stopping.
  int patience = 20;
  /// Input noise sigma as a fraction of the keypoint spacing L/(m-1).
  double noise_fraction = 0.05;
  /// Training windows drawn per epoch; 0 uses all of them.
  int samples_per_epoch = 8000;
  std::uint64_t seed = 1;
  /// Stop after this many epochs in one call (0: run to the end); the
  /// returned state resumes exactly where it stopped.
  int stop_after = 0;

  void validate() const;
  std::string canonical() const;
};

/// Cosine decay from lr_max at epoch 0 to lr_min at the last epoch.
double learning_rate(const TrainConfig& config, int epoch);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
};
/// CSV with header "epoch,train_loss,val_loss,lr,wall_seconds".
void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log);

/// What a training loop optimises. batch_loss builds the loss of a minibatch of
/// training items on `tape`; validation_loss scores parameters without gradients.
struct Objective {
  std::size_t train_size = 0;
  std::function<nn::Var(nn::Tape&, const nn::BoundParams&, std::span<const std::size_t>, std::mt19937_64&)> batch_loss;
  std::function<double(const nn::ParameterStore&)> validation_loss;
};

/// Everything needed to continue a run bit-identically.
struct FitState {
  nn::ParameterStore params;
  nn::ParameterStore best;
  nn::AdamState adam;
  int next_epoch = 0;
  double best_val = 0.0;
  int best_epoch = -1;
  int since_best = 0;
  bool finished = false;
  bool diverged = false;
  std::string rng_state;
  std::vector<EpochLog> log;
};

FitState start_fit(const nn::ParameterStore& params, const TrainConfig& config);
/// Runs epochs until max_epochs, early stopping, divergence or stop_after.
/// On divergence (non-finite loss or gradient) params are reset to the best
/// iterate and `diverged` is set.
void run_fit(FitState& state, const Objective& objective, const TrainConfig& config,
             const std::function<void(const EpochLog&)>& on_epoch = {});

/// Persisted as a checkpoint: params, best params ("best/..."), Adam moments,
/// counters, RNG state and the log.
nn::ParameterStore fit_state_to_store(const FitState& state);
FitState fit_state_from_store(const nn::ParameterStore& store);

// -- Dynamics models -----------------------------------------------------------

/// Mean squared one-step keypoint error in units of delta^2 over (B*m, 2).
nn::Var one_step_loss(const nn::BoundParams& p, const dyn::DynModel& model, const Batch& batch, nn::Tape& tape);
/// Noise-free one-step loss over a whole window set, in batches.
double dataset_loss(const dyn::DynModel& model, const WindowSet& set, int batch_size = 512);

Objective dynamics_objective(const dyn::DynModel& model, const WindowSet& train, const WindowSet& val,
                             const TrainConfig& config);

struct TrainResult {
  dyn::DynModel best;
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val = 0.0;
  bool diverged = false;
};
/// Trains from `model`, or continues `*resume` when it holds a started run
/// (it is updated in place). On divergence the result carries the best
/// iterate and diverged = true.
TrainResult train_model(const dyn::DynModel& model, const WindowSet& train, const WindowSet& val,
                        const TrainConfig& config, FitState* resume = nullptr,
                        const std::function<void(const EpochLog&)>& on_epoch = {});

// -- Force transformers --------------------------------------------------------

/// Paired samples: keypoints (N, 2m) and wrenches (N, 3).
struct PairSet {
  nn::Matrix keypoints;
  nn::Matrix wrenches;
  std::size_t size() const { return static_cast<std::size_t>(keypoints.rows()); }
};
PairSet pairs_from(const sim::TrajectoryDataset& data);

/// Fits the input/output normalisers on `train` and sets them on `net`.
void fit_normalization(repr::ForceTransformer& net, const PairSet& train);
/// Mean squared error in standardised output units.
double transformer_loss(const repr::ForceTransformer& net, const PairSet& set);

Objective transformer_objective(const repr::ForceTransformer& net, const PairSet& train, const PairSet& val);

struct TransformerResult {
  repr::ForceTransformer best;
  std::vector<EpochLog> log;
  int best_epoch = -1;
  bool diverged = false;
};
/// Normalisers come from `train`; noise_fraction is not used for transformers.
TransformerResult train_transformer(repr::ForceTransformer net, const PairSet& train, const PairSet& val,
                                    const TrainConfig& config, FitState* resume = nullptr,
                                    const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace dlo::train
