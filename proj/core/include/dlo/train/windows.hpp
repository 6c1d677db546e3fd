// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/dyn/forward.hpp"
#include "dlo/dyn/predict.hpp"
#include "dlo/nn/tensor.hpp"
#include "dlo/sim/dataset.hpp"

#include <random>
#include <span>
#include <vector>

namespace dlo::train {

/// History windows over a dataset. Item (traj, t) has current frame t; the
/// frames before the trajectory start are padded with the first state at zero action.
class WindowSet {
 public:
  struct Item {
    int traj = 0;
    int t = 0;
  };

  /// Every t that has a successor record (one-step training targets).
  static WindowSet one_step(sim::TrajectoryDataset data, int history);
  /// Unpadded windows with `horizon` successors: t in [H-1, len-1-horizon].
  /// Throws PreconditionError when no trajectory is long enough.
  static WindowSet multi_step(sim::TrajectoryDataset data, int history, int horizon);

  const std::vector<Item>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  int history() const { return history_; }
  int n_keypoints() const { return data_.n_keypoints; }
  const sim::TrajectoryRecord& record(int traj, int t) const { return trajs_[traj][t]; }
  int trajectory_length(int traj) const { return static_cast<int>(trajs_[traj].size()); }
  /// Window frames of item `i`, oldest first.
  dyn::HistoryWindow window(std::size_t i) const;

 private:
  sim::TrajectoryDataset data_;
  std::vector<std::span<const sim::TrajectoryRecord>> trajs_;
  std::vector<Item> items_;
  int history_ = 1;
  void index();
};

/// Host-side minibatch: H frames of (B*m, 2) positions, (B, 3) poses and actions.
struct Batch {
  int size = 0;
  std::vector<nn::Matrix> positions;
  std::vector<nn::Matrix> poses;
  std::vector<nn::Matrix> actions;
  /// Keypoints `offset` steps ahead for each offset 1..steps: (B*m, 2).
  std::vector<nn::Matrix> targets;
  /// Ground-truth actions for rollout steps 2..steps, (B, 3) each.
  std::vector<nn::Matrix> future_actions;
};

/// Gathers items with `steps` successors. When `noise` is set, keypoints of
/// internal nodes in every input frame get independent N(0, sigma^2) offsets;
/// targets stay exact.
Batch assemble(const WindowSet& set, std::span<const std::size_t> items, int steps, std::mt19937_64* noise,
               double sigma);

/// Batch frames as tape constants.
std::vector<dyn::FrameBatch> frames_on_tape(nn::Tape& tape, const Batch& batch);

}  // namespace dlo::train
