// SPDX-License-Identifier: Apache-2.0
#include "dlo/train/windows.hpp"

#include "dlo/error.hpp"

namespace dlo::train {

void WindowSet::index() {
  trajs_.clear();
  for (int id : data_.trajectory_ids()) trajs_.push_back(data_.trajectory(id));
}

WindowSet WindowSet::one_step(sim::TrajectoryDataset data, int history) {
  WindowSet s;
  s.data_ = std::move(data);
  s.history_ = history;
  s.index();
  for (int k = 0; k < static_cast<int>(s.trajs_.size()); ++k) {
    for (int t = 0; t + 1 < static_cast<int>(s.trajs_[k].size()); ++t) s.items_.push_back({k, t});
  }
  return s;
}

WindowSet WindowSet::multi_step(sim::TrajectoryDataset data, int history, int horizon) {
  if (horizon < 1) throw PreconditionError("horizon must be at least 1");
  WindowSet s;
  s.data_ = std::move(data);
  s.history_ = history;
  s.index();
  for (int k = 0; k < static_cast<int>(s.trajs_.size()); ++k) {
    const int len = static_cast<int>(s.trajs_[k].size());
    for (int t = history - 1; t + horizon <= len - 1; ++t) s.items_.push_back({k, t});
  }
  if (s.items_.empty()) {
    throw PreconditionError("horizon " + std::to_string(horizon) + " with history " + std::to_string(history) +
                            " is too long for every trajectory");
  }
  return s;
}

dyn::HistoryWindow WindowSet::window(std::size_t i) const {
  const Item& it = items_.at(i);
  dyn::HistoryWindow w;
  for (int k = it.t - history_ + 1; k <= it.t; ++k) {
    const sim::TrajectoryRecord& r = record(it.traj, std::max(k, 0));
    w.push_back(dyn::Frame{r.keypoints, r.ee, k < 0 ? sim::Action{} : r.action});
  }
  return w;
}

Batch assemble(const WindowSet& set, std::span<const std::size_t> items, int steps, std::mt19937_64* noise,
               double sigma) {
  const int h = set.history();
  const int m = set.n_keypoints();
  const int b = static_cast<int>(items.size());
  if (b == 0) throw PreconditionError("empty batch");
  Batch out;
  out.size = b;
  out.positions.assign(h, nn::Matrix(static_cast<Eigen::Index>(b) * m, 2));
  out.poses.assign(h, nn::Matrix(b, 3));
  out.actions.assign(h, nn::Matrix(b, 3));
  out.targets.assign(steps, nn::Matrix(static_cast<Eigen::Index>(b) * m, 2));
  out.future_actions.assign(std::max(steps - 1, 0), nn::Matrix(b, 3));
  std::normal_distribution<double> gauss(0.0, sigma);
  for (int s = 0; s < b; ++s) {
    const WindowSet::Item& it = set.items().at(items[s]);
    if (it.t + steps >= set.trajectory_length(it.traj)) throw PreconditionError("window lacks successor records");
    for (int f = 0; f < h; ++f) {
      const int k = it.t - h + 1 + f;
      const sim::TrajectoryRecord& r = set.record(it.traj, std::max(k, 0));
      for (int n = 0; n < m; ++n) {
        double x = r.keypoints[2 * n], y = r.keypoints[2 * n + 1];
        if (noise && n > 0 && n < m - 1) {
          x += gauss(*noise);
          y += gauss(*noise);
        }
        out.positions[f](static_cast<Eigen::Index>(s) * m + n, 0) = x;
        out.positions[f](static_cast<Eigen::Index>(s) * m + n, 1) = y;
      }
      out.poses[f].row(s) << r.ee.x, r.ee.y, r.ee.theta;
      if (k < 0) {
        out.actions[f].row(s).setZero();
      } else {
        out.actions[f].row(s) << r.action.dx, r.action.dy, r.action.dtheta;
      }
    }
    for (int k = 1; k <= steps; ++k) {
      const sim::TrajectoryRecord& r = set.record(it.traj, it.t + k);
      for (int n = 0; n < m; ++n) {
        out.targets[k - 1](static_cast<Eigen::Index>(s) * m + n, 0) = r.keypoints[2 * n];
        out.targets[k - 1](static_cast<Eigen::Index>(s) * m + n, 1) = r.keypoints[2 * n + 1];
      }
      if (k < steps) out.future_actions[k - 1].row(s) << r.action.dx, r.action.dy, r.action.dtheta;
    }
  }
  return out;
}

std::vector<dyn::FrameBatch> frames_on_tape(nn::Tape& tape, const Batch& batch) {
  std::vector<dyn::FrameBatch> frames;
  for (std::size_t f = 0; f < batch.positions.size(); ++f) {
    frames.push_back({tape.constant(batch.positions[f]), tape.constant(batch.poses[f]), tape.constant(batch.actions[f])});
  }
  return frames;
}

}  // namespace dlo::train
