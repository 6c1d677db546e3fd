// SPDX-License-Identifier: Apache-2.0
#include "dlo/train/evaluate.hpp"

#include "dlo/dyn/forward.hpp"
#include "dlo/dyn/predict.hpp"
#include "dlo/error.hpp"
#include "dlo/sim/rod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace dlo::train {
namespace {

/// Per-sample RMSE between (B*m, 2) blocks.
void accumulate_rmse(const nn::Matrix& pred, const nn::Matrix& target, int m, double& sum) {
  const Eigen::Index b = pred.rows() / m;
  for (Eigen::Index s = 0; s < b; ++s) {
    const double sq = (pred.middleRows(s * m, m) - target.middleRows(s * m, m)).squaredNorm();
    sum += std::sqrt(sq / m);
  }
}

void check_horizon(const WindowSet& set, int horizon) {
  if (horizon < 1) throw PreconditionError("horizon must be at least 1");
  for (const auto& it : set.items()) {
    if (it.t + horizon >= set.trajectory_length(it.traj)) {
      throw PreconditionError("horizon " + std::to_string(horizon) + " is too long for the evaluation windows");
    }
  }
}

}  // namespace

double shape_rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() % 2 != 0 || a.empty()) throw ShapeError("shape_rmse: keypoint sets differ in size");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq / static_cast<double>(a.size() / 2));
}

std::vector<double> evaluate_multistep(const dyn::DynModel& model, const WindowSet& set, int horizon,
                                       int batch_size) {
  check_horizon(set, horizon);
  const int m = model.config.n_keypoints;
  std::vector<double> sums(horizon, 0.0);
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < set.size(); first += batch_size) {
    const std::size_t count = std::min<std::size_t>(batch_size, set.size() - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    const Batch b = assemble(set, idx, horizon, nullptr, 0.0);
    nn::Tape tape(false);
    nn::BoundParams p(tape, model.params, false);
    std::vector<nn::Var> actions{tape.constant(b.actions.back())};
    for (const auto& a : b.future_actions) actions.push_back(tape.constant(a));
    const auto preds = dyn::rollout_tape(p, model, frames_on_tape(tape, b), actions, b.size);
    for (int k = 0; k < horizon; ++k) accumulate_rmse(preds[k].value(), b.targets[k], m, sums[k]);
  }
  for (double& s : sums) s /= static_cast<double>(set.size());
  return sums;
}

std::vector<double> evaluate_persistence(const WindowSet& set, int horizon) {
  check_horizon(set, horizon);
  std::vector<double> sums(horizon, 0.0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& it = set.items()[i];
    const auto& now = set.record(it.traj, it.t).keypoints;
    for (int k = 1; k <= horizon; ++k) sums[k - 1] += shape_rmse(now, set.record(it.traj, it.t + k).keypoints);
  }
  for (double& s : sums) s /= static_cast<double>(set.size());
  return sums;
}

TimingStats time_inference(const dyn::DynModel& model, int n_trials) {
  if (n_trials < 1) throw PreconditionError("n_trials must be positive");
  sim::RodConfig rod;
  rod.n_keypoints = model.config.n_keypoints;
  rod.total_length = model.config.total_length;
  rod.n_segments = 4 * (rod.n_keypoints - 1);
  const sim::RodState rest = sim::rest_state(rod);
  const dyn::Frame frame{sim::keypoints(rod, rest), rest.ee, sim::Action{}};
  const dyn::HistoryWindow history(model.config.history, frame);
  const sim::Action u{0.5 * model.config.u_max.dx, 0.0, 0.0};
  for (int i = 0; i < 10; ++i) (void)dyn::predict_one_step(model, history, u);
  std::vector<double> times(n_trials);
  for (int i = 0; i < n_trials; ++i) {
    const auto start = std::chrono::steady_clock::now();
    (void)dyn::predict_one_step(model, history, u);
    times[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  TimingStats st;
  st.trials = n_trials;
  st.mean_seconds = std::accumulate(times.begin(), times.end(), 0.0) / n_trials;
  double var = 0.0;
  for (double t : times) var += (t - st.mean_seconds) * (t - st.mean_seconds);
  st.stddev_seconds = std::sqrt(var / n_trials);
  std::sort(times.begin(), times.end());
  st.median_seconds = n_trials % 2 ? times[n_trials / 2] : 0.5 * (times[n_trials / 2 - 1] + times[n_trials / 2]);
  return st;
}

namespace {

WrenchErrors wrench_errors(const nn::Matrix& pred, const nn::Matrix& truth) {
  if (truth.rows() < 2) throw PreconditionError("need at least two wrench samples");
  WrenchErrors e;
  const double n = static_cast<double>(truth.rows());
  for (int k = 0; k < 3; ++k) {
    e.mae[k] = (pred.col(k) - truth.col(k)).cwiseAbs().sum() / n;
    const double mean = truth.col(k).mean();
    e.wrench_std[k] = std::max(std::sqrt((truth.col(k).array() - mean).square().sum() / n), 1e-12);
    e.relative[k] = e.mae[k] / e.wrench_std[k];
  }
  return e;
}

}  // namespace

WrenchErrors p2ft_errors(const repr::ForceTransformer& p2ft, const PairSet& set) {
  return wrench_errors(repr::transformer_predict(p2ft, set.keypoints), set.wrenches);
}

double f2pt_keypoint_error(const repr::ForceTransformer& f2pt, const PairSet& set) {
  if (set.size() == 0) throw PreconditionError("empty pair set");
  const nn::Matrix pred = repr::transformer_predict(f2pt, set.wrenches);
  const Eigen::Index m = set.keypoints.cols() / 2;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    for (Eigen::Index n = 0; n < m; ++n) {
      sum += std::hypot(pred(i, 2 * n) - set.keypoints(i, 2 * n), pred(i, 2 * n + 1) - set.keypoints(i, 2 * n + 1));
    }
  }
  return sum / static_cast<double>(pred.rows() * m);
}

WrenchErrors round_trip_errors(const repr::ForceTransformer& p2ft, const repr::ForceTransformer& f2pt,
                               const PairSet& set) {
  const nn::Matrix shapes = repr::transformer_predict(f2pt, set.wrenches);
  return wrench_errors(repr::transformer_predict(p2ft, shapes), set.wrenches);
}

}  // namespace dlo::train
