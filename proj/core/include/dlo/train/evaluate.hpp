// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/dyn/model.hpp"
#include "dlo/repr/transformers.hpp"
#include "dlo/train/trainer.hpp"
#include "dlo/train/windows.hpp"

#include <array>
#include <span>
#include <vector>

namespace dlo::train {

/// sqrt(mean over keypoints of the squared point distance). Throws ShapeError on size mismatch.
double shape_rmse(std::span<const double> a, std::span<const double> b);

/// Per-step RMSE (steps 1..horizon), averaged over every window of `set`,
/// rolling out autoregressively with the recorded actions. `set` must come
/// from WindowSet::multi_step with at least this horizon.
std::vector<double> evaluate_multistep(const dyn::DynModel& model, const WindowSet& set, int horizon,
                                       int batch_size = 256);
/// Same protocol for the persistence predictor X_{t+k} = X_t.
std::vector<double> evaluate_persistence(const WindowSet& set, int horizon);

struct TimingStats {
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  double stddev_seconds = 0.0;
  int trials = 0;
};
/// Single-step predictions on a fixed input after 10 discarded warm-up calls.
TimingStats time_inference(const dyn::DynModel& model, int n_trials);

/// Transformer accuracy on a pair set. Wrench errors are mean absolute errors
/// per component, also divided by the set's own per-component std.
struct WrenchErrors {
  std::array<double, 3> mae{};
  std::array<double, 3> relative{};
  std::array<double, 3> wrench_std{};
};
WrenchErrors p2ft_errors(const repr::ForceTransformer& p2ft, const PairSet& set);
/// Mean Euclidean keypoint distance of F2PT(W) to X, in length units.
double f2pt_keypoint_error(const repr::ForceTransformer& f2pt, const PairSet& set);
/// P2FT(F2PT(W)) against W.
WrenchErrors round_trip_errors(const repr::ForceTransformer& p2ft, const repr::ForceTransformer& f2pt,
                               const PairSet& set);

}  // namespace dlo::train
