// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/dyn/predict.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dlo::control {

struct ControlConfig {
  /// MPC horizon is min(horizon_cap, remaining step budget).
  int horizon_cap = 25;
  /// Gradient steps per control cycle.
  int iterations = 10;
  /// Step size on actions normalised by u_max.
  double learning_rate = 0.1;
  /// Waypoint switch and success thresholds on shape RMSE, as fractions of the rod length.
  double switch_threshold = 0.03;
  double success_threshold = 0.01;
  /// Hybrid strategy: waypoint count and step budget per waypoint.
  int waypoints = 4;
  int steps_per_waypoint = 50;
  /// Step budget of the position-only strategy.
  int direct_budget = 200;

  /// Throws ConfigError on violated invariants.
  void validate() const;
  std::string canonical() const;
};

/// Terminal cost of a normalised action sequence, |X_T - goal|^2 / delta^2 summed
/// over keypoints, where delta = u_max.dx * dt is the model's position scale.
struct SequenceCost {
  double loss = 0.0;
  /// d loss / d normalised action, one entry per step (empty unless requested).
  std::vector<sim::Action> gradient;
  std::vector<double> terminal;  ///< predicted X_T
};
SequenceCost sequence_cost(const dyn::DynModel& model, const dyn::HistoryWindow& history,
                           std::span<const double> goal, std::span<const sim::Action> normalized, bool with_gradient);

sim::Action to_physical(const sim::Action& normalized, const sim::Action& u_max);
sim::Action clamp_unit(const sim::Action& a);

struct MpcResult {
  /// Best iterate seen, normalised; never costlier than the initial sequence.
  std::vector<sim::Action> actions;
  /// Cost of every evaluated iterate, starting with the initial sequence.
  std::vector<double> loss_trace;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool step_halved = false;
};

/// Cost (and gradient) of a normalised sequence.
using CostFunction = std::function<SequenceCost(std::span<const sim::Action>)>;

/// Projected gradient descent on the normalised sequence, clamped to [-1, 1],
/// returning the best iterate. A non-finite cost resets to the last finite
/// iterate and halves the step once; a second one throws ControllerError.
MpcResult guarded_descent(const CostFunction& cost, std::vector<sim::Action> initial, const ControlConfig& config);

/// guarded_descent on sequence_cost. `history` is padded to the model's window length.
MpcResult mpc_optimize(const dyn::DynModel& model, const dyn::HistoryWindow& history, std::span<const double> goal,
                       std::vector<sim::Action> initial, const ControlConfig& config);

/// Drops the executed first action and repeats the last one, then resizes to
/// `horizon` by truncation or repetition (zeros when empty).
std::vector<sim::Action> warm_start(std::span<const sim::Action> previous, int horizon);

}  // namespace dlo::control
