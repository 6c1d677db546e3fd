// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/control/mpc.hpp"
#include "dlo/control/planner.hpp"
#include "dlo/sim/rod.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dlo::control {

/// One executed control cycle. `keypoints` and `wrench` describe the state the
/// action was planned from.
struct StepLog {
  int t = 0;
  int waypoint = 0;
  std::vector<double> keypoints;
  sim::Action action;  ///< physical units
  sim::Wrench wrench;
  double rmse_waypoint = 0.0;
  double rmse_target = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool operator==(const StepLog&) const = default;
};

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  double final_rmse = 0.0;
  std::vector<double> final_keypoints;
  std::vector<StepLog> log;
  /// Controller or solver failure that ended the episode early.
  std::string error;
  std::vector<std::string> warnings;
  bool operator==(const EpisodeResult&) const = default;
};

/// Closed-loop control on the simulator. Each waypoint but the last is left
/// once the shape RMSE drops strictly below switch_threshold * L or its step
/// budget is spent. The episode succeeds as soon as the RMSE to the final
/// shape is strictly below success_threshold * L. `budget` is per waypoint.
EpisodeResult run_episode(const sim::RodConfig& rod, const sim::RodState& initial, const dyn::DynModel& model,
                          const WaypointPlan& plan, const ControlConfig& config, int budget);

/// Line-delimited JSON: a header with the initial rod state, one line per
/// StepLog, then a summary line.
void write_episode_log(std::ostream& out, const sim::RodState& initial, const EpisodeResult& result);
struct EpisodeLog {
  sim::RodState initial;
  EpisodeResult result;
};
EpisodeLog read_episode_log(std::istream& in);
void save_episode_log(const std::filesystem::path& path, const sim::RodState& initial, const EpisodeResult& result);
EpisodeLog load_episode_log(const std::filesystem::path& path);

/// Re-simulates the logged actions from the logged initial state and returns
/// the largest keypoint deviation from the logged shapes (including the final one).
double replay_deviation(const sim::RodConfig& rod, const EpisodeLog& log, double dt);

}  // namespace dlo::control
