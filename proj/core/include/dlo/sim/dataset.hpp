// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/sim/rod.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dlo::sim {

struct TrajectoryRecord {
  int traj_id = 0;
  int t = 0;
  std::vector<double> keypoints;  ///< X, 2m values
  Pose ee;                        ///< p
  Action action;                  ///< u applied at t
  Wrench wrench;                  ///< W_e at t
  bool operator==(const TrajectoryRecord&) const = default;
};

struct CollectConfig {
  int n_traj = 300;
  int steps_per_traj = 100;
  double dt = 0.1;
  std::uint64_t seed = 1;
};

/// Records ordered by (traj_id, t). Header fields mirror the file header.
struct TrajectoryDataset {
  std::uint64_t config_hash = 0;
  int n_keypoints = 0;
  double dt = 0.0;
  double total_length = 1.0;
  double workspace_min = 0.0;
  double workspace_max = 0.0;
  std::uint64_t seed = 0;
  std::vector<TrajectoryRecord> records;

  /// Trajectory ids in first-appearance order.
  std::vector<int> trajectory_ids() const;
  /// Records of trajectory `id`, in time order (contiguous by invariant).
  std::span<const TrajectoryRecord> trajectory(int id) const;
  /// Copy restricted to the given trajectories, order preserved.
  TrajectoryDataset subset(std::span<const int> ids) const;

  bool operator==(const TrajectoryDataset&) const = default;
};

/// Samples a destination pose inside the workspace annulus.
Pose sample_destination(const RodConfig& config, std::mt19937_64& rng);

/// Simulates one trajectory from rest: the end effector heads toward a random
/// destination at capped speed and picks a new one on arrival. Uses seed
/// `base_seed + traj_id`. If `final_state` is given it receives the rod state
/// after the last recorded step's action.
std::vector<TrajectoryRecord> collect_trajectory(const RodConfig& config, const CollectConfig& cc,
                                                 int traj_id, RodState* final_state = nullptr);
TrajectoryDataset collect_trajectories(const RodConfig& config, const CollectConfig& cc);

/// Text format: one header line
///   "# dlo-trajectories v1 config_hash=<hex> m=<m> dt=<dt> length=<L> workspace=<lo>,<hi> seed=<s> records=<n>"
/// then one line per record "traj_id t X[2m] p[3] u[3] W[3]", doubles at 17 significant digits.
void write_dataset(std::ostream& out, const TrajectoryDataset& data);
TrajectoryDataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const TrajectoryDataset& data);
TrajectoryDataset load_dataset(const std::filesystem::path& path);

}  // namespace dlo::sim
