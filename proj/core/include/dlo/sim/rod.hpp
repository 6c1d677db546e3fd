// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace dlo::sim {

/// End-effector pose p = [r_e, theta_e] (m, m, rad).
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  bool operator==(const Pose&) const = default;
};

/// End-effector velocity u = [dr_e, dtheta_e] (m/s, m/s, rad/s).
struct Action {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
  bool operator==(const Action&) const = default;
  std::array<double, 3> as_array() const { return {dx, dy, dtheta}; }
};

/// Reaction at the clamped base: [F_x, F_y, M_z] (N, N, N m).
struct Wrench {
  double fx = 0.0;
  double fy = 0.0;
  double mz = 0.0;
  bool operator==(const Wrench&) const = default;
  std::array<double, 3> as_array() const { return {fx, fy, mz}; }
};

struct RodConfig {
  int n_segments = 40;
  double total_length = 1.0;
  /// k_b in E = sum_j k_b (theta_{j+1} - theta_j)^2.
  double bend_stiffness = 1.0;
  /// Penalty weight on the grasped-end pose mismatch (default 1e4 k_b).
  double clamp_penalty = 1e4;
  int n_keypoints = 11;
  /// Bound on the energy-gradient norm at an accepted equilibrium.
  double solver_tol = 1e-8;
  int max_solver_iters = 500;
  /// Per-component action caps.
  Action u_max{0.05, 0.05, 0.2};
  /// Destination sampling annulus, as fractions of total_length.
  double workspace_min = 0.3;
  double workspace_max = 0.95;

  /// Throws ConfigError on violated invariants.
  void validate() const;
  double segment_length() const { return total_length / n_segments; }
  double keypoint_spacing() const { return total_length / (n_keypoints - 1); }
  int keypoint_stride() const { return n_segments / (n_keypoints - 1); }
  /// Stable textual form used for hashing.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Absolute segment orientations plus the commanded end-effector pose. The
/// base sits at the origin with its tangent fixed along +x.
struct RodState {
  std::vector<double> angles;
  Pose ee;
  bool operator==(const RodState&) const = default;
};

RodState rest_state(const RodConfig& config);
/// Tip pose of the straight rod along +x.
Pose rest_tip_pose(const RodConfig& config);

/// Joint positions from the base (index 0) to the tip (index n_segments), 2 per joint.
std::vector<double> joint_positions(const RodConfig& config, const std::vector<double>& angles);
/// Maps to (-pi, pi].
double wrap_angle(double a);

/// Bending energy plus grasp penalty of `angles` under end-effector pose `ee`.
double total_energy(const RodConfig& config, const std::vector<double>& angles, const Pose& ee);
std::vector<double> energy_gradient(const RodConfig& config, const std::vector<double>& angles,
                                    const Pose& ee);
double residual(const RodConfig& config, const RodState& state);

/// Damped Newton minimisation over all segment angles, warm-started. Throws
/// SolverError carrying the final residual if max_solver_iters is exhausted.
RodState solve_equilibrium(const RodConfig& config, const RodState& warm_start, const Pose& ee);

/// W_e = -dE/d(base x, base y, base rotation) by central differences
/// (1e-6 m, 1e-6 rad). Throws PreconditionError if `state` is not an equilibrium.
Wrench base_wrench(const RodConfig& config, const RodState& state);

/// Advances the pose by action * dt and re-solves from `state`. Actions beyond
/// u_max are a PreconditionError.
RodState step(const RodConfig& config, const RodState& state, const Action& action, double dt);

/// Positions of the n_keypoints joints at uniform arc length, base first:
/// [x_1, y_1, ..., x_m, y_m].
std::vector<double> keypoints(const RodConfig& config, const RodState& state);

/// Mirror image about the x-axis.
RodState mirror(const RodState& state);

}  // namespace dlo::sim
