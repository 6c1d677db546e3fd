// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/repr/transformers.hpp"
#include "dlo/sim/rod.hpp"

#include <span>
#include <string>
#include <vector>

namespace dlo::control {

/// Sub-goals in order; the last entry is the target itself.
struct WaypointPlan {
  std::vector<sim::Wrench> wrenches;
  std::vector<std::vector<double>> shapes;
  /// Set when a transformer saw an input far outside its training range.
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(shapes.size()); }
};

/// W_k = W_0 + (k/K)(W_d - W_0) for k = 1..K. Throws PreconditionError for K < 1.
std::vector<sim::Wrench> interpolate_wrenches(const sim::Wrench& w0, const sim::Wrench& wd, int k);

/// Wrench endpoints from P2FT, intermediate shapes from F2PT(W_k) for k < K,
/// and X_d itself as the final shape.
WaypointPlan plan_waypoints(const repr::ForceTransformer& p2ft, const repr::ForceTransformer& f2pt,
                            std::span<const double> x0, std::span<const double> xd, int k);

/// The single-goal plan used by the position-only MPC.
WaypointPlan direct_plan(std::span<const double> xd);

}  // namespace dlo::control
