// SPDX-License-Identifier: Apache-2.0
#include "dlo/control/planner.hpp"

#include "dlo/error.hpp"

namespace dlo::control {

std::vector<sim::Wrench> interpolate_wrenches(const sim::Wrench& w0, const sim::Wrench& wd, int k) {
  if (k < 1) throw PreconditionError("waypoint count must be at least 1");
  std::vector<sim::Wrench> out;
  out.reserve(k);
  for (int i = 1; i <= k; ++i) {
    const double s = static_cast<double>(i) / k;
    out.push_back({w0.fx + s * (wd.fx - w0.fx), w0.fy + s * (wd.fy - w0.fy), w0.mz + s * (wd.mz - w0.mz)});
  }
  // exact endpoint regardless of rounding in s * (wd - w0)
  out.back() = wd;
  return out;
}

WaypointPlan plan_waypoints(const repr::ForceTransformer& p2ft, const repr::ForceTransformer& f2pt,
                            std::span<const double> x0, std::span<const double> xd, int k) {
  if (x0.size() != xd.size()) throw ShapeError("initial and target shapes differ in size");
  WaypointPlan plan;
  const auto w0 = repr::p2ft_forward(p2ft, x0);
  const auto wd = repr::p2ft_forward(p2ft, xd);
  if (w0.out_of_range) plan.warnings.push_back("initial shape outside the P2FT training range");
  if (wd.out_of_range) plan.warnings.push_back("target shape outside the P2FT training range");
  plan.wrenches = interpolate_wrenches(w0.wrench, wd.wrench, k);
  for (int i = 0; i + 1 < k; ++i) {
    auto s = repr::f2pt_forward(f2pt, plan.wrenches[i]);
    if (s.out_of_range) plan.warnings.push_back("waypoint " + std::to_string(i) + " outside the F2PT training range");
    plan.shapes.push_back(std::move(s.keypoints));
  }
  plan.shapes.emplace_back(xd.begin(), xd.end());
  return plan;
}

WaypointPlan direct_plan(std::span<const double> xd) {
  WaypointPlan plan;
  plan.shapes.emplace_back(xd.begin(), xd.end());
  return plan;
}

}  // namespace dlo::control
