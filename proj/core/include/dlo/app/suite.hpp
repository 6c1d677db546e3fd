// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/app/config.hpp"
#include "dlo/sim/rod.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dlo::app {

enum class DeformationClass { large, small };
std::string to_string(DeformationClass c);

struct BenchmarkTask {
  int id = 0;
  DeformationClass label = DeformationClass::large;
  /// Distance between the two base wrenches in units of the pool's per-component std.
  double wrench_distance = 0.0;
  sim::RodState initial;
  sim::RodState target;
  std::vector<double> target_keypoints;
  bool operator==(const BenchmarkTask&) const = default;
};

struct BenchmarkSuite {
  std::uint64_t seed = 0;
  std::uint64_t rod_hash = 0;
  /// Wrench-distance quantiles of all sampled pairs.
  double small_cutoff = 0.0;
  double large_cutoff = 0.0;
  std::vector<BenchmarkTask> tasks;
  bool operator==(const BenchmarkSuite&) const = default;
};

/// Samples suite.pool equilibria by random motion from rest, scores every
/// ordered pair by wrench distance and draws `large` pairs above the upper
/// quantile and `small` pairs below the lower one. Throws PreconditionError
/// when a class has too few candidates.
BenchmarkSuite generate_suite(const RunConfig& config);

void save_suite(const std::filesystem::path& path, const BenchmarkSuite& suite);
BenchmarkSuite load_suite(const std::filesystem::path& path);

/// Linear-interpolation quantile of `values` (copied and sorted), q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace dlo::app
