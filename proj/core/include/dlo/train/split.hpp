// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/sim/dataset.hpp"

#include <cstdint>
#include <vector>

namespace dlo::train {

struct SplitSpec {
  int train = 8;
  int val = 1;
  int test = 1;
  std::uint64_t seed = 1;
};

struct Splits {
  sim::TrajectoryDataset train;
  sim::TrajectoryDataset val;
  sim::TrajectoryDataset test;
  std::vector<int> train_ids;
  std::vector<int> val_ids;
  std::vector<int> test_ids;
};

/// Trajectory-level split. Validation and test get floor(n * share) each and
/// the remainder goes to training. Throws PreconditionError below 10 trajectories.
Splits split_dataset(const sim::TrajectoryDataset& data, const SplitSpec& spec);

}  // namespace dlo::train
