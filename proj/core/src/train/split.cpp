// SPDX-License-Identifier: Apache-2.0
#include "dlo/train/split.hpp"

#include "dlo/error.hpp"

#include <algorithm>
#include <random>

namespace dlo::train {

Splits split_dataset(const sim::TrajectoryDataset& data, const SplitSpec& spec) {
  if (spec.train < 1 || spec.val < 0 || spec.test < 0) throw ConfigError("split ratios must be non-negative, train positive");
  std::vector<int> ids = data.trajectory_ids();
  const int n = static_cast<int>(ids.size());
  if (n < 10) throw PreconditionError("need at least 10 trajectories to split, got " + std::to_string(n));
  std::mt19937_64 rng(spec.seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const int total = spec.train + spec.val + spec.test;
  const int n_val = n * spec.val / total;
  const int n_test = n * spec.test / total;
  Splits s;
  s.val_ids.assign(ids.begin(), ids.begin() + n_val);
  s.test_ids.assign(ids.begin() + n_val, ids.begin() + n_val + n_test);
  s.train_ids.assign(ids.begin() + n_val + n_test, ids.end());
  for (auto* v : {&s.train_ids, &s.val_ids, &s.test_ids}) std::sort(v->begin(), v->end());
  s.train = data.subset(s.train_ids);
  s.val = data.subset(s.val_ids);
  s.test = data.subset(s.test_ids);
  return s;
}

}  // namespace dlo::train
