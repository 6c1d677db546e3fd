// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/parameter_store.hpp"
#include "dlo/nn/tensor.hpp"

#include <string>
#include <vector>

namespace dlo::repr {

/// Per-column standardisation z = (v - mean) / std.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;

  static constexpr double kStdFloor = 1e-8;

  /// Fits on the rows of `data`. Throws PreconditionError when empty.
  static Normalizer fit(const nn::Matrix& data);
  std::size_t dim() const { return mean.size(); }
  nn::Matrix apply(const nn::Matrix& rows) const;
  nn::Matrix invert(const nn::Matrix& rows) const;
  std::vector<double> apply(const std::vector<double>& v) const;
  std::vector<double> invert(const std::vector<double>& v) const;

  /// Stored as arrays "<prefix>.mean" and "<prefix>.std".
  void store(nn::ParameterStore& out, const std::string& prefix) const;
  static Normalizer load(const nn::ParameterStore& in, const std::string& prefix);
  bool operator==(const Normalizer&) const = default;
};

}  // namespace dlo::repr
