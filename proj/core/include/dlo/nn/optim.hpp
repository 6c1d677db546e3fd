// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/parameter_store.hpp"
#include "dlo/nn/tensor.hpp"

#include <map>
#include <string>

namespace dlo::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  long long step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update. Parameters without a gradient entry are
/// left alone. A non-finite gradient aborts before any mutation and throws
/// NumericError; parameters are re-checked for finiteness afterwards.
void adam_step(ParameterStore& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, const AdamConfig& config);

/// vector - lr * grad; shapes must match (ShapeError).
Tensor sgd_step(const Tensor& vector, const Tensor& grad, double lr);

/// Save/restore Adam moments inside a parameter store under "adam.m/..", "adam.v/..".
void store_adam_state(const AdamState& state, ParameterStore& out);
AdamState load_adam_state(const ParameterStore& in);

}  // namespace dlo::nn
