// SPDX-License-Identifier: Apache-2.0
#include "dlo/nn/optim.hpp"

#include "dlo/error.hpp"

#include <cmath>

namespace dlo::nn {

void adam_step(ParameterStore& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, const AdamConfig& config) {
  for (const auto& [name, g] : grads) {
    const Tensor& p = params.at(name);
    if (p.shape() != g.shape()) throw ShapeError("adam_step: gradient shape differs for '" + name + "'");
    if (!g.all_finite()) throw NumericError("adam_step: non-finite gradient for '" + name + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (const auto& [name, g] : grads) {
    Tensor& p = params.mutable_at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, Tensor(p.shape(), 0.0));
    auto [v_it, v_new] = state.second_moment.try_emplace(name, Tensor(p.shape(), 0.0));
    auto pd = p.mutable_data();
    auto md = m_it->second.mutable_data();
    auto vd = v_it->second.mutable_data();
    const auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = config.beta1 * md[i] + (1.0 - config.beta1) * gd[i];
      vd[i] = config.beta2 * vd[i] + (1.0 - config.beta2) * gd[i] * gd[i];
      const double mhat = md[i] / c1;
      const double vhat = vd[i] / c2;
      pd[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
    p.check_finite("parameters after adam_step");
  }
}

Tensor sgd_step(const Tensor& vector, const Tensor& grad, double lr) {
  if (vector.shape() != grad.shape()) throw ShapeError("sgd_step: vector and gradient shapes differ");
  std::vector<double> out(vector.data().begin(), vector.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= lr * grad[i];
  return Tensor(vector.shape(), std::move(out));
}

void store_adam_state(const AdamState& state, ParameterStore& out) {
  out.attributes["adam.step"] = std::to_string(state.step);
  for (const auto& [name, t] : state.first_moment) out.set("adam.m/" + name, t);
  for (const auto& [name, t] : state.second_moment) out.set("adam.v/" + name, t);
}

AdamState load_adam_state(const ParameterStore& in) {
  AdamState state;
  state.step = in.attributes.count("adam.step") ? in.attribute_int("adam.step") : 0;
  for (const auto& [name, t] : in.entries()) {
    if (name.rfind("adam.m/", 0) == 0) state.first_moment.emplace(name.substr(7), t);
    if (name.rfind("adam.v/", 0) == 0) state.second_moment.emplace(name.substr(7), t);
  }
  return state;
}

}  // namespace dlo::nn
