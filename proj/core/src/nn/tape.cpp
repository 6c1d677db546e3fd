// SPDX-License-Identifier: Apache-2.0
#include "dlo/nn/tape.hpp"

#include "dlo/error.hpp"

namespace dlo::nn {

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::variable(Matrix value, const std::string& name) {
  Var v = push(std::move(value), record_, nullptr);
  if (!name.empty()) named_[name] = v.id;
  return v;
}

Var Tape::variable(const Tensor& value, const std::string& name) {
  Var v = variable(value.to_matrix(), name);
  named_shapes_[name] = value.shape();
  return v;
}

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad && record_;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Matrix& Tape::grad_ref(std::int32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var scalar) {
  if (scalar.tape != this) throw PreconditionError("backward: output not recorded on this tape");
  const Matrix& out = nodes_[scalar.id].value;
  if (out.rows() != 1 || out.cols() != 1) {
    throw PreconditionError("backward: output must be a scalar, got (" +
                            std::to_string(out.rows()) + ", " + std::to_string(out.cols()) + ")");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[scalar.id].requires_grad) return;
  grad_ref(scalar.id)(0, 0) = 1.0;
  for (std::int32_t id = scalar.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, id);
  }
}

std::map<std::string, Tensor> Tape::gradients() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : named_) {
    const Node& n = nodes_[id];
    Matrix g = n.grad.size() ? n.grad : Matrix::Zero(n.value.rows(), n.value.cols());
    auto shape = named_shapes_.find(name);
    if (shape == named_shapes_.end()) {
      out.emplace(name, Tensor::from_matrix(g));
    } else {
      out.emplace(name, Tensor(shape->second, std::vector<double>(g.data(), g.data() + g.size())));
    }
  }
  return out;
}

BoundParams::BoundParams(Tape& tape, const ParameterStore& store, bool requires_grad) {
  for (const auto& [name, t] : store.entries()) {
    vars_.emplace(name, requires_grad ? tape.variable(t, name)
                                      : tape.constant(t.to_matrix()));
  }
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

std::map<std::string, Tensor> backward(Tape& tape, Var scalar_output) {
  tape.backward(scalar_output);
  return tape.gradients();
}

}  // namespace dlo::nn
