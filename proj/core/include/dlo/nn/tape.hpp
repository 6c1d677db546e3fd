// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/parameter_store.hpp"
#include "dlo/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace dlo::nn {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;

  bool valid() const noexcept { return tape != nullptr && id >= 0; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Linear record of primitive operations for reverse-mode differentiation.
///
/// Every op appends a node holding its forward value and, if any input needs a
/// gradient, a closure that pushes the node's adjoint into its inputs. A tape
/// built with `record = false` only evaluates.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::int32_t self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }

  Var constant(Matrix value);
  /// Leaf that receives a gradient; `name` makes it visible to gradients().
  Var variable(Matrix value, const std::string& name = {});
  /// Named leaf from a tensor; its gradient keeps the tensor's shape.
  Var variable(const Tensor& value, const std::string& name);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  /// Adjoint after backward(); empty if no gradient reached the node.
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

  /// Seeds d(scalar)/d(scalar) = 1 and sweeps the tape in reverse.
  void backward(Var scalar);
  /// Gradients of every named variable leaf (zeros if unreached).
  std::map<std::string, Tensor> gradients() const;

  std::size_t size() const noexcept { return nodes_.size(); }

  // Op plumbing.
  Var push(Matrix value, bool requires_grad, Backward backward);
  Matrix& grad_ref(std::int32_t id);
  const Matrix& value_of(std::int32_t id) const { return nodes_[id].value; }
  const Matrix& grad_of(std::int32_t id) const { return nodes_[id].grad; }
  bool needs(std::int32_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  std::map<std::string, std::int32_t> named_;
  std::map<std::string, std::vector<std::size_t>> named_shapes_;
  bool record_;
};

/// Parameter leaves bound onto a tape, looked up by name.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParameterStore& store, bool requires_grad);
  /// Throws ConfigError for unknown names.
  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }

 private:
  std::map<std::string, Var> vars_;
};

/// Reverse sweep from a (1,1) output; returns gradients keyed by leaf name.
/// Throws PreconditionError when `scalar_output` is not a scalar on `tape`.
std::map<std::string, Tensor> backward(Tape& tape, Var scalar_output);

}  // namespace dlo::nn
