// SPDX-License-Identifier: Apache-2.0
#include "dlo/nn/tensor.hpp"

#include "dlo/error.hpp"

#include <cmath>
#include <string>

namespace dlo::nn {

std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
  }
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("tensor shape product " + std::to_string(shape_product(shape_)) +
                     " != data length " + std::to_string(data_.size()));
  }
  check_finite("tensor construction");
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : Tensor(shape, std::vector<double>(shape_product(shape), fill)) {}

Tensor Tensor::from_matrix(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::move(data));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() == 2) return shape_[0];
  throw ShapeError("matrix view requires rank 1 or 2");
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() == 2) return shape_[1];
  throw ShapeError("matrix view requires rank 1 or 2");
}

Matrix Tensor::to_matrix() const {
  Matrix m(rows(), cols());
  std::copy(data_.begin(), data_.end(), m.data());
  return m;
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::check_finite(const char* context) const {
  if (!all_finite()) throw NumericError(std::string("non-finite value in ") + context);
}

}  // namespace dlo::nn
