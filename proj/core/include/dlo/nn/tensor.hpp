// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace dlo::nn {

/// Row-major dense matrix used for every value on the tape.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Shaped, finite, row-major array of doubles.
///
/// Construction rejects shape/data mismatches (ShapeError) and NaN/Inf
/// payloads (NumericError). Tensors of rank <= 2 convert to and from Matrix;
/// rank-1 tensors map to a single row.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  static Tensor from_matrix(const Matrix& m);
  static Tensor vector(std::vector<double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> mutable_data() noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Rows/cols of the matrix view: (1, n) for rank 1, (r, c) for rank 2.
  std::size_t rows() const;
  std::size_t cols() const;
  Matrix to_matrix() const;

  bool all_finite() const noexcept;
  void check_finite(const char* context) const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_product(std::span<const std::size_t> shape);

}  // namespace dlo::nn
