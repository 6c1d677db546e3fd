// SPDX-License-Identifier: Apache-2.0
#include "dlo/repr/normalizer.hpp"

#include "dlo/error.hpp"

#include <cmath>

namespace dlo::repr {

Normalizer Normalizer::fit(const nn::Matrix& data) {
  if (data.rows() == 0 || data.cols() == 0) throw PreconditionError("cannot fit a normaliser on an empty dataset");
  Normalizer n;
  const auto cols = static_cast<std::size_t>(data.cols());
  n.mean.resize(cols);
  n.std.resize(cols);
  const double rows = static_cast<double>(data.rows());
  for (std::size_t c = 0; c < cols; ++c) {
    const auto col = data.col(static_cast<Eigen::Index>(c));
    const double mu = col.sum() / rows;
    const double var = (col.array() - mu).square().sum() / rows;
    n.mean[c] = mu;
    n.std[c] = std::max(std::sqrt(var), kStdFloor);
  }
  return n;
}

nn::Matrix Normalizer::apply(const nn::Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != dim()) throw ShapeError("normaliser width mismatch");
  nn::Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    out.col(c) = (rows.col(c).array() - mean[c]) / std[c];
  }
  return out;
}

nn::Matrix Normalizer::invert(const nn::Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != dim()) throw ShapeError("normaliser width mismatch");
  nn::Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    out.col(c) = rows.col(c).array() * std[c] + mean[c];
  }
  return out;
}

std::vector<double> Normalizer::apply(const std::vector<double>& v) const {
  if (v.size() != dim()) throw ShapeError("normaliser width mismatch");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean[i]) / std[i];
  return out;
}

std::vector<double> Normalizer::invert(const std::vector<double>& v) const {
  if (v.size() != dim()) throw ShapeError("normaliser width mismatch");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * std[i] + mean[i];
  return out;
}

void Normalizer::store(nn::ParameterStore& out, const std::string& prefix) const {
  out.arrays[prefix + ".mean"] = mean;
  out.arrays[prefix + ".std"] = std;
}

Normalizer Normalizer::load(const nn::ParameterStore& in, const std::string& prefix) {
  Normalizer n;
  n.mean = in.array(prefix + ".mean");
  n.std = in.array(prefix + ".std");
  if (n.mean.size() != n.std.size()) throw ConfigError("normaliser arrays '" + prefix + "' differ in length");
  return n;
}

}  // namespace dlo::repr
