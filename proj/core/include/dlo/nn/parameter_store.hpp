// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/tensor.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dlo::nn {

/// Named model parameters plus the header metadata that travels with a
/// checkpoint. std::map keeps iteration lexicographic.
class ParameterStore {
 public:
  std::string kind;
  std::uint64_t config_hash = 0;
  /// Free-form scalar metadata (history length, radius, layer dims, ...).
  std::map<std::string, std::string> attributes;
  /// Numeric header arrays, e.g. normalization means and deviations.
  std::map<std::string, std::vector<double>> arrays;

  void set(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  /// Throws ConfigError when absent.
  const Tensor& at(const std::string& name) const;
  Tensor& mutable_at(const std::string& name);
  void erase(const std::string& name) { entries_.erase(name); }

  const std::map<std::string, Tensor>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  /// Total number of scalar parameters.
  std::size_t parameter_count() const;

  const std::string& attribute(const std::string& key) const;
  double attribute_double(const std::string& key) const;
  long long attribute_int(const std::string& key) const;
  const std::vector<double>& array(const std::string& key) const;

  bool operator==(const ParameterStore& other) const = default;

 private:
  std::map<std::string, Tensor> entries_;
};

}  // namespace dlo::nn
