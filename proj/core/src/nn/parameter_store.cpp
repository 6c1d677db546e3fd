// SPDX-License-Identifier: Apache-2.0
#include "dlo/nn/parameter_store.hpp"

#include "dlo/error.hpp"

#include <cstdlib>

namespace dlo::nn {

void ParameterStore::set(const std::string& name, Tensor value) {
  entries_.insert_or_assign(name, std::move(value));
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

Tensor& ParameterStore::mutable_at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

const std::string& ParameterStore::attribute(const std::string& key) const {
  auto it = attributes.find(key);
  if (it == attributes.end()) throw ConfigError("checkpoint lacks attribute '" + key + "'");
  return it->second;
}

double ParameterStore::attribute_double(const std::string& key) const {
  return std::strtod(attribute(key).c_str(), nullptr);
}

long long ParameterStore::attribute_int(const std::string& key) const {
  return std::strtoll(attribute(key).c_str(), nullptr, 10);
}

const std::vector<double>& ParameterStore::array(const std::string& key) const {
  auto it = arrays.find(key);
  if (it == arrays.end()) throw ConfigError("checkpoint lacks array '" + key + "'");
  return it->second;
}

}  // namespace dlo::nn
