// SPDX-License-Identifier: Apache-2.0
#include "dlo/repr/transformers.hpp"

#include "dlo/error.hpp"
#include "dlo/nn/checkpoint.hpp"

#include <cmath>
#include <sstream>

namespace dlo::repr {
namespace {

std::string join_dims(const std::vector<int>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(dims[i]);
  }
  return s;
}

std::vector<int> parse_dims(const std::string& s) {
  std::vector<int> dims;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      dims.push_back(std::stoi(tok));
    } catch (const std::logic_error&) {
      throw ConfigError("malformed layer dims '" + s + "'");
    }
  }
  if (dims.size() < 2) throw ConfigError("layer dims need at least two entries");
  return dims;
}

Normalizer identity_norm(int dim) {
  Normalizer n;
  n.mean.assign(dim, 0.0);
  n.std.assign(dim, 1.0);
  return n;
}

}  // namespace

std::string to_string(TransformerKind kind) { return kind == TransformerKind::p2ft ? "p2ft" : "f2pt"; }

TransformerKind transformer_kind_from_string(const std::string& name) {
  if (name == "p2ft") return TransformerKind::p2ft;
  if (name == "f2pt") return TransformerKind::f2pt;
  throw ConfigError("unknown transformer kind '" + name + "'");
}

std::vector<int> default_transformer_dims(TransformerKind kind, int n_keypoints) {
  if (kind == TransformerKind::p2ft) return {2 * n_keypoints, 64, 128, 128, 64, 16, 3};
  return {3, 16, 64, 128, 128, 64, 2 * n_keypoints};
}

std::size_t ForceTransformer::parameter_count() const { return nn::mlp_parameter_count(dims); }

ForceTransformer make_transformer(TransformerKind kind, int n_keypoints, std::mt19937_64& rng,
                                  nn::Activation activation) {
  if (n_keypoints < 2) throw ConfigError("transformers need at least 2 keypoints");
  ForceTransformer net;
  net.kind = kind;
  net.n_keypoints = n_keypoints;
  net.dims = default_transformer_dims(kind, n_keypoints);
  net.activation = activation;
  nn::init_mlp(net.params, ForceTransformer::kPrefix, net.dims, rng);
  set_normalization(net, identity_norm(net.input_dim()), identity_norm(net.output_dim()));
  return net;
}

void set_normalization(ForceTransformer& net, Normalizer in, Normalizer out) {
  if (static_cast<int>(in.dim()) != net.input_dim() || static_cast<int>(out.dim()) != net.output_dim()) {
    throw ShapeError("normaliser widths do not match the network");
  }
  net.in_norm = std::move(in);
  net.out_norm = std::move(out);
  net.in_norm.store(net.params, "norm.in");
  net.out_norm.store(net.params, "norm.out");
}

nn::Var transformer_forward(const nn::BoundParams& params, const ForceTransformer& net, nn::Var input) {
  return nn::mlp_forward(params, ForceTransformer::kPrefix, net.dims, input, net.activation);
}

nn::Matrix transformer_predict(const ForceTransformer& net, const nn::Matrix& inputs) {
  if (inputs.cols() != net.input_dim()) throw ShapeError("transformer input width mismatch");
  nn::Tape tape(false);
  nn::BoundParams bound(tape, net.params, false);
  nn::Var x = tape.constant(net.in_norm.apply(inputs));
  return net.out_norm.invert(transformer_forward(bound, net, x).value());
}

bool out_of_range(const ForceTransformer& net, std::span<const double> input) {
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (std::abs((input[i] - net.in_norm.mean[i]) / net.in_norm.std[i]) > ForceTransformer::kRangeSigma) {
      return true;
    }
  }
  return false;
}

WrenchPrediction p2ft_forward(const ForceTransformer& net, std::span<const double> keypoints) {
  if (net.kind != TransformerKind::p2ft) throw ConfigError("p2ft_forward needs a P2FT network");
  if (static_cast<int>(keypoints.size()) != net.input_dim()) throw ShapeError("P2FT expects 2m keypoint values");
  nn::Matrix x(1, net.input_dim());
  for (int i = 0; i < net.input_dim(); ++i) x(0, i) = keypoints[i];
  const nn::Matrix y = transformer_predict(net, x);
  return {sim::Wrench{y(0, 0), y(0, 1), y(0, 2)}, out_of_range(net, keypoints)};
}

ShapePrediction f2pt_forward(const ForceTransformer& net, const sim::Wrench& wrench) {
  if (net.kind != TransformerKind::f2pt) throw ConfigError("f2pt_forward needs an F2PT network");
  const auto w = wrench.as_array();
  nn::Matrix x(1, 3);
  x << w[0], w[1], w[2];
  const nn::Matrix y = transformer_predict(net, x);
  ShapePrediction out;
  out.keypoints.assign(y.data(), y.data() + y.size());
  out.out_of_range = out_of_range(net, w);
  return out;
}

nn::ParameterStore to_checkpoint(const ForceTransformer& net) {
  nn::ParameterStore s = net.params;
  s.kind = to_string(net.kind);
  s.attributes["dims"] = join_dims(net.dims);
  s.attributes["activation"] = nn::to_string(net.activation);
  s.attributes["m"] = std::to_string(net.n_keypoints);
  return s;
}

ForceTransformer from_checkpoint(const nn::ParameterStore& store) {
  ForceTransformer net;
  net.kind = transformer_kind_from_string(store.kind);
  net.dims = parse_dims(store.attribute("dims"));
  net.activation = nn::activation_from_string(store.attribute("activation"));
  net.n_keypoints = static_cast<int>(store.attribute_int("m"));
  if (net.dims != default_transformer_dims(net.kind, net.n_keypoints)) {
    throw ConfigError("checkpoint layer dims " + join_dims(net.dims) + " do not match " + store.kind);
  }
  net.params = store;
  for (std::size_t k = 0; k + 1 < net.dims.size(); ++k) {
    const std::string w = std::string(ForceTransformer::kPrefix) + ".layer" + std::to_string(k) + ".weight";
    const auto& t = net.params.at(w);
    if (t.rows() != static_cast<std::size_t>(net.dims[k]) || t.cols() != static_cast<std::size_t>(net.dims[k + 1])) {
      throw ShapeError("checkpoint tensor '" + w + "' has the wrong shape");
    }
  }
  net.in_norm = Normalizer::load(store, "norm.in");
  net.out_norm = Normalizer::load(store, "norm.out");
  if (static_cast<int>(net.in_norm.dim()) != net.input_dim() ||
      static_cast<int>(net.out_norm.dim()) != net.output_dim()) {
    throw ShapeError("checkpoint normaliser widths do not match the network");
  }
  return net;
}

void save_transformer(const std::filesystem::path& path, const ForceTransformer& net) {
  nn::save_checkpoint(path, to_checkpoint(net));
}

ForceTransformer load_transformer(const std::filesystem::path& path) {
  return from_checkpoint(nn::load_checkpoint(path));
}

}  // namespace dlo::repr
