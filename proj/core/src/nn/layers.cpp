// SPDX-License-Identifier: Apache-2.0
#include "dlo/nn/layers.hpp"

#include "dlo/error.hpp"

#include <cmath>

namespace dlo::nn {
namespace {

std::string layer_name(const std::string& prefix, std::size_t k, const char* leaf) {
  return prefix + ".layer" + std::to_string(k) + "." + leaf;
}

Tensor zeros(std::size_t n) { return Tensor({n}, 0.0); }
Tensor ones(std::size_t n) { return Tensor({n}, 1.0); }

Var activate(Var x, Activation a) { return a == Activation::relu ? relu(x) : tanh(x); }

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

Tensor normal_weight(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  std::vector<double> data(fan_in * fan_out);
  for (auto& v : data) v = dist(rng);
  return Tensor({fan_in, fan_out}, std::move(data));
}

void init_mlp(ParameterStore& store, const std::string& prefix, std::span<const int> dims,
              std::mt19937_64& rng) {
  if (dims.size() < 2) throw ConfigError("MLP needs at least input and output dims");
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    store.set(layer_name(prefix, k, "weight"), normal_weight(dims[k], dims[k + 1], rng));
    store.set(layer_name(prefix, k, "bias"), zeros(dims[k + 1]));
  }
}

Var mlp_forward(const BoundParams& params, const std::string& prefix, std::span<const int> dims,
                Var input, Activation activation) {
  if (dims.size() < 2) throw ConfigError("MLP needs at least input and output dims");
  if (input.cols() != dims[0]) {
    throw ShapeError(prefix + ": input width " + std::to_string(input.cols()) +
                     " != first layer " + std::to_string(dims[0]));
  }
  Var h = input;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    Var w = params[layer_name(prefix, k, "weight")];
    if (w.rows() != dims[k] || w.cols() != dims[k + 1]) {
      throw ShapeError(prefix + ": layer " + std::to_string(k) + " weight has wrong shape");
    }
    h = linear(h, w, params[layer_name(prefix, k, "bias")]);
    if (k + 2 < dims.size()) h = activate(h, activation);
  }
  return h;
}

Tensor mlp_forward(const ParameterStore& params, std::span<const int> dims, const Tensor& input,
                   Activation activation, const std::string& prefix) {
  Tape tape(false);
  BoundParams bound(tape, params, false);
  Var x = tape.constant(input.to_matrix());
  Var y = mlp_forward(bound, prefix, dims, x, activation);
  Tensor out = Tensor::from_matrix(y.value());
  if (input.rank() == 1) return Tensor::vector(std::vector<double>(out.data().begin(), out.data().end()));
  return out;
}

std::size_t mlp_parameter_count(std::span<const int> dims) {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    n += static_cast<std::size_t>(dims[k]) * dims[k + 1] + dims[k + 1];
  }
  return n;
}

namespace {

std::string gru_name(const std::string& prefix, int layer, const char* leaf) {
  return prefix + ".l" + std::to_string(layer) + "." + leaf;
}

}  // namespace

void init_gru(ParameterStore& store, const std::string& prefix, const GruSpec& spec,
              std::mt19937_64& rng) {
  if (spec.layers < 1 || spec.hidden_dim < 1 || spec.input_dim < 1) throw ConfigError("invalid GRU spec");
  const auto h = static_cast<std::size_t>(spec.hidden_dim);
  for (int l = 0; l < spec.layers; ++l) {
    const auto in = static_cast<std::size_t>(l == 0 ? spec.input_dim : spec.hidden_dim);
    store.set(gru_name(prefix, l, "w_ih"), normal_weight(in, 3 * h, rng));
    store.set(gru_name(prefix, l, "w_hh"), normal_weight(h, 3 * h, rng));
    store.set(gru_name(prefix, l, "b_ih"), zeros(3 * h));
    store.set(gru_name(prefix, l, "b_hh"), zeros(3 * h));
  }
}

GruOutput gru_forward(const BoundParams& params, const std::string& prefix, const GruSpec& spec,
                      std::span<const Var> sequence, std::span<const Var> h0) {
  if (sequence.empty()) throw PreconditionError("GRU input sequence is empty");
  if (static_cast<int>(h0.size()) != spec.layers) throw ShapeError("GRU h0 must have one state per layer");
  const Eigen::Index hd = spec.hidden_dim;
  std::vector<Var> hidden(h0.begin(), h0.end());
  GruOutput result;
  for (const Var& x_t : sequence) {
    Var input = x_t;
    for (int l = 0; l < spec.layers; ++l) {
      Var gi = linear(input, params[gru_name(prefix, l, "w_ih")], params[gru_name(prefix, l, "b_ih")]);
      Var gh = linear(hidden[l], params[gru_name(prefix, l, "w_hh")], params[gru_name(prefix, l, "b_hh")]);
      Var r = sigmoid(add(slice_cols(gi, 0, hd), slice_cols(gh, 0, hd)));
      Var z = sigmoid(add(slice_cols(gi, hd, hd), slice_cols(gh, hd, hd)));
      Var n = tanh(add(slice_cols(gi, 2 * hd, hd), mul(r, slice_cols(gh, 2 * hd, hd))));
      hidden[l] = add(mul(one_minus(z), n), mul(z, hidden[l]));
      input = hidden[l];
    }
    result.outputs.push_back(input);
  }
  result.final = std::move(hidden);
  return result;
}

GruResult gru_forward(const ParameterStore& params, int num_layers, int hidden_dim,
                      std::span<const Tensor> sequence, const Tensor& h0, const std::string& prefix) {
  if (sequence.empty()) throw PreconditionError("GRU input sequence is empty");
  if (h0.rank() != 2 || h0.shape()[0] != static_cast<std::size_t>(num_layers) ||
      h0.shape()[1] != static_cast<std::size_t>(hidden_dim)) {
    throw ShapeError("GRU h0 must have shape (num_layers, hidden_dim)");
  }
  Tape tape(false);
  BoundParams bound(tape, params, false);
  const GruSpec spec{static_cast<int>(sequence.front().size()), hidden_dim, num_layers};
  std::vector<Var> seq;
  for (const auto& x : sequence) {
    Matrix row = Eigen::Map<const Matrix>(x.data().data(), 1, static_cast<Eigen::Index>(x.size()));
    seq.push_back(tape.constant(std::move(row)));
  }
  const Matrix h0m = h0.to_matrix();
  std::vector<Var> init;
  for (int l = 0; l < num_layers; ++l) init.push_back(tape.constant(h0m.row(l)));
  GruOutput out = gru_forward(bound, prefix, spec, seq, init);
  GruResult result;
  for (const Var& o : out.outputs) {
    result.outputs.push_back(Tensor::vector(std::vector<double>(o.value().data(), o.value().data() + o.value().size())));
  }
  result.h_final = result.outputs.back();
  return result;
}

std::size_t gru_parameter_count(const GruSpec& spec) {
  std::size_t n = 0;
  const std::size_t h = spec.hidden_dim;
  for (int l = 0; l < spec.layers; ++l) {
    const std::size_t in = l == 0 ? spec.input_dim : spec.hidden_dim;
    n += in * 3 * h + h * 3 * h + 6 * h;
  }
  return n;
}

void EncoderSpec::validate() const {
  if (dim <= 0 || layers <= 0 || heads <= 0 || ffn_dim <= 0) throw ConfigError("encoder dims must be positive");
  if (dim % heads != 0) {
    throw ConfigError("encoder dim " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

void init_encoder(ParameterStore& store, const std::string& prefix, const EncoderSpec& spec,
                  std::mt19937_64& rng) {
  spec.validate();
  const auto d = static_cast<std::size_t>(spec.dim);
  const auto f = static_cast<std::size_t>(spec.ffn_dim);
  for (int l = 0; l < spec.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l) + ".";
    store.set(p + "ln1.gain", ones(d));
    store.set(p + "ln1.bias", zeros(d));
    for (const char* w : {"wq", "wk", "wv", "wo"}) store.set(p + "attn." + w, normal_weight(d, d, rng));
    for (const char* b : {"bq", "bk", "bv", "bo"}) store.set(p + "attn." + b, zeros(d));
    store.set(p + "ln2.gain", ones(d));
    store.set(p + "ln2.bias", zeros(d));
    store.set(p + "ffn1.weight", normal_weight(d, f, rng));
    store.set(p + "ffn1.bias", zeros(f));
    store.set(p + "ffn2.weight", normal_weight(f, d, rng));
    store.set(p + "ffn2.bias", zeros(d));
  }
}

Var encoder_forward(const BoundParams& params, const std::string& prefix, const EncoderSpec& spec,
                    Var tokens, std::span<const Segment> segments) {
  spec.validate();
  if (tokens.cols() != spec.dim) throw ShapeError(prefix + ": token width does not match encoder dim");
  Var x = tokens;
  for (int l = 0; l < spec.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l) + ".";
    Var h = layer_norm(x, params[p + "ln1.gain"], params[p + "ln1.bias"]);
    Var q = linear(h, params[p + "attn.wq"], params[p + "attn.bq"]);
    Var k = linear(h, params[p + "attn.wk"], params[p + "attn.bk"]);
    Var v = linear(h, params[p + "attn.wv"], params[p + "attn.bv"]);
    Var a = segment_attention(q, k, v, segments, spec.heads);
    x = add(x, linear(a, params[p + "attn.wo"], params[p + "attn.bo"]));
    Var h2 = layer_norm(x, params[p + "ln2.gain"], params[p + "ln2.bias"]);
    Var f = gelu(linear(h2, params[p + "ffn1.weight"], params[p + "ffn1.bias"]));
    x = add(x, linear(f, params[p + "ffn2.weight"], params[p + "ffn2.bias"]));
  }
  return x;
}

Tensor mhsa_encoder_forward(const ParameterStore& params, int dim, int layers, int heads,
                            int ffn_dim, const Tensor& tokens, const std::string& prefix) {
  const EncoderSpec spec{dim, layers, heads, ffn_dim};
  spec.validate();
  Tape tape(false);
  BoundParams bound(tape, params, false);
  Var x = tape.constant(tokens.to_matrix());
  const Segment all{0, x.rows()};
  return Tensor::from_matrix(encoder_forward(bound, prefix, spec, x, std::span(&all, 1)).value());
}

std::size_t encoder_parameter_count(const EncoderSpec& spec) {
  const std::size_t d = spec.dim, f = spec.ffn_dim;
  const std::size_t per_layer = 4 * d + 4 * (d * d + d) + (d * f + f) + (f * d + d);
  return per_layer * static_cast<std::size_t>(spec.layers);
}

}  // namespace dlo::nn
