// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/ops.hpp"
#include "dlo/nn/parameter_store.hpp"
#include "dlo/nn/tape.hpp"

#include <random>
#include <span>
#include <string>
#include <vector>

namespace dlo::nn {

enum class Activation { relu, tanh };
std::string to_string(Activation a);
/// "relu" or "tanh"; anything else is a ConfigError.
Activation activation_from_string(const std::string& s);

// -- Dense networks ---------------------------------------------------------
//
// Layer k of an MLP named "p" owns "p.layer<k>.weight" (in x out) and
// "p.layer<k>.bias" (out). The activation is applied between layers, never
// after the last one.

void init_mlp(ParameterStore& store, const std::string& prefix, std::span<const int> dims,
              std::mt19937_64& rng);
Var mlp_forward(const BoundParams& params, const std::string& prefix, std::span<const int> dims,
                Var input, Activation activation);
/// Evaluates without recording; input is (batch, dims[0]) or a vector.
Tensor mlp_forward(const ParameterStore& params, std::span<const int> dims, const Tensor& input,
                   Activation activation, const std::string& prefix = "mlp");
std::size_t mlp_parameter_count(std::span<const int> dims);

// -- GRU ----------------------------------------------------------------------
//
// Layer k owns "p.l<k>.w_ih" (in x 3h), "p.l<k>.w_hh" (h x 3h), "p.l<k>.b_ih"
// and "p.l<k>.b_hh" (3h); gate columns are ordered [reset | update | candidate]:
//   r = s(x W_ir + b_ir + h W_hr + b_hr)
//   z = s(x W_iz + b_iz + h W_hz + b_hz)
//   n = tanh(x W_in + b_in + r * (h W_hn + b_hn))
//   h' = (1 - z) * n + z * h

struct GruSpec {
  int input_dim = 0;
  int hidden_dim = 0;
  int layers = 1;
};

void init_gru(ParameterStore& store, const std::string& prefix, const GruSpec& spec,
              std::mt19937_64& rng);

struct GruOutput {
  std::vector<Var> outputs;  ///< top-layer hidden state after each step
  std::vector<Var> final;    ///< last hidden state of every layer
};

/// Batched recurrence: every sequence element is (rows, input_dim) and each
/// entry of h0 is (rows, hidden_dim). Throws PreconditionError on empty input.
GruOutput gru_forward(const BoundParams& params, const std::string& prefix, const GruSpec& spec,
                      std::span<const Var> sequence, std::span<const Var> h0);

struct GruResult {
  std::vector<Tensor> outputs;
  Tensor h_final;
};
/// Single-sequence evaluation; h0 has shape (layers, hidden_dim).
GruResult gru_forward(const ParameterStore& params, int num_layers, int hidden_dim,
                      std::span<const Tensor> sequence, const Tensor& h0,
                      const std::string& prefix = "gru");
std::size_t gru_parameter_count(const GruSpec& spec);

// -- Transformer encoder --------------------------------------------------------
//
// Pre-norm layers: x += MHSA(LN1(x)); x += W2 gelu(W1 LN2(x) + b1) + b2.
// Layer k owns "p.layer<k>.{ln1,ln2}.{gain,bias}", "p.layer<k>.attn.{wq,bq,wk,
// bk,wv,bv,wo,bo}" and "p.layer<k>.ffn{1,2}.{weight,bias}". No positional
// encoding, so each segment is processed as an unordered token set.

struct EncoderSpec {
  int dim = 0;
  int layers = 1;
  int heads = 1;
  int ffn_dim = 0;
  void validate() const;
};

void init_encoder(ParameterStore& store, const std::string& prefix, const EncoderSpec& spec,
                  std::mt19937_64& rng);
Var encoder_forward(const BoundParams& params, const std::string& prefix, const EncoderSpec& spec,
                    Var tokens, std::span<const Segment> segments);
/// All tokens form one segment.
Tensor mhsa_encoder_forward(const ParameterStore& params, int dim, int layers, int heads,
                            int ffn_dim, const Tensor& tokens, const std::string& prefix = "enc");
std::size_t encoder_parameter_count(const EncoderSpec& spec);

/// Normal(0, 1/fan_in) weights of shape (fan_in, fan_out).
Tensor normal_weight(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace dlo::nn
