// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/layers.hpp"
#include "dlo/nn/parameter_store.hpp"
#include "dlo/nn/tape.hpp"
#include "dlo/repr/normalizer.hpp"
#include "dlo/sim/rod.hpp"

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dlo::repr {

/// P2FT maps keypoints X (2m) to the base wrench; F2PT maps back.
enum class TransformerKind { p2ft, f2pt };

std::string to_string(TransformerKind kind);
/// Throws ConfigError for anything but "p2ft" / "f2pt".
TransformerKind transformer_kind_from_string(const std::string& name);

/// P2FT: [2m, 64, 128, 128, 64, 16, 3]; F2PT: [3, 16, 64, 128, 128, 64, 2m].
std::vector<int> default_transformer_dims(TransformerKind kind, int n_keypoints);

/// Dense net between standardised inputs and standardised outputs. The
/// normalisation constants travel in `params.arrays` ("norm.in.*", "norm.out.*").
struct ForceTransformer {
  TransformerKind kind = TransformerKind::p2ft;
  int n_keypoints = 0;
  std::vector<int> dims;
  nn::Activation activation = nn::Activation::relu;
  nn::ParameterStore params;
  Normalizer in_norm;
  Normalizer out_norm;

  static constexpr const char* kPrefix = "net";
  /// Inputs further than this many standard deviations from the training mean are flagged.
  static constexpr double kRangeSigma = 10.0;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  std::size_t parameter_count() const;
};

/// Fresh network with identity normalisation.
ForceTransformer make_transformer(TransformerKind kind, int n_keypoints, std::mt19937_64& rng,
                                  nn::Activation activation = nn::Activation::relu);
void set_normalization(ForceTransformer& net, Normalizer in, Normalizer out);

/// Normalised input (B, in) to normalised output (B, out) on a tape.
nn::Var transformer_forward(const nn::BoundParams& params, const ForceTransformer& net, nn::Var input);
/// Physical-unit batch evaluation; rows are samples.
nn::Matrix transformer_predict(const ForceTransformer& net, const nn::Matrix& inputs);
/// True when some standardised input component exceeds kRangeSigma.
bool out_of_range(const ForceTransformer& net, std::span<const double> input);

struct WrenchPrediction {
  sim::Wrench wrench;
  bool out_of_range = false;
};
struct ShapePrediction {
  std::vector<double> keypoints;
  bool out_of_range = false;
};

/// Throws ConfigError when called with the wrong kind of network.
WrenchPrediction p2ft_forward(const ForceTransformer& net, std::span<const double> keypoints);
ShapePrediction f2pt_forward(const ForceTransformer& net, const sim::Wrench& wrench);

/// Checkpoint kind tag is "p2ft" or "f2pt"; dims, activation and m are attributes.
nn::ParameterStore to_checkpoint(const ForceTransformer& net);
ForceTransformer from_checkpoint(const nn::ParameterStore& store);
void save_transformer(const std::filesystem::path& path, const ForceTransformer& net);
ForceTransformer load_transformer(const std::filesystem::path& path);

}  // namespace dlo::repr
