// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/parameter_store.hpp"
#include "dlo/sim/rod.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace dlo::dyn {

enum class ModelKind { ea_pe_gat, mlp, ga_net, ea_gat, pe_gat };

inline constexpr ModelKind kAllKinds[] = {ModelKind::ea_pe_gat, ModelKind::mlp, ModelKind::ga_net,
                                          ModelKind::ea_gat, ModelKind::pe_gat};

/// "ea-pe-gat", "mlp", "ga-net", "ea-gat", "pe-gat".
std::string to_string(ModelKind kind);
/// Throws ConfigError for unknown names.
ModelKind model_kind_from_string(const std::string& name);

bool uses_action_encoder(ModelKind kind);
bool uses_property_extractor(ModelKind kind);
bool is_graph_model(ModelKind kind);

struct DynConfig {
  ModelKind kind = ModelKind::ea_pe_gat;
  int n_keypoints = 11;
  /// History window H (frames, oldest first, current last).
  int history = 5;
  double radius = 0.15;
  double dt = 0.1;
  double total_length = 1.0;
  sim::Action u_max{0.05, 0.05, 0.2};

  /// Width of latents, GRU state and the hidden layers of f_L, f_D and node encoders.
  int latent_dim = 32;
  int mlp_hidden_layers = 3;
  int gru_layers = 2;
  int encoder_layers = 2;
  int heads = 4;
  int ffn_dim = 64;
  /// Hidden widths of the dense baseline.
  std::vector<int> baseline_hidden{64, 128, 128, 128, 64};

  /// Throws ConfigError on invalid combinations (e.g. latent_dim % heads != 0).
  void validate() const;
  /// Position scale for the decoder output and the action-encoder feature: u_max.dx * dt.
  double delta() const { return u_max.dx * dt; }
  /// Frames a forward pass reads: H with a property extractor, 1 otherwise.
  int frames_used() const;
  std::string canonical() const;
  std::uint64_t hash() const;

  /// 128-wide, 6 encoder layers, FFN 512; 8 heads since 12 does not divide 128.
  static DynConfig paper_scale(ModelKind kind);
};

/// Kind-specific per-node input width.
int node_feature_dim(ModelKind kind);

struct DynModel {
  DynConfig config;
  nn::ParameterStore params;

  std::size_t parameter_count() const { return params.parameter_count(); }
};

/// Freshly initialised model of `config.kind`.
DynModel make_model(const DynConfig& config, std::mt19937_64& rng);
/// Same as make_model; named after the baselines it builds.
DynModel make_baseline(ModelKind kind, const DynConfig& config, std::mt19937_64& rng);
/// Closed-form parameter total from the architecture.
std::size_t expected_parameter_count(const DynConfig& config);

/// Checkpoint kind tag "dyn/<kind>". H, r_c, dt, dims and the fixed
/// normalisation scales are stored as attributes/arrays.
nn::ParameterStore to_checkpoint(const DynModel& model);
/// Throws ConfigError if the tag is not a dynamics model or does not match `expected`.
DynModel from_checkpoint(const nn::ParameterStore& store);
DynModel from_checkpoint(const nn::ParameterStore& store, ModelKind expected);
void save_model(const std::filesystem::path& path, const DynModel& model);
DynModel load_model(const std::filesystem::path& path);

}  // namespace dlo::dyn
