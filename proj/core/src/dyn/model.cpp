// SPDX-License-Identifier: Apache-2.0
#include "dlo/dyn/model.hpp"

#include "dlo/error.hpp"
#include "dlo/nn/checkpoint.hpp"
#include "dlo/nn/layers.hpp"
#include "dlo/util.hpp"

#include <sstream>

namespace dlo::dyn {
namespace {

std::vector<int> repeat_dims(int in, int width, int hidden, int out) {
  std::vector<int> dims{in};
  for (int i = 0; i < hidden; ++i) dims.push_back(width);
  dims.push_back(out);
  return dims;
}

nn::EncoderSpec encoder_spec(const DynConfig& c) {
  return nn::EncoderSpec{c.latent_dim, c.encoder_layers, c.heads, c.ffn_dim};
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::logic_error&) {
      throw ConfigError("malformed integer list '" + s + "'");
    }
  }
  return out;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ea_pe_gat: return "ea-pe-gat";
    case ModelKind::mlp: return "mlp";
    case ModelKind::ga_net: return "ga-net";
    case ModelKind::ea_gat: return "ea-gat";
    case ModelKind::pe_gat: return "pe-gat";
  }
  throw ConfigError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
  for (ModelKind k : kAllKinds) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model kind '" + name + "' (expected ea-pe-gat, mlp, ga-net, ea-gat or pe-gat)");
}

bool uses_action_encoder(ModelKind kind) { return kind == ModelKind::ea_pe_gat || kind == ModelKind::ea_gat; }
bool uses_property_extractor(ModelKind kind) { return kind == ModelKind::ea_pe_gat || kind == ModelKind::pe_gat; }
bool is_graph_model(ModelKind kind) { return kind != ModelKind::mlp; }

int node_feature_dim(ModelKind kind) {
  // [x/L, u_i/u_max, c_i], then (xhat - x)/delta with the action encoder, then
  // the broadcast action wherever the grasped action has to reach every node.
  int f = 8;
  if (uses_action_encoder(kind)) f += 2;
  if (kind != ModelKind::ga_net) f += 3;
  return f;
}

void DynConfig::validate() const {
  if (n_keypoints < 2) throw ConfigError("dynamics model needs at least 2 keypoints");
  if (history < 1) throw ConfigError("history length must be at least 1");
  if (!(radius > 0.0) || !(dt > 0.0) || !(total_length > 0.0)) throw ConfigError("radius, dt and length must be positive");
  if (!(u_max.dx > 0 && u_max.dy > 0 && u_max.dtheta > 0)) throw ConfigError("u_max must be positive");
  if (latent_dim < 1 || mlp_hidden_layers < 0 || gru_layers < 1 || encoder_layers < 1 || ffn_dim < 1) {
    throw ConfigError("invalid model dimensions");
  }
  if (heads < 1 || latent_dim % heads != 0) {
    throw ConfigError("latent_dim " + std::to_string(latent_dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  for (int h : baseline_hidden) {
    if (h < 1) throw ConfigError("baseline hidden widths must be positive");
  }
}

int DynConfig::frames_used() const { return uses_property_extractor(kind) ? history : 1; }

std::string DynConfig::canonical() const {
  std::ostringstream ss;
  ss << "dyn kind=" << to_string(kind) << " m=" << n_keypoints << " H=" << history
     << " r_c=" << format_double(radius) << " dt=" << format_double(dt) << " L=" << format_double(total_length)
     << " u_max=" << format_double(u_max.dx) << "," << format_double(u_max.dy) << ","
     << format_double(u_max.dtheta) << " d=" << latent_dim << " mlp_layers=" << mlp_hidden_layers
     << " gru_layers=" << gru_layers << " enc_layers=" << encoder_layers << " heads=" << heads
     << " ffn=" << ffn_dim << " baseline=" << join(baseline_hidden);
  return ss.str();
}

std::uint64_t DynConfig::hash() const { return fnv1a64(canonical()); }

DynConfig DynConfig::paper_scale(ModelKind kind) {
  DynConfig c;
  c.kind = kind;
  c.latent_dim = 128;
  c.encoder_layers = 6;
  c.heads = 8;
  c.ffn_dim = 512;
  return c;
}

DynModel make_model(const DynConfig& config, std::mt19937_64& rng) {
  config.validate();
  DynModel model;
  model.config = config;
  auto& s = model.params;
  const int d = config.latent_dim;
  const int f = node_feature_dim(config.kind);
  if (config.kind == ModelKind::mlp) {
    std::vector<int> dims{2 * config.n_keypoints + 3};
    dims.insert(dims.end(), config.baseline_hidden.begin(), config.baseline_hidden.end());
    dims.push_back(2 * config.n_keypoints);
    nn::init_mlp(s, "mlp", dims, rng);
    return model;
  }
  if (uses_property_extractor(config.kind)) {
    nn::init_gru(s, "pe.gru", nn::GruSpec{f, d, config.gru_layers}, rng);
    const std::vector<int> proj{d + f, d};
    nn::init_mlp(s, "pe.proj", proj, rng);
  } else {
    nn::init_mlp(s, "enc", repeat_dims(f, d, config.mlp_hidden_layers, d), rng);
  }
  nn::init_mlp(s, "fl", repeat_dims(2 * d, d, config.mlp_hidden_layers, d), rng);
  nn::init_encoder(s, "gi", encoder_spec(config), rng);
  nn::init_mlp(s, "fd", repeat_dims(2 * d, d, config.mlp_hidden_layers, 2), rng);
  return model;
}

DynModel make_baseline(ModelKind kind, const DynConfig& config, std::mt19937_64& rng) {
  DynConfig c = config;
  c.kind = kind;
  return make_model(c, rng);
}

std::size_t expected_parameter_count(const DynConfig& c) {
  const std::size_t d = c.latent_dim, f = node_feature_dim(c.kind), hl = c.mlp_hidden_layers;
  // A width-w chain of `hl` hidden layers from `in` to `out`.
  auto chain = [&](std::size_t in, std::size_t out) {
    if (hl == 0) return in * out + out;
    return (in * d + d) + (hl - 1) * (d * d + d) + (d * out + out);
  };
  if (c.kind == ModelKind::mlp) {
    std::size_t total = 0, prev = 2 * c.n_keypoints + 3;
    for (int h : c.baseline_hidden) {
      total += prev * h + h;
      prev = h;
    }
    return total + prev * (2 * c.n_keypoints) + 2 * c.n_keypoints;
  }
  std::size_t total = 0;
  if (uses_property_extractor(c.kind)) {
    std::size_t in = f;
    for (int l = 0; l < c.gru_layers; ++l) {
      total += in * 3 * d + d * 3 * d + 6 * d;
      in = d;
    }
    total += (d + f) * d + d;
  } else {
    total += chain(f, d);
  }
  total += chain(2 * d, d);
  // Per encoder layer: two layer norms, four d x d projections, the FFN.
  const std::size_t ffn = c.ffn_dim;
  total += c.encoder_layers * (4 * d + 4 * (d * d + d) + (d * ffn + ffn) + (ffn * d + d));
  total += chain(2 * d, 2);
  return total;
}

nn::ParameterStore to_checkpoint(const DynModel& model) {
  const DynConfig& c = model.config;
  nn::ParameterStore s = model.params;
  s.kind = "dyn/" + to_string(c.kind);
  s.config_hash = c.hash();
  auto& a = s.attributes;
  a["m"] = std::to_string(c.n_keypoints);
  a["H"] = std::to_string(c.history);
  a["r_c"] = format_double(c.radius);
  a["dt"] = format_double(c.dt);
  a["length"] = format_double(c.total_length);
  a["latent_dim"] = std::to_string(c.latent_dim);
  a["mlp_hidden_layers"] = std::to_string(c.mlp_hidden_layers);
  a["gru_layers"] = std::to_string(c.gru_layers);
  a["encoder_layers"] = std::to_string(c.encoder_layers);
  a["heads"] = std::to_string(c.heads);
  a["ffn_dim"] = std::to_string(c.ffn_dim);
  a["baseline_hidden"] = join(c.baseline_hidden);
  s.arrays["norm.action_scale"] = {c.u_max.dx, c.u_max.dy, c.u_max.dtheta};
  s.arrays["norm.position_scale"] = {c.total_length};
  s.arrays["norm.delta_scale"] = {c.delta()};
  return s;
}

DynModel from_checkpoint(const nn::ParameterStore& store) {
  if (store.kind.rfind("dyn/", 0) != 0) {
    throw ConfigError("checkpoint kind '" + store.kind + "' is not a dynamics model");
  }
  DynConfig c;
  c.kind = model_kind_from_string(store.kind.substr(4));
  c.n_keypoints = static_cast<int>(store.attribute_int("m"));
  c.history = static_cast<int>(store.attribute_int("H"));
  c.radius = store.attribute_double("r_c");
  c.dt = store.attribute_double("dt");
  c.total_length = store.attribute_double("length");
  c.latent_dim = static_cast<int>(store.attribute_int("latent_dim"));
  c.mlp_hidden_layers = static_cast<int>(store.attribute_int("mlp_hidden_layers"));
  c.gru_layers = static_cast<int>(store.attribute_int("gru_layers"));
  c.encoder_layers = static_cast<int>(store.attribute_int("encoder_layers"));
  c.heads = static_cast<int>(store.attribute_int("heads"));
  c.ffn_dim = static_cast<int>(store.attribute_int("ffn_dim"));
  c.baseline_hidden = parse_ints(store.attribute("baseline_hidden"));
  const auto& us = store.array("norm.action_scale");
  if (us.size() != 3) throw ConfigError("checkpoint action scale must have 3 entries");
  c.u_max = sim::Action{us[0], us[1], us[2]};
  c.validate();
  if (c.hash() != store.config_hash) throw ConfigError("checkpoint config hash does not match its attributes");
  DynModel model;
  model.config = c;
  model.params = store;
  model.params.kind.clear();
  model.params.config_hash = 0;
  model.params.attributes.clear();
  model.params.arrays.clear();
  // Shapes must match a fresh model exactly.
  std::mt19937_64 rng(0);
  const DynModel fresh = make_model(c, rng);
  if (fresh.params.size() != model.params.size()) throw ConfigError("checkpoint tensor set does not match " + store.kind);
  for (const auto& [name, t] : fresh.params.entries()) {
    if (!model.params.contains(name)) throw ConfigError("checkpoint lacks tensor '" + name + "'");
    if (model.params.at(name).shape() != t.shape()) throw ShapeError("checkpoint tensor '" + name + "' has the wrong shape");
  }
  return model;
}

DynModel from_checkpoint(const nn::ParameterStore& store, ModelKind expected) {
  DynModel m = from_checkpoint(store);
  if (m.config.kind != expected) {
    throw ConfigError("checkpoint holds " + to_string(m.config.kind) + ", expected " + to_string(expected));
  }
  return m;
}

void save_model(const std::filesystem::path& path, const DynModel& model) {
  nn::save_checkpoint(path, to_checkpoint(model));
}

DynModel load_model(const std::filesystem::path& path) { return from_checkpoint(nn::load_checkpoint(path)); }

}  // namespace dlo::dyn
