// SPDX-License-Identifier: Apache-2.0
#include "dlo/dyn/forward.hpp"

#include "dlo/error.hpp"
#include "dlo/nn/layers.hpp"

#include <array>

namespace dlo::dyn {
namespace {

using nn::Matrix;
using nn::Var;

std::vector<int> hidden_chain(int in, int width, int hidden, int out) {
  std::vector<int> dims{in};
  for (int i = 0; i < hidden; ++i) dims.push_back(width);
  dims.push_back(out);
  return dims;
}

/// (rows, cols) mask that is 1 on rows with node index `node` (or every row
/// whose node index is listed) and 0 elsewhere.
Matrix node_mask(int batch, int m, int cols, std::initializer_list<int> nodes) {
  Matrix mask = Matrix::Zero(static_cast<Eigen::Index>(batch) * m, cols);
  for (int b = 0; b < batch; ++b) {
    for (int n : nodes) mask.row(static_cast<Eigen::Index>(b) * m + n).setOnes();
  }
  return mask;
}

Matrix tiled_row(int rows, std::array<double, 3> v) {
  Matrix out(rows, 3);
  for (int r = 0; r < rows; ++r) out.row(r) << v[0], v[1], v[2];
  return out;
}

}  // namespace

std::vector<Eigen::Index> row_samples(int batch, int m) {
  std::vector<Eigen::Index> rs(static_cast<std::size_t>(batch) * m);
  for (std::size_t i = 0; i < rs.size(); ++i) rs[i] = static_cast<Eigen::Index>(i / m);
  return rs;
}

BatchGraph build_batch_graph(const Matrix& positions, int batch, int m, double radius) {
  if (positions.rows() != static_cast<Eigen::Index>(batch) * m || positions.cols() != 2) {
    throw ShapeError("batch positions must be (B*m, 2)");
  }
  BatchGraph g;
  g.batch = batch;
  g.m = m;
  g.segments.resize(static_cast<std::size_t>(batch) * m);
  g.grasp_mask.assign(static_cast<std::size_t>(batch) * m, 0.0);
  std::vector<double> xs(2 * m);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * m;
    for (int n = 0; n < m; ++n) {
      xs[2 * n] = positions(base + n, 0);
      xs[2 * n + 1] = positions(base + n, 1);
    }
    const repr::GraphState local = repr::build_graph(xs, sim::Action{}, radius);
    for (const auto& w : local.warnings) g.warnings.push_back("sample " + std::to_string(b) + ": " + w);
    std::size_t e = 0;
    for (int n = 0; n < m; ++n) {
      nn::Segment& seg = g.segments[base + n];
      seg.offset = static_cast<Eigen::Index>(g.edges.size());
      while (e < local.edges.size() && local.edges[e].receiver == n) {
        const int s = local.edges[e].sender;
        g.edges.push_back({static_cast<int>(base) + n, static_cast<int>(base) + s});
        g.receivers.push_back(base + n);
        g.senders.push_back(base + s);
        if (n == m - 1) g.grasp_mask[base + s] = 1.0;
        ++e;
      }
      seg.count = static_cast<Eigen::Index>(g.edges.size()) - seg.offset;
      if (seg.count == 0) g.isolated.push_back(static_cast<int>(base) + n);
    }
    g.grasp_mask[base + m - 1] = 1.0;
  }
  return g;
}

Var action_encode(const FrameBatch& frame, const BatchGraph& graph, double dt) {
  return nn::rigid_motion(frame.positions, frame.poses, frame.actions, row_samples(graph.batch, graph.m),
                          graph.grasp_mask, dt);
}

Var node_features(const DynModel& model, const FrameBatch& frame, Var xhat) {
  const DynConfig& c = model.config;
  const int m = c.n_keypoints;
  const int batch = static_cast<int>(frame.actions.rows());
  const int rows = batch * m;
  nn::Tape& tape = *frame.positions.tape;
  const Var a_norm = nn::mul_const(frame.actions, tiled_row(batch, {1 / c.u_max.dx, 1 / c.u_max.dy, 1 / c.u_max.dtheta}));
  const auto rs = row_samples(batch, m);
  const Var a_rows = nn::gather_rows(a_norm, rs);

  Matrix kinds = Matrix::Zero(rows, 3);
  for (int r = 0; r < rows; ++r) {
    const int n = r % m;
    kinds(r, n == 0 ? 0 : (n == m - 1 ? 2 : 1)) = 1.0;
  }
  std::vector<Var> parts{nn::scale(frame.positions, 1.0 / c.total_length),
                         nn::mul_const(a_rows, node_mask(batch, m, 3, {m - 1})), tape.constant(std::move(kinds))};
  if (uses_action_encoder(c.kind)) {
    if (!xhat.valid()) throw PreconditionError("node_features needs the action-encoder output for " + to_string(c.kind));
    parts.push_back(nn::scale(nn::sub(xhat, frame.positions), 1.0 / c.delta()));
  }
  if (c.kind != ModelKind::ga_net) parts.push_back(a_rows);
  return nn::concat_cols(parts);
}

Var encode_nodes(const nn::BoundParams& p, const DynModel& model, std::span<const Var> features) {
  const DynConfig& c = model.config;
  if (features.empty()) throw PreconditionError("encode_nodes needs at least one frame");
  const int f = node_feature_dim(c.kind);
  const int d = c.latent_dim;
  if (uses_property_extractor(c.kind)) {
    nn::Tape& tape = *features.front().tape;
    std::vector<Var> h0;
    for (int l = 0; l < c.gru_layers; ++l) h0.push_back(tape.constant(Matrix::Zero(features.front().rows(), d)));
    const nn::GruOutput gru = nn::gru_forward(p, "pe.gru", nn::GruSpec{f, d, c.gru_layers}, features, h0);
    const std::vector<int> proj{d + f, d};
    const std::array<Var, 2> joined{gru.outputs.back(), features.back()};
    return nn::mlp_forward(p, "pe.proj", proj, nn::concat_cols(joined), nn::Activation::relu);
  }
  return nn::mlp_forward(p, "enc", hidden_chain(f, d, c.mlp_hidden_layers, d), features.back(),
                         nn::Activation::relu);
}

Var local_interact(const nn::BoundParams& p, const DynModel& model, Var latent, const BatchGraph& graph) {
  const DynConfig& c = model.config;
  const int d = c.latent_dim;
  const std::array<Var, 2> ends{nn::gather_rows(latent, graph.receivers), nn::gather_rows(latent, graph.senders)};
  return nn::mlp_forward(p, "fl", hidden_chain(2 * d, d, c.mlp_hidden_layers, d), nn::concat_cols(ends),
                         nn::Activation::relu);
}

Var global_interact(const nn::BoundParams& p, const DynModel& model, Var edge_latents, const BatchGraph& graph) {
  const DynConfig& c = model.config;
  if (graph.edges.empty()) {
    return edge_latents.tape->constant(Matrix::Zero(static_cast<Eigen::Index>(graph.batch) * graph.m, c.latent_dim));
  }
  const nn::EncoderSpec spec{c.latent_dim, c.encoder_layers, c.heads, c.ffn_dim};
  const Var tokens = nn::encoder_forward(p, "gi", spec, edge_latents, graph.segments);
  return nn::segment_mean(tokens, graph.segments);
}

Var decode(const nn::BoundParams& p, const DynModel& model, Var latent, Var global, Var positions, Var xhat,
           int batch) {
  const DynConfig& c = model.config;
  const int m = c.n_keypoints;
  const int d = c.latent_dim;
  const std::array<Var, 2> joined{latent, global};
  const Var delta = nn::mlp_forward(p, "fd", hidden_chain(2 * d, d, c.mlp_hidden_layers, 2), nn::concat_cols(joined),
                                    nn::Activation::relu);
  const Var pred = nn::add(positions, nn::scale(delta, c.delta()));
  const bool grasp_override = xhat.valid();
  Matrix keep = Matrix::Ones(static_cast<Eigen::Index>(batch) * m, 2);
  keep -= node_mask(batch, m, 2, {0});
  if (grasp_override) keep -= node_mask(batch, m, 2, {m - 1});
  Var out = nn::add(nn::mul_const(pred, keep), nn::mul_const(positions, node_mask(batch, m, 2, {0})));
  if (grasp_override) out = nn::add(out, nn::mul_const(xhat, node_mask(batch, m, 2, {m - 1})));
  return out;
}

Var forward_step(const nn::BoundParams& p, const DynModel& model, std::span<const FrameBatch> frames, int batch,
                 ForwardDiagnostics* diag) {
  const DynConfig& c = model.config;
  const int m = c.n_keypoints;
  const int used = c.frames_used();
  if (static_cast<int>(frames.size()) < used) {
    throw PreconditionError("forward_step needs " + std::to_string(used) + " frames, got " +
                            std::to_string(frames.size()));
  }
  for (const FrameBatch& f : frames) {
    if (f.positions.rows() != static_cast<Eigen::Index>(batch) * m || f.positions.cols() != 2 ||
        f.actions.rows() != batch || f.poses.rows() != batch) {
      throw ShapeError("frame batch shapes do not match (B*m, 2) / (B, 3)");
    }
  }
  const FrameBatch& cur = frames.back();
  if (c.kind == ModelKind::mlp) {
    const std::array<Var, 2> in{
        nn::reshape(nn::scale(cur.positions, 1.0 / c.total_length), batch, 2 * m),
        nn::mul_const(cur.actions, tiled_row(batch, {1 / c.u_max.dx, 1 / c.u_max.dy, 1 / c.u_max.dtheta}))};
    std::vector<int> dims{2 * m + 3};
    dims.insert(dims.end(), c.baseline_hidden.begin(), c.baseline_hidden.end());
    dims.push_back(2 * m);
    const Var out = nn::mlp_forward(p, "mlp", dims, nn::concat_cols(in), nn::Activation::relu);
    return nn::add(cur.positions, nn::scale(nn::reshape(out, static_cast<Eigen::Index>(batch) * m, 2), c.delta()));
  }
  const WindowEncoding enc = encode_window(p, model, frames, batch);
  if (diag) {
    diag->isolated_nodes += static_cast<int>(enc.graph.isolated.size());
    diag->warnings.insert(diag->warnings.end(), enc.graph.warnings.begin(), enc.graph.warnings.end());
  }
  const Var edges = local_interact(p, model, enc.latent, enc.graph);
  const Var global = global_interact(p, model, edges, enc.graph);
  return decode(p, model, enc.latent, global, cur.positions, enc.xhat, batch);
}

WindowEncoding encode_window(const nn::BoundParams& p, const DynModel& model, std::span<const FrameBatch> frames,
                             int batch) {
  const DynConfig& c = model.config;
  const int used = c.frames_used();
  if (static_cast<int>(frames.size()) < used) throw PreconditionError("encode_window: too few frames");
  const bool ea = uses_action_encoder(c.kind);
  std::vector<Var> feats;
  WindowEncoding out;
  for (std::size_t f = frames.size() - used; f < frames.size(); ++f) {
    out.graph = build_batch_graph(frames[f].positions.value(), batch, c.n_keypoints, c.radius);
    Var xhat;
    if (ea) xhat = action_encode(frames[f], out.graph, c.dt);
    feats.push_back(node_features(model, frames[f], xhat));
    out.xhat = xhat;
  }
  out.latent = encode_nodes(p, model, feats);
  return out;
}

std::vector<Var> rollout_tape(const nn::BoundParams& p, const DynModel& model, std::vector<FrameBatch> frames,
                              std::span<const Var> actions, int batch, ForwardDiagnostics* diag) {
  if (actions.empty()) throw PreconditionError("rollout needs at least one action");
  if (frames.empty()) throw PreconditionError("rollout needs a history window");
  std::vector<Var> out;
  out.reserve(actions.size());
  for (const Var& a : actions) {
    frames.back().actions = a;
    const Var next = forward_step(p, model, frames, batch, diag);
    out.push_back(next);
    const Var pose = nn::add(frames.back().poses, nn::scale(a, model.config.dt));
    frames.erase(frames.begin());
    frames.push_back(FrameBatch{next, pose, a});
  }
  return out;
}

}  // namespace dlo::dyn
