// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/dyn/model.hpp"
#include "dlo/nn/ops.hpp"
#include "dlo/nn/tape.hpp"
#include "dlo/repr/graph.hpp"

#include <span>
#include <string>
#include <vector>

namespace dlo::dyn {

// Batched, differentiable forward passes. A batch holds B samples of m nodes;
// node n of sample b is row b*m + n.

/// One history frame for every sample of a batch, in physical units.
struct FrameBatch {
  nn::Var positions;  ///< (B*m, 2)
  nn::Var poses;      ///< (B, 3) end-effector pose at this frame
  nn::Var actions;    ///< (B, 3) action applied from this frame
};

/// Radius graphs of all samples with global node indices.
struct BatchGraph {
  int batch = 0;
  int m = 0;
  /// Sorted by receiver, then sender.
  std::vector<repr::Edge> edges;
  std::vector<Eigen::Index> receivers;
  std::vector<Eigen::Index> senders;
  /// Incoming-edge token range of every node.
  std::vector<nn::Segment> segments;
  /// 1 for the grasped node and the nodes linked to it (Eq. 5 targets).
  std::vector<double> grasp_mask;
  std::vector<int> isolated;
  std::vector<std::string> warnings;
};

BatchGraph build_batch_graph(const nn::Matrix& positions, int batch, int m, double radius);

struct ForwardDiagnostics {
  int isolated_nodes = 0;
  std::vector<std::string> warnings;
};

/// Row -> sample index for B*m rows.
std::vector<Eigen::Index> row_samples(int batch, int m);

/// Eq. 5 on the grasped node and its neighbours, identity elsewhere: (B*m, 2).
nn::Var action_encode(const FrameBatch& frame, const BatchGraph& graph, double dt);

/// Per-node input features of `frame` for the model kind; `xhat` is the
/// frame's action_encode output for kinds with the action encoder.
nn::Var node_features(const DynModel& model, const FrameBatch& frame, nn::Var xhat);

/// Latent node states o' (B*m, d): GRU over the frame features followed by a
/// projection with the current features (property extractor), or a per-node
/// MLP on the current frame. `features` holds one entry per frame used.
nn::Var encode_nodes(const nn::BoundParams& p, const DynModel& model, std::span<const nn::Var> features);

/// Edge latents e'_ij = f_L([o'_i, o'_j]) in edge order: (E, d).
nn::Var local_interact(const nn::BoundParams& p, const DynModel& model, nn::Var latent, const BatchGraph& graph);

/// Mean over the encoder outputs of each node's incoming edge tokens: (B*m, d).
/// Nodes without incoming edges get zeros.
nn::Var global_interact(const nn::BoundParams& p, const DynModel& model, nn::Var edge_latents,
                        const BatchGraph& graph);

/// x + delta * f_D([o', e'_g]) with the fixed node pinned and, when `xhat`
/// is valid, the grasped node replaced by its Eq. 5 prediction.
nn::Var decode(const nn::BoundParams& p, const DynModel& model, nn::Var latent, nn::Var global,
               nn::Var positions, nn::Var xhat, int batch);

/// Graph-model front end: graphs and features of the frames the kind reads,
/// then the latent node states of the current (last) frame.
struct WindowEncoding {
  nn::Var latent;
  BatchGraph graph;  ///< graph of the current frame
  nn::Var xhat;      ///< current-frame Eq. 5 output, invalid without the action encoder
};
WindowEncoding encode_window(const nn::BoundParams& p, const DynModel& model, std::span<const FrameBatch> frames,
                             int batch);

/// Next positions (B*m, 2). `frames` holds config.history frames, oldest first.
nn::Var forward_step(const nn::BoundParams& p, const DynModel& model, std::span<const FrameBatch> frames,
                     int batch, ForwardDiagnostics* diag = nullptr);

/// Autoregressive rollout: step k applies actions[k] (B, 3), then the
/// prediction and the integrated pose join the window. Returns T predictions.
std::vector<nn::Var> rollout_tape(const nn::BoundParams& p, const DynModel& model,
                                  std::vector<FrameBatch> frames, std::span<const nn::Var> actions,
                                  int batch, ForwardDiagnostics* diag = nullptr);

}  // namespace dlo::dyn
