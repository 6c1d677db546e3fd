// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/dyn/forward.hpp"
#include "dlo/dyn/model.hpp"
#include "dlo/repr/graph.hpp"
#include "dlo/sim/rod.hpp"

#include <span>
#include <string>
#include <vector>

namespace dlo::dyn {

// Single-sample evaluation of the model stages, without gradients.

struct Frame {
  std::vector<double> keypoints;  ///< X, 2m values
  sim::Pose ee;
  sim::Action action;  ///< action applied from this frame
  bool operator==(const Frame&) const = default;
};
/// Oldest first; the last frame is the current state.
using HistoryWindow = std::vector<Frame>;

/// Left-pads to `length` frames by repeating the oldest state at zero action.
HistoryWindow pad_history(const HistoryWindow& history, int length, bool* padded = nullptr);

/// Graph plus Eq. 5 predictions x_hat (2m) attached per node: rigid motion for
/// the grasped node and its neighbours, x_hat = x elsewhere.
struct EncodedGraph {
  repr::GraphState graph;
  std::vector<double> predicted;
};
/// Throws StructuralError if the last node is not the grasped one.
EncodedGraph explicit_action_encode(const repr::GraphState& graph, const sim::Pose& ee, const sim::Action& u,
                                    double dt);

struct LatentGraph {
  nn::Matrix latents;  ///< (m, d)
  BatchGraph graph;
  std::vector<double> predicted;  ///< Eq. 5 output of the current frame (EA kinds), else empty
  bool padded = false;
};
/// Latent node states: the property extractor over the padded history for PE
/// kinds, the per-node MLP encoder on the current frame otherwise. The last
/// frame's action is the one about to be applied.
LatentGraph property_extract(const DynModel& model, const HistoryWindow& history);
/// (E, d) edge latents in graph edge order.
nn::Matrix local_interact(const DynModel& model, const LatentGraph& latent);
/// (m, d); `isolated` receives nodes without incoming edges.
nn::Matrix global_interact(const DynModel& model, const LatentGraph& latent, const nn::Matrix& edge_latents,
                           std::vector<int>* isolated = nullptr);
/// Next keypoints with the fixed/grasped overrides.
std::vector<double> decode(const DynModel& model, const LatentGraph& latent, const nn::Matrix& global,
                           std::span<const double> keypoints);

struct Prediction {
  std::vector<double> keypoints;
  bool padded = false;
  int isolated_nodes = 0;
  std::vector<std::string> warnings;
};
Prediction predict_one_step(const DynModel& model, const HistoryWindow& history, const sim::Action& action);
/// One prediction per action, fed back autoregressively.
std::vector<std::vector<double>> rollout(const DynModel& model, const HistoryWindow& history,
                                         std::span<const sim::Action> actions);

/// Frames as a single-sample batch of constants on `tape`.
std::vector<FrameBatch> frames_on_tape(nn::Tape& tape, const HistoryWindow& window);

}  // namespace dlo::dyn
