// SPDX-License-Identifier: Apache-2.0
#include "dlo/dyn/predict.hpp"

#include "dlo/error.hpp"

#include <cmath>

namespace dlo::dyn {
namespace {

using nn::Matrix;

Matrix positions_matrix(std::span<const double> x) {
  Matrix out(static_cast<Eigen::Index>(x.size() / 2), 2);
  for (std::size_t i = 0; i < x.size(); ++i) out(static_cast<Eigen::Index>(i / 2), static_cast<Eigen::Index>(i % 2)) = x[i];
  return out;
}

Matrix row3(double a, double b, double c) {
  Matrix out(1, 3);
  out << a, b, c;
  return out;
}

std::vector<double> flatten(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

void check_window(const DynModel& model, const HistoryWindow& history) {
  if (history.empty()) throw PreconditionError("history window is empty");
  for (const Frame& f : history) {
    if (static_cast<int>(f.keypoints.size()) != 2 * model.config.n_keypoints) {
      throw ShapeError("history frame has " + std::to_string(f.keypoints.size()) + " keypoint values, expected " +
                       std::to_string(2 * model.config.n_keypoints));
    }
  }
}

}  // namespace

HistoryWindow pad_history(const HistoryWindow& history, int length, bool* padded) {
  if (history.empty()) throw PreconditionError("history window is empty");
  HistoryWindow out;
  const int missing = length - static_cast<int>(history.size());
  if (padded) *padded = missing > 0;
  if (missing > 0) {
    Frame oldest = history.front();
    oldest.action = sim::Action{};
    out.assign(missing, oldest);
    out.insert(out.end(), history.begin(), history.end());
  } else {
    out.assign(history.end() - length, history.end());
  }
  return out;
}

std::vector<FrameBatch> frames_on_tape(nn::Tape& tape, const HistoryWindow& window) {
  std::vector<FrameBatch> frames;
  frames.reserve(window.size());
  for (const Frame& f : window) {
    frames.push_back(FrameBatch{tape.constant(positions_matrix(f.keypoints)),
                                tape.constant(row3(f.ee.x, f.ee.y, f.ee.theta)),
                                tape.constant(row3(f.action.dx, f.action.dy, f.action.dtheta))});
  }
  return frames;
}

EncodedGraph explicit_action_encode(const repr::GraphState& graph, const sim::Pose& ee, const sim::Action& u,
                                    double dt) {
  if (graph.nodes.empty() || graph.nodes.back().kind != repr::NodeKind::grasped) {
    throw StructuralError("graph has no grasped node");
  }
  const int g = graph.grasped_index();
  std::vector<char> moves(graph.nodes.size(), 0);
  moves[g] = 1;
  for (int j : graph.neighbours(g)) moves[j] = 1;
  EncodedGraph out{graph, {}};
  out.predicted.resize(2 * graph.nodes.size());
  const double th = u.dtheta * dt;
  const double c = std::cos(th), s = std::sin(th);
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const double x = graph.nodes[i].x, y = graph.nodes[i].y;
    if (!moves[i]) {
      out.predicted[2 * i] = x;
      out.predicted[2 * i + 1] = y;
      continue;
    }
    const double dx = x - ee.x, dy = y - ee.y;
    out.predicted[2 * i] = ee.x + u.dx * dt + (c * dx - s * dy);
    out.predicted[2 * i + 1] = ee.y + u.dy * dt + (s * dx + c * dy);
  }
  return out;
}

LatentGraph property_extract(const DynModel& model, const HistoryWindow& history) {
  if (!is_graph_model(model.config.kind)) throw ConfigError("the MLP baseline has no latent graph");
  check_window(model, history);
  LatentGraph out;
  const HistoryWindow window = pad_history(history, model.config.history, &out.padded);
  nn::Tape tape(false);
  nn::BoundParams p(tape, model.params, false);
  const auto frames = frames_on_tape(tape, window);
  const WindowEncoding enc = encode_window(p, model, frames, 1);
  out.latents = enc.latent.value();
  out.graph = enc.graph;
  if (enc.xhat.valid()) out.predicted = flatten(enc.xhat.value());
  return out;
}

Matrix local_interact(const DynModel& model, const LatentGraph& latent) {
  nn::Tape tape(false);
  nn::BoundParams p(tape, model.params, false);
  return local_interact(p, model, tape.constant(latent.latents), latent.graph).value();
}

Matrix global_interact(const DynModel& model, const LatentGraph& latent, const Matrix& edge_latents,
                       std::vector<int>* isolated) {
  nn::Tape tape(false);
  nn::BoundParams p(tape, model.params, false);
  if (isolated) *isolated = latent.graph.isolated;
  return global_interact(p, model, tape.constant(edge_latents), latent.graph).value();
}

std::vector<double> decode(const DynModel& model, const LatentGraph& latent, const Matrix& global,
                           std::span<const double> keypoints) {
  nn::Tape tape(false);
  nn::BoundParams p(tape, model.params, false);
  nn::Var xhat;
  if (!latent.predicted.empty()) xhat = tape.constant(positions_matrix(latent.predicted));
  const nn::Var out = decode(p, model, tape.constant(latent.latents), tape.constant(global),
                             tape.constant(positions_matrix(keypoints)), xhat, 1);
  return flatten(out.value());
}

Prediction predict_one_step(const DynModel& model, const HistoryWindow& history, const sim::Action& action) {
  check_window(model, history);
  Prediction out;
  HistoryWindow window = pad_history(history, model.config.history, &out.padded);
  window.back().action = action;
  nn::Tape tape(false);
  nn::BoundParams p(tape, model.params, false);
  const auto frames = frames_on_tape(tape, window);
  ForwardDiagnostics diag;
  const nn::Var next = forward_step(p, model, frames, 1, &diag);
  out.keypoints = flatten(next.value());
  out.isolated_nodes = diag.isolated_nodes;
  out.warnings = std::move(diag.warnings);
  return out;
}

std::vector<std::vector<double>> rollout(const DynModel& model, const HistoryWindow& history,
                                         std::span<const sim::Action> actions) {
  if (actions.empty()) throw PreconditionError("rollout needs at least one action");
  check_window(model, history);
  const HistoryWindow window = pad_history(history, model.config.history);
  nn::Tape tape(false);
  nn::BoundParams p(tape, model.params, false);
  std::vector<nn::Var> acts;
  for (const auto& a : actions) acts.push_back(tape.constant(row3(a.dx, a.dy, a.dtheta)));
  const auto preds = rollout_tape(p, model, frames_on_tape(tape, window), acts, 1);
  std::vector<std::vector<double>> out;
  for (const auto& v : preds) out.push_back(flatten(v.value()));
  return out;
}

}  // namespace dlo::dyn
