// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/sim/rod.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace dlo::repr {

enum class NodeKind { fixed = 0, internal = 1, grasped = 2 };

/// One-hot c_i in the order (fixed, internal, grasped).
std::array<double, 3> one_hot(NodeKind kind);

struct Node {
  double x = 0.0;
  double y = 0.0;
  sim::Action u;  ///< the action on the grasped node, zero elsewhere
  NodeKind kind = NodeKind::internal;
  /// o_i = [x_i, u_i, c_i].
  std::array<double, 8> features() const;
};

/// Directed edge; the receiver aggregates messages from the sender.
struct Edge {
  int receiver = 0;
  int sender = 0;
  bool operator==(const Edge&) const = default;
};

struct GraphState {
  std::vector<Node> nodes;
  /// Sorted by (receiver, sender).
  std::vector<Edge> edges;
  double radius = 0.0;
  /// Non-fatal diagnostics, e.g. a disconnected graph.
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(nodes.size()); }
  int fixed_index() const { return 0; }
  int grasped_index() const { return size() - 1; }
  /// Nodes with an edge into `i`.
  std::vector<int> neighbours(int i) const;
  /// Incoming edge count of every node.
  std::vector<int> in_degree() const;
  bool connected() const;
};

/// r_c = 1.5 L / (m - 1): always links consecutive keypoints (chord <= arc).
double default_radius(double total_length, int n_keypoints);

/// Nodes from X = [x_1, y_1, ..., x_m, y_m]; edge (i, j) for i != j with
/// |x_i - x_j| < r_c. Throws PreconditionError for m < 2 or r_c <= 0.
GraphState build_graph(std::span<const double> keypoints, const sim::Action& u, double radius);

}  // namespace dlo::repr
