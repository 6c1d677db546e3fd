// SPDX-License-Identifier: Apache-2.0
#include "dlo/repr/graph.hpp"

#include "dlo/error.hpp"

#include <cmath>
#include <sstream>

namespace dlo::repr {

std::array<double, 3> one_hot(NodeKind kind) {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  c[static_cast<int>(kind)] = 1.0;
  return c;
}

std::array<double, 8> Node::features() const {
  const auto c = one_hot(kind);
  return {x, y, u.dx, u.dy, u.dtheta, c[0], c[1], c[2]};
}

std::vector<int> GraphState::neighbours(int i) const {
  std::vector<int> out;
  for (const Edge& e : edges) {
    if (e.receiver == i) out.push_back(e.sender);
  }
  return out;
}

std::vector<int> GraphState::in_degree() const {
  std::vector<int> deg(nodes.size(), 0);
  for (const Edge& e : edges) ++deg[e.receiver];
  return deg;
}

bool GraphState::connected() const {
  if (nodes.empty()) return true;
  std::vector<std::vector<int>> adj(nodes.size());
  for (const Edge& e : edges) adj[e.receiver].push_back(e.sender);
  std::vector<char> seen(nodes.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j : adj[i]) {
      if (!seen[j]) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  return reached == nodes.size();
}

double default_radius(double total_length, int n_keypoints) {
  return 1.5 * total_length / (n_keypoints - 1);
}

GraphState build_graph(std::span<const double> keypoints, const sim::Action& u, double radius) {
  if (keypoints.size() % 2 != 0) throw ShapeError("keypoint vector has odd length");
  const int m = static_cast<int>(keypoints.size() / 2);
  if (m < 2) throw PreconditionError("a graph needs at least 2 keypoints");
  if (!(radius > 0.0)) throw PreconditionError("connection radius must be positive");
  GraphState g;
  g.radius = radius;
  g.nodes.resize(m);
  for (int i = 0; i < m; ++i) {
    Node& n = g.nodes[i];
    n.x = keypoints[2 * i];
    n.y = keypoints[2 * i + 1];
    n.kind = i == 0 ? NodeKind::fixed : (i == m - 1 ? NodeKind::grasped : NodeKind::internal);
    if (n.kind == NodeKind::grasped) n.u = u;
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const double dx = g.nodes[i].x - g.nodes[j].x, dy = g.nodes[i].y - g.nodes[j].y;
      if (std::hypot(dx, dy) < radius) g.edges.push_back({i, j});
    }
  }
  if (!g.connected()) {
    std::ostringstream ss;
    ss << "disconnected graph: radius " << radius << " leaves some keypoints unreachable";
    g.warnings.push_back(ss.str());
  }
  return g;
}

}  // namespace dlo::repr
