// SPDX-License-Identifier: Apache-2.0
#include "dlo/sim/rod.hpp"

#include "dlo/error.hpp"
#include "dlo/util.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <sstream>

namespace dlo::sim {
namespace {

struct Tip {
  double x, y;
};

Tip forward_tip(const RodConfig& c, const std::vector<double>& angles) {
  const double l = c.segment_length();
  double x = 0.0, y = 0.0;
  for (double a : angles) {
    x += l * std::cos(a);
    y += l * std::sin(a);
  }
  return {x, y};
}

double bending_energy(const RodConfig& c, const std::vector<double>& angles) {
  double e = 0.0, prev = 0.0;
  for (double a : angles) {
    const double d = a - prev;
    e += d * d;
    prev = a;
  }
  return c.bend_stiffness * e;
}

/// Energy with the clamp displaced by (bx, by) and rotated by phi, the rod
/// carried along rigidly.
double displaced_energy(const RodConfig& c, const RodState& s, double bx, double by, double phi) {
  const Tip tip = forward_tip(c, s.angles);
  const double cp = std::cos(phi), sp = std::sin(phi);
  const double tx = bx + cp * tip.x - sp * tip.y;
  const double ty = by + sp * tip.x + cp * tip.y;
  const double dx = tx - s.ee.x, dy = ty - s.ee.y;
  const double da = wrap_angle(s.angles.back() + phi - s.ee.theta);
  return bending_energy(c, s.angles) + c.clamp_penalty * (dx * dx + dy * dy + da * da);
}

Eigen::VectorXd gradient_vec(const RodConfig& c, const std::vector<double>& angles, const Pose& ee) {
  const int n = static_cast<int>(angles.size());
  const double l = c.segment_length();
  const double k = c.bend_stiffness, w = c.clamp_penalty;
  const Tip tip = forward_tip(c, angles);
  const double dx = tip.x - ee.x, dy = tip.y - ee.y;
  Eigen::VectorXd g(n);
  for (int j = 0; j < n; ++j) {
    const double prev = j == 0 ? 0.0 : angles[j - 1];
    double gj = 2.0 * k * (angles[j] - prev);
    if (j + 1 < n) gj -= 2.0 * k * (angles[j + 1] - angles[j]);
    gj += 2.0 * w * l * (-dx * std::sin(angles[j]) + dy * std::cos(angles[j]));
    g(j) = gj;
  }
  g(n - 1) += 2.0 * w * wrap_angle(angles.back() - ee.theta);
  return g;
}

Eigen::MatrixXd hessian(const RodConfig& c, const std::vector<double>& angles, const Pose& ee) {
  const int n = static_cast<int>(angles.size());
  const double l = c.segment_length();
  const double k = c.bend_stiffness, w = c.clamp_penalty;
  const Tip tip = forward_tip(c, angles);
  const double dx = tip.x - ee.x, dy = tip.y - ee.y;
  Eigen::VectorXd ps(n), pc(n);
  for (int j = 0; j < n; ++j) {
    ps(j) = -std::sin(angles[j]);
    pc(j) = std::cos(angles[j]);
  }
  Eigen::MatrixXd h = 2.0 * w * l * l * (ps * ps.transpose() + pc * pc.transpose());
  for (int j = 0; j < n; ++j) {
    h(j, j) += j + 1 < n ? 4.0 * k : 2.0 * k;
    if (j + 1 < n) {
      h(j, j + 1) -= 2.0 * k;
      h(j + 1, j) -= 2.0 * k;
    }
    h(j, j) += 2.0 * w * l * (-dx * std::cos(angles[j]) - dy * std::sin(angles[j]));
  }
  h(n - 1, n - 1) += 2.0 * w;
  return h;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void RodConfig::validate() const {
  if (n_segments < 2) throw ConfigError("rod needs at least 2 segments");
  if (!(total_length > 0.0)) throw ConfigError("rod length must be positive");
  if (n_keypoints < 2) throw ConfigError("rod needs at least 2 keypoints");
  if (n_segments % (n_keypoints - 1) != 0) {
    throw ConfigError("n_segments must be a multiple of n_keypoints - 1 so keypoints land on joints");
  }
  if (!(bend_stiffness > 0.0) || !(clamp_penalty > 0.0)) throw ConfigError("stiffness and penalty must be positive");
  if (!(solver_tol > 0.0) || max_solver_iters < 1) throw ConfigError("invalid solver settings");
  if (!(u_max.dx > 0 && u_max.dy > 0 && u_max.dtheta > 0)) throw ConfigError("u_max must be positive");
  if (!(0.0 < workspace_min && workspace_min < workspace_max && workspace_max < 1.0)) {
    throw ConfigError("workspace annulus must satisfy 0 < min < max < 1");
  }
}

std::string RodConfig::canonical() const {
  std::ostringstream ss;
  ss << "rod n_segments=" << n_segments << " length=" << format_double(total_length)
     << " k_b=" << format_double(bend_stiffness) << " penalty=" << format_double(clamp_penalty)
     << " m=" << n_keypoints << " tol=" << format_double(solver_tol) << " iters=" << max_solver_iters
     << " u_max=" << format_double(u_max.dx) << "," << format_double(u_max.dy) << ","
     << format_double(u_max.dtheta) << " workspace=" << format_double(workspace_min) << ","
     << format_double(workspace_max);
  return ss.str();
}

std::uint64_t RodConfig::hash() const { return fnv1a64(canonical()); }

RodState rest_state(const RodConfig& config) {
  return RodState{std::vector<double>(config.n_segments, 0.0), rest_tip_pose(config)};
}

Pose rest_tip_pose(const RodConfig& config) {
  const Tip t = forward_tip(config, std::vector<double>(config.n_segments, 0.0));
  return Pose{t.x, t.y, 0.0};
}

std::vector<double> joint_positions(const RodConfig& config, const std::vector<double>& angles) {
  const double l = config.segment_length();
  std::vector<double> out;
  out.reserve(2 * (angles.size() + 1));
  double x = 0.0, y = 0.0;
  out.push_back(x);
  out.push_back(y);
  for (double a : angles) {
    x += l * std::cos(a);
    y += l * std::sin(a);
    out.push_back(x);
    out.push_back(y);
  }
  return out;
}

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

double total_energy(const RodConfig& config, const std::vector<double>& angles, const Pose& ee) {
  return displaced_energy(config, RodState{angles, ee}, 0.0, 0.0, 0.0);
}

std::vector<double> energy_gradient(const RodConfig& config, const std::vector<double>& angles,
                                    const Pose& ee) {
  return to_std(gradient_vec(config, angles, ee));
}

double residual(const RodConfig& config, const RodState& state) {
  return gradient_vec(config, state.angles, state.ee).norm();
}

RodState solve_equilibrium(const RodConfig& config, const RodState& warm_start, const Pose& ee) {
  if (static_cast<int>(warm_start.angles.size()) != config.n_segments) {
    throw PreconditionError("warm start has " + std::to_string(warm_start.angles.size()) +
                            " angles, expected " + std::to_string(config.n_segments));
  }
  std::vector<double> theta = warm_start.angles;
  const int n = config.n_segments;
  Eigen::VectorXd g = gradient_vec(config, theta, ee);
  double energy = total_energy(config, theta, ee);
  for (int iter = 0; iter < config.max_solver_iters; ++iter) {
    const double gnorm = g.norm();
    if (gnorm <= config.solver_tol) return RodState{theta, ee};

    // Modified Newton: eigenvalues replaced by their magnitude (floored), so
    // compressed near-straight configurations escape the buckling saddle.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian(config, theta, ee));
    Eigen::VectorXd dir;
    if (eig.info() == Eigen::Success) {
      const Eigen::VectorXd& lam = eig.eigenvalues();
      const double floor = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
      const Eigen::VectorXd inv = lam.cwiseAbs().cwiseMax(floor).cwiseInverse();
      dir = -(eig.eigenvectors() * inv.asDiagonal() * (eig.eigenvectors().transpose() * g));
    }
    if (dir.size() == 0 || !dir.allFinite() || dir.dot(g) >= 0.0) dir = -g;

    const double slope = g.dot(dir);
    std::vector<double> trial(n);
    // Once the predicted decrease is near the rounding level of the energy,
    // energy comparisons are noise; accept the full step on gradient-norm decrease.
    const bool energy_resolvable = -slope > 1e-12 * std::max(1.0, std::abs(energy));
    bool accepted = false;
    if (energy_resolvable) {
      double alpha = 1.0;
      for (int ls = 0; ls < 60 && !accepted; ++ls, alpha *= 0.5) {
        for (int j = 0; j < n; ++j) trial[j] = theta[j] + alpha * dir(j);
        const double e = total_energy(config, trial, ee);
        if (e <= energy + 1e-4 * alpha * slope) {
          accepted = true;
          energy = e;
        }
      }
    }
    if (!accepted) {
      for (int j = 0; j < n; ++j) trial[j] = theta[j] + dir(j);
      const Eigen::VectorXd gt = gradient_vec(config, trial, ee);
      if (!(gt.norm() < gnorm)) throw SolverError("equilibrium line search stalled", gnorm);
      energy = total_energy(config, trial, ee);
    }
    theta.swap(trial);
    g = gradient_vec(config, theta, ee);
  }
  const double final_residual = g.norm();
  if (final_residual <= config.solver_tol) return RodState{theta, ee};
  throw SolverError("equilibrium solver did not converge in " +
                        std::to_string(config.max_solver_iters) + " iterations",
                    final_residual);
}

Wrench base_wrench(const RodConfig& config, const RodState& state) {
  const double r = residual(config, state);
  if (r > config.solver_tol) {
    throw PreconditionError("base_wrench requires an equilibrium (residual " + std::to_string(r) + ")");
  }
  constexpr double kEps = 1e-6;
  auto d = [&](double bx, double by, double phi) { return displaced_energy(config, state, bx, by, phi); };
  Wrench w;
  w.fx = -(d(kEps, 0, 0) - d(-kEps, 0, 0)) / (2 * kEps);
  w.fy = -(d(0, kEps, 0) - d(0, -kEps, 0)) / (2 * kEps);
  w.mz = -(d(0, 0, kEps) - d(0, 0, -kEps)) / (2 * kEps);
  return w;
}

RodState step(const RodConfig& config, const RodState& state, const Action& action, double dt) {
  constexpr double kSlack = 1e-12;
  if (std::abs(action.dx) > config.u_max.dx * (1 + kSlack) ||
      std::abs(action.dy) > config.u_max.dy * (1 + kSlack) ||
      std::abs(action.dtheta) > config.u_max.dtheta * (1 + kSlack)) {
    throw PreconditionError("action exceeds u_max");
  }
  const Pose next{state.ee.x + action.dx * dt, state.ee.y + action.dy * dt,
                  state.ee.theta + action.dtheta * dt};
  if (action == Action{}) return state;
  return solve_equilibrium(config, state, next);
}

std::vector<double> keypoints(const RodConfig& config, const RodState& state) {
  const std::vector<double> joints = joint_positions(config, state.angles);
  const int stride = config.keypoint_stride();
  std::vector<double> out;
  out.reserve(2 * config.n_keypoints);
  for (int k = 0; k < config.n_keypoints; ++k) {
    out.push_back(joints[2 * k * stride]);
    out.push_back(joints[2 * k * stride + 1]);
  }
  return out;
}

RodState mirror(const RodState& state) {
  RodState m = state;
  for (auto& a : m.angles) a = -a;
  m.ee = Pose{state.ee.x, -state.ee.y, -state.ee.theta};
  return m;
}

}  // namespace dlo::sim
