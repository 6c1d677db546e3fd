// SPDX-License-Identifier: Apache-2.0
#include "dlo/control/mpc.hpp"

#include "dlo/dyn/forward.hpp"
#include "dlo/error.hpp"
#include "dlo/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dlo::control {

void ControlConfig::validate() const {
  if (horizon_cap < 1) throw ConfigError("horizon_cap must be at least 1");
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(success_threshold > 0.0)) throw ConfigError("success_threshold must be positive");
  if (!(switch_threshold >= success_threshold)) throw ConfigError("switch_threshold must be >= success_threshold");
  if (waypoints < 1) throw ConfigError("waypoints must be at least 1");
  if (steps_per_waypoint < 1 || direct_budget < 1) throw ConfigError("step budgets must be positive");
}

std::string ControlConfig::canonical() const {
  std::ostringstream s;
  s.precision(17);
  s << "control horizon_cap=" << horizon_cap << " iterations=" << iterations << " lr=" << learning_rate
    << " switch=" << switch_threshold << " success=" << success_threshold << " waypoints=" << waypoints
    << " steps_per_waypoint=" << steps_per_waypoint << " direct_budget=" << direct_budget;
  return s.str();
}

sim::Action to_physical(const sim::Action& n, const sim::Action& u_max) {
  const sim::Action c = clamp_unit(n);
  return {c.dx * u_max.dx, c.dy * u_max.dy, c.dtheta * u_max.dtheta};
}

sim::Action clamp_unit(const sim::Action& a) {
  auto c = [](double v) { return std::clamp(v, -1.0, 1.0); };
  return {c(a.dx), c(a.dy), c(a.dtheta)};
}

SequenceCost sequence_cost(const dyn::DynModel& model, const dyn::HistoryWindow& history,
                           std::span<const double> goal, std::span<const sim::Action> normalized,
                           bool with_gradient) {
  const auto& cfg = model.config;
  const int m = cfg.n_keypoints;
  if (static_cast<int>(goal.size()) != 2 * m) throw ShapeError("goal has the wrong number of keypoint values");
  if (normalized.empty()) throw PreconditionError("empty action sequence");
  const dyn::HistoryWindow window = dyn::pad_history(history, cfg.history);

  nn::Tape tape(with_gradient);
  nn::BoundParams p(tape, model.params, false);
  nn::Matrix scale(1, 3);
  scale << cfg.u_max.dx, cfg.u_max.dy, cfg.u_max.dtheta;
  std::vector<nn::Var> leaves, acts;
  for (const auto& a : normalized) {
    nn::Matrix v(1, 3);
    v << a.dx, a.dy, a.dtheta;
    leaves.push_back(tape.variable(v));
    acts.push_back(nn::mul_const(leaves.back(), scale));
  }
  nn::Matrix target(m, 2);
  for (int n = 0; n < m; ++n) target.row(n) << goal[2 * n], goal[2 * n + 1];
  const auto preds = dyn::rollout_tape(p, model, dyn::frames_on_tape(tape, window), acts, 1);
  const nn::Var loss =
      nn::scale(nn::sum_squares(nn::add_const(preds.back(), nn::Matrix(-target))), 1.0 / (cfg.delta() * cfg.delta()));

  SequenceCost out;
  out.loss = loss.value()(0, 0);
  const nn::Matrix& xt = preds.back().value();
  out.terminal.resize(2 * m);
  for (int n = 0; n < m; ++n) {
    out.terminal[2 * n] = xt(n, 0);
    out.terminal[2 * n + 1] = xt(n, 1);
  }
  if (with_gradient && std::isfinite(out.loss)) {
    tape.backward(loss);
    for (const auto& v : leaves) {
      const nn::Matrix& g = tape.grad(v);
      out.gradient.push_back({g(0, 0), g(0, 1), g(0, 2)});
    }
  }
  return out;
}

MpcResult guarded_descent(const CostFunction& cost, std::vector<sim::Action> initial, const ControlConfig& config) {
  if (initial.empty()) throw PreconditionError("empty initial action sequence");
  for (auto& a : initial) a = clamp_unit(a);

  MpcResult r;
  SequenceCost cur = cost(initial);
  if (!std::isfinite(cur.loss)) throw ControllerError("initial action sequence has a non-finite cost");
  std::vector<sim::Action> x = initial;
  r.loss_trace.push_back(cur.loss);
  r.initial_loss = cur.loss;
  r.actions = x;
  r.final_loss = cur.loss;

  double lr = config.learning_rate;
  int it = 0;
  while (it < config.iterations) {
    std::vector<sim::Action> next(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const sim::Action& g = cur.gradient[k];
      next[k] = clamp_unit({x[k].dx - lr * g.dx, x[k].dy - lr * g.dy, x[k].dtheta - lr * g.dtheta});
    }
    SequenceCost c = cost(next);
    if (!std::isfinite(c.loss)) {
      if (r.step_halved) throw ControllerError("non-finite MPC cost after halving the step");
      // stay at the last finite iterate and retry with half the step
      r.step_halved = true;
      lr *= 0.5;
      continue;
    }
    ++it;
    if (c.loss > cur.loss) {
      // overshoot: keep the iterate and shorten the step, or the cycle
      // returns its warm start unchanged and the episode stalls
      lr *= 0.5;
      r.loss_trace.push_back(c.loss);
      continue;
    }
    x = std::move(next);
    cur = std::move(c);
    r.loss_trace.push_back(cur.loss);
    if (cur.loss < r.final_loss) {
      r.final_loss = cur.loss;
      r.actions = x;
    }
  }
  return r;
}

MpcResult mpc_optimize(const dyn::DynModel& model, const dyn::HistoryWindow& history, std::span<const double> goal,
                       std::vector<sim::Action> initial, const ControlConfig& config) {
  return guarded_descent(
      [&](std::span<const sim::Action> u) { return sequence_cost(model, history, goal, u, true); }, std::move(initial),
      config);
}

std::vector<sim::Action> warm_start(std::span<const sim::Action> previous, int horizon) {
  if (horizon < 1) throw PreconditionError("horizon must be at least 1");
  std::vector<sim::Action> out;
  if (previous.empty()) return std::vector<sim::Action>(horizon);
  out.assign(previous.begin() + 1, previous.end());
  out.push_back(previous.back());
  out.resize(horizon, out.back());
  return out;
}

}  // namespace dlo::control
