// SPDX-License-Identifier: Apache-2.0
#include "dlo/control/episode.hpp"

#include "dlo/error.hpp"
#include "dlo/train/evaluate.hpp"
#include "dlo/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dlo::control {

using nlohmann::json;

namespace {

void push_frame(dyn::HistoryWindow& h, const std::vector<double>& x, const sim::Pose& ee, int keep) {
  h.push_back({x, ee, {}});
  if (static_cast<int>(h.size()) > keep) h.erase(h.begin());
}

json pose_json(const sim::Pose& p) { return json::array({p.x, p.y, p.theta}); }
json action_json(const sim::Action& a) { return json::array({a.dx, a.dy, a.dtheta}); }

}  // namespace

EpisodeResult run_episode(const sim::RodConfig& rod, const sim::RodState& initial, const dyn::DynModel& model,
                          const WaypointPlan& plan, const ControlConfig& config, int budget) {
  config.validate();
  if (plan.shapes.empty()) throw PreconditionError("empty waypoint plan");
  if (budget < 1) throw PreconditionError("step budget must be positive");
  const double L = rod.total_length;
  const double dt = model.config.dt;
  const std::vector<double>& target = plan.shapes.back();

  EpisodeResult r;
  r.warnings = plan.warnings;
  sim::RodState state = initial;
  std::vector<double> x = sim::keypoints(rod, state);
  dyn::HistoryWindow history;
  push_frame(history, x, state.ee, model.config.history);
  std::vector<sim::Action> plan_u;
  int t = 0;

  try {
    for (int w = 0; w < plan.size(); ++w) {
      const std::vector<double>& goal = plan.shapes[w];
      bool done = false;
      for (int used = 0; used < budget; ++used) {
        const double rw = train::shape_rmse(x, goal);
        const double rt = train::shape_rmse(x, target);
        // success ends the episode from any waypoint
        if (rt < config.success_threshold * L) {
          done = true;
          break;
        }
        if (w + 1 < plan.size() && rw < config.switch_threshold * L) break;
        const int horizon = std::min(config.horizon_cap, budget - used);
        const MpcResult opt = mpc_optimize(model, history, goal, warm_start(plan_u, horizon), config);
        const sim::Action u = to_physical(opt.actions.front(), model.config.u_max);

        StepLog s;
        s.t = t;
        s.waypoint = w;
        s.keypoints = x;
        s.action = u;
        s.wrench = sim::base_wrench(rod, state);
        s.rmse_waypoint = rw;
        s.rmse_target = rt;
        s.initial_loss = opt.initial_loss;
        s.final_loss = opt.final_loss;
        r.log.push_back(std::move(s));

        state = sim::step(rod, state, u, dt);
        x = sim::keypoints(rod, state);
        history.back().action = u;
        push_frame(history, x, state.ee, model.config.history);
        // keep the optimised sequence (with the executed entry) for the next warm start
        plan_u = opt.actions;
        ++t;
      }
      if (done) break;
    }
  } catch (const ControllerError& e) {
    r.error = std::string("controller: ") + e.what();
  } catch (const SolverError& e) {
    r.error = std::string("solver: ") + e.what();
  }
  r.steps = t;
  r.final_keypoints = x;
  r.final_rmse = train::shape_rmse(x, target);
  r.success = r.error.empty() && r.final_rmse < config.success_threshold * L;
  return r;
}

void write_episode_log(std::ostream& out, const sim::RodState& initial, const EpisodeResult& r) {
  out << json{{"type", "header"}, {"angles", initial.angles}, {"ee", pose_json(initial.ee)}}.dump() << '\n';
  for (const StepLog& s : r.log) {
    json j{{"type", "step"},
           {"t", s.t},
           {"waypoint", s.waypoint},
           {"x", s.keypoints},
           {"u", action_json(s.action)},
           {"wrench", json::array({s.wrench.fx, s.wrench.fy, s.wrench.mz})},
           {"rmse_waypoint", s.rmse_waypoint},
           {"rmse_target", s.rmse_target},
           {"loss_initial", s.initial_loss},
           {"loss_final", s.final_loss}};
    out << j.dump() << '\n';
  }
  json summary{{"type", "summary"},     {"success", r.success}, {"steps", r.steps},
               {"final_rmse", r.final_rmse}, {"final_x", r.final_keypoints}, {"error", r.error},
               {"warnings", r.warnings}};
  out << summary.dump() << '\n';
}

EpisodeLog read_episode_log(std::istream& in) {
  EpisodeLog log;
  bool header = false, summary = false;
  std::string line;
  auto arr3 = [](const json& j) {
    if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-vector in episode log");
    return std::array<double, 3>{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  };
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        log.initial.angles = j.at("angles").get<std::vector<double>>();
        const auto p = arr3(j.at("ee"));
        log.initial.ee = {p[0], p[1], p[2]};
        header = true;
      } else if (type == "step") {
        StepLog s;
        s.t = j.at("t").get<int>();
        s.waypoint = j.at("waypoint").get<int>();
        s.keypoints = j.at("x").get<std::vector<double>>();
        const auto u = arr3(j.at("u"));
        s.action = {u[0], u[1], u[2]};
        const auto w = arr3(j.at("wrench"));
        s.wrench = {w[0], w[1], w[2]};
        s.rmse_waypoint = j.at("rmse_waypoint").get<double>();
        s.rmse_target = j.at("rmse_target").get<double>();
        s.initial_loss = j.at("loss_initial").get<double>();
        s.final_loss = j.at("loss_final").get<double>();
        log.result.log.push_back(std::move(s));
      } else if (type == "summary") {
        log.result.success = j.at("success").get<bool>();
        log.result.steps = j.at("steps").get<int>();
        log.result.final_rmse = j.at("final_rmse").get<double>();
        log.result.final_keypoints = j.at("final_x").get<std::vector<double>>();
        log.result.error = j.at("error").get<std::string>();
        log.result.warnings = j.at("warnings").get<std::vector<std::string>>();
        summary = true;
      } else {
        throw IoError("unknown episode log record '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed episode log: ") + e.what());
  }
  if (!header || !summary) throw IoError("episode log lacks a header or summary");
  return log;
}

void save_episode_log(const std::filesystem::path& path, const sim::RodState& initial, const EpisodeResult& r) {
  std::ostringstream s;
  write_episode_log(s, initial, r);
  write_file_atomic(path, s.str());
}

EpisodeLog load_episode_log(const std::filesystem::path& path) {
  std::istringstream s(read_file(path));
  return read_episode_log(s);
}

double replay_deviation(const sim::RodConfig& rod, const EpisodeLog& log, double dt) {
  sim::RodState state = log.initial;
  double worst = 0.0;
  auto compare = [&](const std::vector<double>& logged) {
    const auto x = sim::keypoints(rod, state);
    if (x.size() != logged.size()) throw ShapeError("logged shape has the wrong size");
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - logged[i]));
  };
  for (const StepLog& s : log.result.log) {
    compare(s.keypoints);
    state = sim::step(rod, state, s.action, dt);
  }
  compare(log.result.final_keypoints);
  return worst;
}

}  // namespace dlo::control
