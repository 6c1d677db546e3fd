// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion. Criteria 4-9 drive the
// experiment commands at desk scale inside --dir.
#include "dlo/app/commands.hpp"
#include "dlo/control/mpc.hpp"
#include "dlo/dyn/predict.hpp"
#include "dlo/error.hpp"
#include "dlo/nn/layers.hpp"
#include "dlo/repr/transformers.hpp"
#include "dlo/sim/dataset.hpp"
#include "dlo/train/evaluate.hpp"
#include "dlo/util.hpp"
#include "support/dyn_fixtures.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cfloat>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

using namespace dlo;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ 1

Verdict gradients() {
  Verdict v;
  std::mt19937_64 rng(101);
  int checked = 0, skipped = 0;

  double worst_tf = 0.0;
  for (auto kind : {repr::TransformerKind::p2ft, repr::TransformerKind::f2pt}) {
    for (int draw = 0; draw < 100; ++draw) {
      const auto net = repr::make_transformer(kind, 11, rng);
      std::normal_distribution<double> g(0.0, 1.0);
      nn::Matrix in(4, net.input_dim()), tgt(4, net.output_dim());
      for (auto& x : in.reshaped()) x = g(rng);
      for (auto& x : tgt.reshaped()) x = g(rng);
      auto build = [&](nn::Tape& t, const nn::BoundParams& b) {
        return nn::mse(repr::transformer_forward(b, net, t.constant(in)), tgt);
      };
      auto loss = [&](const nn::ParameterStore& ps) {
        nn::Tape t(false);
        nn::BoundParams b(t, ps, false);
        return build(t, b).value()(0, 0);
      };
      nn::Tape t;
      nn::BoundParams b(t, net.params, true);
      const auto r = testing::check_parameter_gradients(net.params, nn::backward(t, build(t, b)), loss, 1e-5, 4, rng);
      worst_tf = std::max(worst_tf, r.max_rel_error);
      checked += r.checked;
      skipped += r.skipped;
    }
  }
  v.require(worst_tf < 1e-4, "transformer gradient");
  v.detail << "transformers worst " << num(worst_tf);

  for (auto kind : dyn::kAllKinds) {
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      const auto r = testing::dyn_parameter_gradcheck(kind, rng, 1e-5, 1);
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
      skipped += r.skipped;
    }
    v.require(worst < 1e-4, dyn::to_string(kind) + " gradient");
    v.detail << ", " << dyn::to_string(kind) << " " << num(worst);
  }

  // MPC action gradient of the control cost itself, 20 instances per kind
  double worst_act = 0.0;
  int act_checked = 0, act_skipped = 0;
  for (auto kind : dyn::kAllKinds) {
    for (int draw = 0; draw < 20; ++draw) {
      dyn::DynModel model = dyn::make_model(testing::small_config(kind), rng);
      testing::jitter(model.params, rng, 0.05);
      const auto recs = testing::sim_trajectory(static_cast<int>(rng() % 1000), 20);
      const auto hist = testing::window_at(recs, 6 + static_cast<int>(rng() % 8), model.config.history);
      const auto& goal = recs[19].keypoints;
      std::uniform_real_distribution<double> u(-0.9, 0.9);
      std::vector<sim::Action> a(4);
      for (auto& x : a) x = {u(rng), u(rng), u(rng)};
      const auto c = control::sequence_cost(model, hist, goal, a, true);
      double gmax = 0.0;
      for (const auto& g : c.gradient) gmax = std::max({gmax, std::abs(g.dx), std::abs(g.dy), std::abs(g.dtheta)});
      const double floor = std::max({1e-3 * gmax, 1e-6, c.loss * DBL_EPSILON / 1e-4 / 1e-3});
      for (std::size_t k = 0; k < a.size(); ++k) {
        for (int comp = 0; comp < 3; ++comp) {
          auto central = [&](double h) {
            double& x = comp == 0 ? a[k].dx : comp == 1 ? a[k].dy : a[k].dtheta;
            const double orig = x;
            x = orig + h;
            const double fp = control::sequence_cost(model, hist, goal, a, false).loss;
            x = orig - h;
            const double fm = control::sequence_cost(model, hist, goal, a, false).loss;
            x = orig;
            return (fp - fm) / (2 * h);
          };
          const double fd = central(1e-4);
          if (testing::rel_error(fd, central(5e-5), floor) > 1e-4) {
            ++act_skipped;
            continue;
          }
          const auto& g = c.gradient[k];
          const double ad = comp == 0 ? g.dx : comp == 1 ? g.dy : g.dtheta;
          worst_act = std::max(worst_act, testing::rel_error(ad, fd, floor));
          ++act_checked;
        }
      }
    }
  }
  v.require(worst_act < 1e-3, "action gradient");
  v.detail << ", actions " << num(worst_act);
  checked += act_checked;
  skipped += act_skipped;
  v.require(skipped * 10 < checked, "too many stencils across a kink");
  v.detail << "; " << checked << " coordinates checked, " << skipped << " straddled a kink";
  return v;
}

// ------------------------------------------------------------------ 2

Verdict action_encoder() {
  Verdict v;
  const std::vector<double> straight{0.0, 0.0, 0.1, 0.0, 0.2, 0.0, 0.3, 0.0, 0.4, 0.0};
  double err = 0.0;
  {
    const auto e = dyn::explicit_action_encode(repr::build_graph(straight, {}, 0.15), {0.4, 0.0, 0.0}, {}, 0.1);
    for (std::size_t i = 0; i < straight.size(); ++i) err = std::max(err, std::abs(e.predicted[i] - straight[i]));
  }
  {
    const sim::Action u{0.05, -0.03, 0.0};
    const auto e = dyn::explicit_action_encode(repr::build_graph(straight, u, 0.15), {0.4, 0.0, 0.0}, u, 0.1);
    for (int n = 0; n < 5; ++n) {
      const bool moves = n >= 3;
      err = std::max(err, std::abs(e.predicted[2 * n] - (straight[2 * n] + (moves ? 0.005 : 0.0))));
      err = std::max(err, std::abs(e.predicted[2 * n + 1] - (moves ? -0.003 : 0.0)));
    }
  }
  {
    const sim::Action u{0.0, 0.0, std::numbers::pi / 2 / 0.1};
    const auto e = dyn::explicit_action_encode(repr::build_graph(straight, {}, 0.15), {0.4, 0.0, 0.0}, u, 0.1);
    const std::vector<double> want{0.0, 0.0, 0.1, 0.0, 0.2, 0.0, 0.4, -0.1, 0.4, 0.0};
    for (std::size_t i = 0; i < want.size(); ++i) err = std::max(err, std::abs(e.predicted[i] - want[i]));
  }
  v.require(err <= 1e-12, "worked examples");
  v.detail << "worked examples max error " << num(err);

  // dyadic inputs make every shifted coordinate exact, so equality is exact too
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> q(-512, 512);
  auto dy = [&] { return q(rng) / 1024.0; };
  int broken = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(22);
    for (auto& c : x) c = dy();
    const sim::Pose ee{x[20], x[21], 0.0};
    const sim::Action a{dy() / 8, dy() / 8, 0.0};
    const double vx = dy(), vy = dy();
    std::vector<double> xs = x;
    for (std::size_t i = 0; i < xs.size(); i += 2) {
      xs[i] += vx;
      xs[i + 1] += vy;
    }
    const auto e0 = dyn::explicit_action_encode(repr::build_graph(x, a, 4.0), ee, a, 0.125);
    const auto e1 = dyn::explicit_action_encode(repr::build_graph(xs, a, 4.0), {ee.x + vx, ee.y + vy, 0.0}, a, 0.125);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (e1.predicted[i] != e0.predicted[i] + (i % 2 ? vy : vx)) {
        ++broken;
        break;
      }
    }
  }
  v.require(broken == 0, "translation equivariance");
  v.detail << "; translation equivariance exact in " << 1000 - broken << " of 1000 cases";
  return v;
}

// ------------------------------------------------------------------ 3

Verdict simulator(const app::RunConfig& config, const sim::TrajectoryDataset& data) {
  Verdict v;
  const sim::RodConfig& rod = config.rod;
  double worst_residual = 0.0, worst_mirror = 0.0;
  std::size_t states = 0;
  bool replay_ok = true;
  // records hold keypoints only, so every trajectory is replayed from rest
  std::map<int, std::vector<const sim::TrajectoryRecord*>> by_traj;
  for (const auto& r : data.records) by_traj[r.traj_id].push_back(&r);
  for (const auto& [id, recs] : by_traj) {
    sim::RodState s = sim::rest_state(rod);
    for (const auto* r : recs) {
      worst_residual = std::max(worst_residual, sim::residual(rod, s));
      replay_ok = replay_ok && sim::keypoints(rod, s) == r->keypoints && s.ee == r->ee;
      if (states % 50 == 0) {
        const auto w = sim::base_wrench(rod, s), wm = sim::base_wrench(rod, sim::mirror(s));
        worst_mirror = std::max({worst_mirror, std::abs(wm.fx - w.fx), std::abs(wm.fy + w.fy), std::abs(wm.mz + w.mz)});
      }
      ++states;
      s = sim::step(rod, s, r->action, config.collect.dt);
    }
  }
  v.require(worst_residual <= 1e-8, "equilibrium residual");
  v.require(replay_ok, "records replay");
  v.require(worst_mirror <= 1e-9, "mirror symmetry");
  v.detail << "max residual over " << states << " collected states " << num(worst_residual) << ", mirror "
           << num(worst_mirror);

  const sim::RodState rest = sim::rest_state(rod);
  const auto w0 = sim::base_wrench(rod, sim::solve_equilibrium(rod, rest, sim::rest_tip_pose(rod)));
  const double rest_err = std::max({std::abs(w0.fx), std::abs(w0.fy), std::abs(w0.mz)});
  v.require(rest_err <= 1e-9, "straight rest wrench");
  v.detail << ", rest wrench " << num(rest_err);

  // three segments: statics of the grasp spring by hand
  sim::RodConfig c3 = rod;
  c3.n_segments = 3;
  c3.n_keypoints = 4;
  const double l = c3.segment_length();
  double oracle = 0.0;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> rx(0.35, 0.75), ry(-0.4, 0.4), rt(-1.2, 1.2);
  for (int i = 0; i < 30; ++i) {
    const sim::Pose ee{rx(rng), ry(rng), rt(rng)};
    const auto s = sim::solve_equilibrium(c3, sim::rest_state(c3), ee);
    const auto& th = s.angles;
    const double tx = l * (std::cos(th[0]) + std::cos(th[1]) + std::cos(th[2]));
    const double ty = l * (std::sin(th[0]) + std::sin(th[1]) + std::sin(th[2]));
    const double fx = -2 * c3.clamp_penalty * (tx - ee.x);
    const double fy = -2 * c3.clamp_penalty * (ty - ee.y);
    const double couple = -2 * c3.clamp_penalty * sim::wrap_angle(th[2] - ee.theta);
    const auto w = sim::base_wrench(c3, s);
    oracle = std::max({oracle, std::abs(w.fx - fx), std::abs(w.fy - fy), std::abs(w.mz - (tx * fy - ty * fx + couple)),
                       std::abs(w.mz - 2 * c3.bend_stiffness * th[0])});
  }
  v.require(oracle <= 1e-6, "3-segment statics");
  v.detail << ", 3-segment oracle " << num(oracle);
  return v;
}

// ---------------------------------------------------------------- pipeline

class Pipeline {
 public:
  Pipeline(app::RunConfig config, fs::path dir, bool reuse) : config_(std::move(config)), dir_(std::move(dir)), reuse_(reuse) {}

  const app::RunConfig& config() const { return config_; }
  fs::path run_dir() const { return dir_ / "run"; }
  app::OutputLayout layout() const { return app::layout(config_, run_dir()); }

  const sim::TrajectoryDataset& dataset() {
    if (!data_) {
      if (!(reuse_ && fs::exists(layout().dataset))) timed("collect", [&] { app::cmd_collect(config_, run_dir()); });
      data_ = sim::load_dataset(layout().dataset);
    }
    return *data_;
  }
  void trained(const std::string& name) {
    dataset();
    if (done_.count(name)) return;
    if (!(reuse_ && fs::exists(layout().models / (name + ".ckpt")))) {
      timed("train " + name, [&] { app::cmd_train(config_, run_dir(), name, false); });
    }
    done_.insert(name);
  }
  const app::EvalSummary& eval() {
    if (!eval_) {
      std::vector<std::string> names;
      for (auto k : dyn::kAllKinds) {
        names.push_back(dyn::to_string(k));
        trained(names.back());
      }
      timed("eval", [&] { eval_ = app::cmd_eval(config_, run_dir(), names); });
    }
    return *eval_;
  }
  const app::BenchSummary& bench() {
    if (!bench_) {
      for (const char* n : {"ea-pe-gat", "p2ft", "f2pt"}) trained(n);
      if (!(reuse_ && fs::exists(layout().suite))) timed("gen-suite", [&] { app::cmd_gen_suite(config_, run_dir()); });
      timed("bench", [&] {
        bench_ = app::cmd_bench(config_, run_dir(), "ea-pe-gat", {app::Strategy::hybrid, app::Strategy::pmpc}, 0, &std::cout);
      });
    }
    return *bench_;
  }

  template <class F>
  static void timed(const std::string& what, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    std::cout << "-- " << what << std::endl;
    f();
    std::cout << "-- " << what << " took " << num(seconds_since(t0)) << " s" << std::endl;
  }

 private:
  app::RunConfig config_;
  fs::path dir_;
  bool reuse_;
  std::optional<sim::TrajectoryDataset> data_;
  std::set<std::string> done_;
  std::optional<app::EvalSummary> eval_;
  std::optional<app::BenchSummary> bench_;
};

// ------------------------------------------------------------------ 4

Verdict transformers(Pipeline& run) {
  Verdict v;
  run.trained("p2ft");
  run.trained("f2pt");
  const auto splits = train::split_dataset(run.dataset(), run.config().split);
  const auto test = train::pairs_from(splits.test);
  const auto p2ft = repr::load_transformer(run.layout().models / "p2ft.ckpt");
  const auto f2pt = repr::load_transformer(run.layout().models / "f2pt.ckpt");
  const double length = run.config().rod.total_length;
  const double kp = train::f2pt_keypoint_error(f2pt, test) / length;
  const auto pe = train::p2ft_errors(p2ft, test);
  const auto rt = train::round_trip_errors(p2ft, f2pt, test);
  v.require(kp <= 0.03, "F2PT keypoint error");
  v.detail << "F2PT keypoint error " << num(100 * kp) << "% of length; P2FT error / std";
  for (int k = 0; k < 3; ++k) {
    v.require(pe.relative[k] <= 0.05, "P2FT component " + std::to_string(k));
    v.detail << " " << num(100 * pe.relative[k]) << "%";
  }
  v.detail << "; round trip";
  for (int k = 0; k < 3; ++k) {
    v.require(rt.relative[k] <= 0.08, "round trip component " + std::to_string(k));
    v.detail << " " << num(100 * rt.relative[k]) << "%";
  }
  return v;
}

// ------------------------------------------------------------------ 5, 6

double step10(const app::EvalSummary& e, dyn::ModelKind k) {
  const auto it = std::find(e.models.begin(), e.models.end(), dyn::to_string(k));
  const auto& curve = e.rmse.at(static_cast<std::size_t>(it - e.models.begin()));
  return curve.at(9);
}

Verdict ordering(Pipeline& run) {
  Verdict v;
  const auto& e = run.eval();
  using dyn::ModelKind;
  const double full = step10(e, ModelKind::ea_pe_gat), ea = step10(e, ModelKind::ea_gat), mlp = step10(e, ModelKind::mlp),
               ga = step10(e, ModelKind::ga_net), pe = step10(e, ModelKind::pe_gat);
  v.require(full < ea, "EA-PE-GAT < EA-GAT");
  v.require(ea < mlp, "EA-GAT < MLP");
  v.require(full <= 0.6 * ga, "EA-PE-GAT <= 0.6 GA-Net");
  v.detail << "step-10 RMSE: ea-pe-gat " << num(full) << ", ea-gat " << num(ea) << ", mlp " << num(mlp) << ", ga-net "
           << num(ga) << ", pe-gat " << num(pe) << " (ratio to ga-net " << num(full / ga) << "; ga-net vs pe-gat not gated)";
  return v;
}

Verdict timing(Pipeline& run) {
  Verdict v;
  const auto& e = run.eval();
  v.require(fs::exists(e.timing_csv), "timing report");
  double mlp = 0.0, fastest_gat = 1e300;
  for (std::size_t i = 0; i < e.models.size(); ++i) {
    if (e.models[i] == "mlp") mlp = e.timing_mean[i];
    else fastest_gat = std::min(fastest_gat, e.timing_mean[i]);
    v.detail << (i ? ", " : "") << e.models[i] << " " << num(1e6 * e.timing_mean[i]) << " us";
  }
  v.require(mlp < fastest_gat, "MLP fastest");
  return v;
}

// ------------------------------------------------------------------ 7, 8

Verdict control_benchmark(Pipeline& run) {
  Verdict v;
  const auto& b = run.bench();
  using app::DeformationClass;
  using app::Strategy;
  const auto& hl = b.stats(Strategy::hybrid, DeformationClass::large);
  const auto& pl = b.stats(Strategy::pmpc, DeformationClass::large);
  const auto& hs = b.stats(Strategy::hybrid, DeformationClass::small);
  const auto& ps = b.stats(Strategy::pmpc, DeformationClass::small);
  v.require(hl.success_rate() >= 0.75, "hybrid large >= 75%");
  v.require(hl.success_rate() > pl.success_rate(), "hybrid large > pmpc large");
  v.require(hs.success_rate() == 1.0 && ps.success_rate() == 1.0, "small 100%");
  const double hm = b.mean_final_rmse(Strategy::hybrid), pm = b.mean_final_rmse(Strategy::pmpc);
  v.require(hm < pm, "hybrid mean final RMSE < pmpc");
  v.detail << "large: hybrid " << hl.successes << "/" << hl.tasks << ", pmpc " << pl.successes << "/" << pl.tasks
           << "; small: hybrid " << hs.successes << "/" << hs.tasks << ", pmpc " << ps.successes << "/" << ps.tasks
           << "; mean final RMSE hybrid " << num(hm) << ", pmpc " << num(pm);
  return v;
}

Verdict mpc_contract(Pipeline& run) {
  Verdict v;
  const auto& b = run.bench();
  int guard = 0, actions = 0, cycles = 0, errors = 0;
  double replay = 0.0;
  for (const auto& e : b.episodes) {
    guard += e.guard_violations;
    actions += e.action_violations;
    cycles += e.result.steps;
    errors += !e.result.error.empty();
    replay = std::max(replay, e.replay_deviation);
  }
  v.require(guard == 0, "guarded descent");
  v.require(actions == 0, "action box");
  v.require(replay <= run.config().rod.solver_tol, "replay");
  v.detail << cycles << " control cycles in " << b.episodes.size() << " episodes: " << guard
           << " cost increases, " << actions << " out-of-box action components, max replay deviation " << num(replay)
           << ", " << errors << " episodes ended by an error";
  return v;
}

// ------------------------------------------------------------------ 9

std::string without_last_column(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  for (std::string l; std::getline(in, l);) out += l.substr(0, l.rfind(',')) + "\n";
  return out;
}

Verdict determinism(Pipeline& run, const fs::path& dir) {
  Verdict v;
  const auto& b = run.bench();
  const fs::path again = dir / "rerun";
  fs::remove_all(again);
  const auto first = run.layout();
  const auto second = app::layout(run.config(), again);

  Pipeline::timed("collect (repeat)", [&] { app::cmd_collect(run.config(), again); });
  const bool data_same = read_file(first.dataset) == read_file(second.dataset);
  v.require(data_same, "collect");

  Pipeline::timed("train mlp (repeat)", [&] { app::cmd_train(run.config(), again, "mlp", false); });
  const bool ckpt_same = read_file(first.models / "mlp.ckpt") == read_file(second.models / "mlp.ckpt");
  const bool log_same = without_last_column(read_file(first.reports / "train_mlp.csv")) ==
                        without_last_column(read_file(second.reports / "train_mlp.csv"));
  const bool metrics_same =
      read_file(first.reports / "train_mlp_metrics.csv") == read_file(second.reports / "train_mlp_metrics.csv");
  v.require(ckpt_same && log_same && metrics_same, "train");

  // a two-task subset of the benchmark against the full run's logs
  fs::create_directories(second.models);
  for (const char* n : {"ea-pe-gat.ckpt", "p2ft.ckpt", "f2pt.ckpt"}) {
    fs::copy_file(first.models / n, second.models / n, fs::copy_options::overwrite_existing);
  }
  fs::copy_file(first.suite, second.suite, fs::copy_options::overwrite_existing);
  const int n = 2;
  app::BenchSummary sub;
  Pipeline::timed("bench subset (repeat)", [&] {
    sub = app::cmd_bench(run.config(), again, "ea-pe-gat", {app::Strategy::hybrid, app::Strategy::pmpc}, n);
  });
  bool bench_same = sub.episodes.size() == static_cast<std::size_t>(2 * n);
  for (const auto& e : sub.episodes) {
    const std::string name = "task" + std::to_string(e.task) + "_" + app::to_string(e.strategy) + ".jsonl";
    bench_same = bench_same && read_file(first.reports / "episodes" / name) == read_file(second.reports / "episodes" / name);
  }
  for (std::size_t i = 0; i < sub.episodes.size(); ++i) bench_same = bench_same && sub.episodes[i].result == b.episodes[i].result;
  v.require(bench_same, "bench");
  v.detail << "dataset " << (data_same ? "identical" : "differs") << "; mlp checkpoint, log and metrics "
           << (ckpt_same && log_same && metrics_same ? "identical" : "differ") << "; episode logs of " << n
           << " tasks " << (bench_same ? "identical" : "differ");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"acceptance criteria"};
  fs::path dir = "acceptance_run";
  bool reuse = false;
  std::vector<int> only;
  cli.add_option("--dir", dir, "working directory for the desk-scale run");
  cli.add_flag("--reuse", reuse, "keep existing dataset, checkpoints and suite in --dir");
  cli.add_option("--only", only, "criteria to run")->delimiter(',');
  CLI11_PARSE(cli, argc, argv);

  Pipeline run(app::RunConfig::defaults(false), dir, reuse);
  const char* names[] = {"",
                         "gradient correctness",
                         "explicit action encoder",
                         "simulator soundness",
                         "transformer accuracy",
                         "dynamics-model ordering",
                         "timing report",
                         "control benchmark",
                         "MPC contract",
                         "determinism"};
  std::vector<std::pair<int, Verdict>> results;
  for (int c = 1; c <= 9; ++c) {
    if (!only.empty() && std::find(only.begin(), only.end(), c) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      switch (c) {
        case 1: v = gradients(); break;
        case 2: v = action_encoder(); break;
        case 3: v = simulator(run.config(), run.dataset()); break;
        case 4: v = transformers(run); break;
        case 5: v = ordering(run); break;
        case 6: v = timing(run); break;
        case 7: v = control_benchmark(run); break;
        case 8: v = mpc_contract(run); break;
        case 9: v = determinism(run, dir); break;
      }
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "error: " << e.what();
    }
    v.detail << " (" << num(seconds_since(t0)) << " s)";
    std::cout << "criterion " << c << " " << (v.pass ? "PASS" : "FAIL") << " " << names[c] << ": " << v.detail.str()
              << std::endl;
    results.emplace_back(c, std::move(v));
  }
  std::cout << "\nsummary\n";
  int failed = 0;
  for (const auto& [c, v] : results) {
    std::cout << "  " << c << " " << (v.pass ? "PASS" : "FAIL") << " " << names[c] << "\n";
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
