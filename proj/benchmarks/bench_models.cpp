// SPDX-License-Identifier: Apache-2.0
// Desk-scale timings of the hot paths: simulator step, one-step prediction
// per model kind, MPC cost with gradient, transformer forward.
#include "dlo/control/mpc.hpp"
#include "dlo/dyn/model.hpp"
#include "dlo/dyn/predict.hpp"
#include "dlo/repr/transformers.hpp"
#include "dlo/sim/dataset.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace dlo;

namespace {

const std::vector<sim::TrajectoryRecord>& records() {
  static const auto recs = sim::collect_trajectory(sim::RodConfig{}, {1, 40, 0.1, 99}, 0);
  return recs;
}

dyn::HistoryWindow window(int history) {
  const auto& r = records();
  dyn::HistoryWindow w;
  for (int k = 39 - history; k < 39; ++k) w.push_back({r[k].keypoints, r[k].ee, r[k].action});
  return w;
}

dyn::DynModel model_of(dyn::ModelKind kind) {
  dyn::DynConfig c;
  c.kind = kind;
  std::mt19937_64 rng(1);
  return dyn::make_model(c, rng);
}

void BM_SimStep(benchmark::State& state) {
  const sim::RodConfig rod;
  sim::RodState s = sim::rest_state(rod);
  double sign = 1.0;
  for (auto _ : state) {
    s = sim::step(rod, s, {0.02 * sign, 0.03, 0.1 * sign}, 0.1);
    sign = -sign;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_SimStep);

void BM_PredictOneStep(benchmark::State& state) {
  const auto kind = dyn::kAllKinds[state.range(0)];
  const auto model = model_of(kind);
  const auto w = window(model.config.history);
  state.SetLabel(dyn::to_string(kind));
  for (auto _ : state) benchmark::DoNotOptimize(dyn::predict_one_step(model, w, {0.01, -0.02, 0.05}));
}
BENCHMARK(BM_PredictOneStep)->DenseRange(0, 4);

void BM_SequenceCostGradient(benchmark::State& state) {
  const auto model = model_of(dyn::ModelKind::ea_pe_gat);
  const auto w = window(model.config.history);
  const std::vector<sim::Action> u(static_cast<std::size_t>(state.range(0)), sim::Action{0.2, -0.1, 0.3});
  const auto& goal = records().front().keypoints;
  for (auto _ : state) benchmark::DoNotOptimize(control::sequence_cost(model, w, goal, u, true));
}
BENCHMARK(BM_SequenceCostGradient)->Arg(1)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_Transformer(benchmark::State& state) {
  const auto kind = state.range(0) ? repr::TransformerKind::f2pt : repr::TransformerKind::p2ft;
  std::mt19937_64 rng(2);
  const auto net = repr::make_transformer(kind, 11, rng);
  const nn::Matrix in = nn::Matrix::Constant(1, net.input_dim(), 0.1);
  state.SetLabel(repr::to_string(kind));
  for (auto _ : state) benchmark::DoNotOptimize(repr::transformer_predict(net, in));
}
BENCHMARK(BM_Transformer)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
