// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "dlo/dyn/forward.hpp"
#include "dlo/dyn/model.hpp"
#include "dlo/dyn/predict.hpp"
#include "dlo/error.hpp"
#include "dlo/nn/layers.hpp"
#include "support/dyn_fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace dlo;
using namespace dlo::dyn;
using testing::jitter;
using testing::sim_trajectory;
using testing::small_config;
using testing::window_at;

namespace {

std::size_t dense(const std::vector<int>& dims) {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) n += static_cast<std::size_t>(dims[k] + 1) * dims[k + 1];
  return n;
}

// Count built from the layer list alone: dense layers, GRU gates, encoder blocks.
std::size_t hand_count(const DynConfig& c) {
  const int d = c.latent_dim, m = c.n_keypoints;
  if (c.kind == ModelKind::mlp) {
    std::vector<int> dims{2 * m + 3};
    dims.insert(dims.end(), c.baseline_hidden.begin(), c.baseline_hidden.end());
    dims.push_back(2 * m);
    return dense(dims);
  }
  int f = 8;
  if (c.kind == ModelKind::ea_pe_gat || c.kind == ModelKind::ea_gat) f += 2;
  if (c.kind != ModelKind::ga_net) f += 3;
  auto chain = [&](int in, int out) {
    std::vector<int> v{in};
    for (int i = 0; i < c.mlp_hidden_layers; ++i) v.push_back(d);
    v.push_back(out);
    return dense(v);
  };
  std::size_t n = chain(2 * d, d) + chain(2 * d, 2);
  // per block: two layer norms, q/k/v/o projections, two FFN layers
  n += static_cast<std::size_t>(c.encoder_layers) *
       (4 * d + 4 * (d * d + d) + (d * c.ffn_dim + c.ffn_dim) + (c.ffn_dim * d + d));
  if (c.kind == ModelKind::ea_pe_gat || c.kind == ModelKind::pe_gat) {
    for (int l = 0; l < c.gru_layers; ++l) {
      const int in = l == 0 ? f : d;
      n += 3 * (in * d + d * d + 2 * d);
    }
    n += dense({d + f, d});
  } else {
    n += chain(f, d);
  }
  return n;
}


bool is_ea(ModelKind k) { return k == ModelKind::ea_pe_gat || k == ModelKind::ea_gat; }

}  // namespace

TEST_SUITE("dyn.model") {
  TEST_CASE("kind names round-trip") {
    for (ModelKind k : kAllKinds) CHECK(model_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(model_kind_from_string("gcn"), ConfigError);
  }
  TEST_CASE("parameter counts match the layer-list tally") {
    std::mt19937_64 rng(1);
    std::vector<std::size_t> counts;
    for (ModelKind k : kAllKinds) {
      DynConfig c;
      c.kind = k;
      const DynModel m = make_baseline(k, c, rng);
      CHECK(m.parameter_count() == hand_count(c));
      CHECK(m.parameter_count() == expected_parameter_count(c));
      counts.push_back(m.parameter_count());
      const DynConfig s = small_config(k);
      CHECK(make_model(s, rng).parameter_count() == hand_count(s));
    }
    std::sort(counts.begin(), counts.end());
    CHECK(std::adjacent_find(counts.begin(), counts.end()) == counts.end());
  }
  TEST_CASE("paper-scale widths") {
    const DynConfig c = DynConfig::paper_scale(ModelKind::ea_pe_gat);
    CHECK(c.latent_dim == 128);
    CHECK(c.encoder_layers == 6);
    CHECK(c.ffn_dim == 512);
    CHECK(c.latent_dim % c.heads == 0);
    CHECK_NOTHROW(c.validate());
    std::mt19937_64 rng(2);
    CHECK(make_model(c, rng).parameter_count() == hand_count(c));
  }
  TEST_CASE("invalid configs are rejected") {
    DynConfig c;
    c.heads = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = DynConfig{};
    c.history = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  TEST_CASE("per-step property-extractor input adds the action") {
    CHECK(node_feature_dim(ModelKind::pe_gat) == node_feature_dim(ModelKind::ga_net) + 3);
    CHECK(node_feature_dim(ModelKind::ea_pe_gat) == node_feature_dim(ModelKind::pe_gat) + 2);
  }
}

TEST_SUITE("dyn.action_encoder") {
  const std::vector<double> kStraight{0.0, 0.0, 0.1, 0.0, 0.2, 0.0, 0.3, 0.0, 0.4, 0.0};

  TEST_CASE("identity action leaves every node in place") {
    const auto g = repr::build_graph(kStraight, {}, 0.15);
    const auto e = explicit_action_encode(g, {0.4, 0.0, 0.0}, {}, 0.1);
    for (std::size_t i = 0; i < kStraight.size(); ++i) CHECK(std::abs(e.predicted[i] - kStraight[i]) <= 1e-12);
  }
  TEST_CASE("pure translation shifts the grasped node and its neighbours") {
    const auto g = repr::build_graph(kStraight, {0.05, -0.03, 0.0}, 0.15);
    const auto e = explicit_action_encode(g, {0.4, 0.0, 0.0}, {0.05, -0.03, 0.0}, 0.1);
    for (int n = 0; n < 5; ++n) {
      const bool moves = n >= 3;
      CHECK(std::abs(e.predicted[2 * n] - (kStraight[2 * n] + (moves ? 0.005 : 0.0))) <= 1e-12);
      CHECK(std::abs(e.predicted[2 * n + 1] - (moves ? -0.003 : 0.0)) <= 1e-12);
    }
  }
  TEST_CASE("quarter turn about the end effector") {
    const auto g = repr::build_graph(kStraight, {}, 0.15);
    // dtheta * dt = pi/2: the neighbour at (0.3, 0) swings to (0.4, -0.1)
    const double w = std::numbers::pi / 2 / 0.1;
    const auto e = explicit_action_encode(g, {0.4, 0.0, 0.0}, {0.0, 0.0, w}, 0.1);
    CHECK(std::abs(e.predicted[6] - 0.4) <= 1e-12);
    CHECK(std::abs(e.predicted[7] - (-0.1)) <= 1e-12);
    CHECK(std::abs(e.predicted[8] - 0.4) <= 1e-12);
    CHECK(std::abs(e.predicted[9]) <= 1e-12);
    CHECK(e.predicted[4] == 0.2);
  }
  TEST_CASE("translation equivariance on random rods") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto recs = sim_trajectory(trial % 40, 8);
      const auto& r = recs[trial % 8];
      const sim::Action a{u(rng) * 0.05, u(rng) * 0.05, u(rng) * 0.2};
      const double vx = u(rng), vy = u(rng);
      std::vector<double> shifted = r.keypoints;
      for (std::size_t i = 0; i < shifted.size(); i += 2) {
        shifted[i] += vx;
        shifted[i + 1] += vy;
      }
      const auto e0 = explicit_action_encode(repr::build_graph(r.keypoints, a, 0.15), r.ee, a, 0.1);
      const auto e1 = explicit_action_encode(repr::build_graph(shifted, a, 0.15),
                                             {r.ee.x + vx, r.ee.y + vy, r.ee.theta}, a, 0.1);
      for (std::size_t i = 0; i < shifted.size(); ++i) {
        worst = std::max(worst, std::abs(e1.predicted[i] - (e0.predicted[i] + (i % 2 ? vy : vx))));
      }
    }
    // only rounding of the shifted coordinates themselves
    CHECK(worst <= 1e-13);
  }
  TEST_CASE("translation equivariance is bit-exact on dyadic inputs") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> q(-512, 512);
    auto dy = [&] { return q(rng) / 1024.0; };
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> x(10);
      for (auto& v : x) v = dy();
      const sim::Pose ee{x[8], x[9], 0.0};
      const sim::Action a{dy() / 8, dy() / 8, 0.0};
      const double vx = dy(), vy = dy();
      std::vector<double> xs = x;
      for (std::size_t i = 0; i < xs.size(); i += 2) {
        xs[i] += vx;
        xs[i + 1] += vy;
      }
      // large radius so both graphs have identical edges
      const auto e0 = explicit_action_encode(repr::build_graph(x, a, 4.0), ee, a, 0.125);
      const auto e1 = explicit_action_encode(repr::build_graph(xs, a, 4.0), {ee.x + vx, ee.y + vy, 0.0}, a, 0.125);
      for (std::size_t i = 0; i < xs.size(); ++i) REQUIRE(e1.predicted[i] == e0.predicted[i] + (i % 2 ? vy : vx));
    }
  }
  TEST_CASE("batched tape encoder agrees with the value path") {
    const auto recs = sim_trajectory(5, 12);
    nn::Tape tape(false);
    const HistoryWindow w{{recs[7].keypoints, recs[7].ee, recs[7].action}};
    const auto frames = frames_on_tape(tape, w);
    const DynConfig c;
    const BatchGraph bg = build_batch_graph(frames[0].positions.value(), 1, c.n_keypoints, c.radius);
    const nn::Matrix xhat = action_encode(frames[0], bg, c.dt).value();
    const auto e = explicit_action_encode(repr::build_graph(recs[7].keypoints, recs[7].action, c.radius), recs[7].ee,
                                          recs[7].action, c.dt);
    for (int n = 0; n < c.n_keypoints; ++n) {
      CHECK(xhat(n, 0) == e.predicted[2 * n]);
      CHECK(xhat(n, 1) == e.predicted[2 * n + 1]);
    }
  }
  TEST_CASE("graph without a grasped node is a structural error") {
    auto g = repr::build_graph(kStraight, {}, 0.15);
    g.nodes.back().kind = repr::NodeKind::internal;
    CHECK_THROWS_AS(explicit_action_encode(g, {0.4, 0.0, 0.0}, {}, 0.1), StructuralError);
  }
}

TEST_SUITE("dyn.stages") {
  TEST_CASE("fixed and grasped overrides hold for random weights") {
    std::mt19937_64 rng(5);
    for (ModelKind k : kAllKinds) {
      if (!is_graph_model(k)) continue;
      for (int trial = 0; trial < 10; ++trial) {
        DynModel model = make_model(DynConfig{.kind = k}, rng);
        jitter(model.params, rng, 0.5);
        const auto recs = sim_trajectory(trial, 20);
        const auto w = window_at(recs, 10 + trial % 8, model.config.history);
        const auto& cur = w.back();
        const auto pred = predict_one_step(model, w, cur.action).keypoints;
        CHECK(pred[0] == cur.keypoints[0]);
        CHECK(pred[1] == cur.keypoints[1]);
        if (is_ea(k)) {
          const auto e = explicit_action_encode(repr::build_graph(cur.keypoints, cur.action, model.config.radius),
                                                cur.ee, cur.action, model.config.dt);
          CHECK(pred[20] == e.predicted[20]);
          CHECK(pred[21] == e.predicted[21]);
        }
      }
    }
  }
  TEST_CASE("zero decoder keeps internal nodes in place") {
    std::mt19937_64 rng(6);
    DynModel model = make_model(DynConfig{.kind = ModelKind::ga_net}, rng);
    for (const auto& [name, t] : model.params.entries()) {
      if (name.rfind("fd.", 0) == 0)
        for (auto& v : model.params.mutable_at(name).mutable_data()) v = 0.0;
    }
    const auto recs = sim_trajectory(2, 20);
    const auto w = window_at(recs, 12, 1);
    const auto pred = predict_one_step(model, w, w.back().action).keypoints;
    CHECK(pred == w.back().keypoints);
  }
  TEST_CASE("local interaction is ordered and one latent per directed edge") {
    std::mt19937_64 rng(7);
    DynModel model = make_model(DynConfig{.kind = ModelKind::ea_gat}, rng);
    jitter(model.params, rng, 0.3);
    const auto recs = sim_trajectory(3, 20);
    const LatentGraph lg = property_extract(model, window_at(recs, 15, 1));
    const nn::Matrix e = local_interact(model, lg);
    CHECK(e.rows() == static_cast<Eigen::Index>(lg.graph.edges.size()));
    CHECK(e.cols() == model.config.latent_dim);
    // edges (0,1) and (1,0) are the first two token rows of nodes 0 and 1
    const auto& segs = lg.graph.segments;
    const nn::Matrix e01 = e.row(segs[0].offset);
    const nn::Matrix e10 = e.row(segs[1].offset);
    CHECK((e01 - e10).cwiseAbs().maxCoeff() > 1e-6);
    // zero weights: every edge latent equals the last bias
    for (const auto& [name, t] : model.params.entries()) {
      if (name.rfind("fl.", 0) == 0 && name.find("weight") != std::string::npos)
        for (auto& v : model.params.mutable_at(name).mutable_data()) v = 0.0;
    }
    const nn::Matrix z = local_interact(model, lg);
    for (Eigen::Index r = 1; r < z.rows(); ++r) CHECK((z.row(r) - z.row(0)).cwiseAbs().maxCoeff() == 0.0);
  }
  TEST_CASE("global interaction ignores token order and duplicates") {
    std::mt19937_64 rng(8);
    DynModel model = make_model(DynConfig{.kind = ModelKind::ga_net}, rng);
    jitter(model.params, rng, 0.3);
    std::normal_distribution<double> g(0.0, 1.0);
    const int d = model.config.latent_dim;
    nn::Matrix tok(4, d);
    for (auto& v : tok.reshaped()) v = g(rng);
    auto run = [&](const nn::Matrix& tokens, std::vector<nn::Segment> segs) {
      nn::Tape t(false);
      nn::BoundParams p(t, model.params, false);
      BatchGraph bg;
      bg.batch = 1;
      bg.m = static_cast<int>(segs.size());
      bg.segments = std::move(segs);
      bg.edges.resize(tokens.rows());
      return global_interact(p, model, t.constant(tokens), bg).value();
    };
    nn::Matrix perm(4, d);
    perm.row(0) = tok.row(2);
    perm.row(1) = tok.row(0);
    perm.row(2) = tok.row(1);
    perm.row(3) = tok.row(3);
    const nn::Matrix a = run(tok, {{0, 3}, {3, 1}});
    const nn::Matrix b = run(perm, {{0, 3}, {3, 1}});
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-14);
    // {a} vs {a, a}
    nn::Matrix one = tok.topRows(1);
    nn::Matrix two(2, d);
    two.row(0) = tok.row(0);
    two.row(1) = tok.row(0);
    const nn::Matrix s1 = run(one, {{0, 1}});
    const nn::Matrix s2 = run(two, {{0, 2}});
    CHECK((s1 - s2).cwiseAbs().maxCoeff() <= 1e-14);
    // single token: pooling is the encoder output of that token
    const nn::Matrix single = run(tok.row(3), {{0, 1}});
    CHECK((single.row(0) - a.row(1)).cwiseAbs().maxCoeff() <= 1e-14);
  }
  TEST_CASE("isolated nodes get a zero global interaction") {
    std::mt19937_64 rng(9);
    DynConfig c{.kind = ModelKind::ga_net};
    c.radius = 0.05;  // below the segment length: no edges at all
    DynModel model = make_model(c, rng);
    const auto recs = sim_trajectory(4, 10);
    const LatentGraph lg = property_extract(model, window_at(recs, 5, 1));
    std::vector<int> isolated;
    const nn::Matrix gi = global_interact(model, lg, local_interact(model, lg), &isolated);
    CHECK(isolated.size() == 11);
    CHECK(gi.cwiseAbs().maxCoeff() == 0.0);
    const Prediction p = predict_one_step(model, window_at(recs, 5, 1), recs[5].action);
    CHECK(p.isolated_nodes == 11);
    CHECK_FALSE(p.warnings.empty());
  }
  TEST_CASE("staged evaluation equals the fused forward") {
    std::mt19937_64 rng(10);
    for (ModelKind k : kAllKinds) {
      if (!is_graph_model(k)) continue;
      DynModel model = make_model(DynConfig{.kind = k}, rng);
      jitter(model.params, rng, 0.2);
      const auto recs = sim_trajectory(6, 20);
      const auto w = window_at(recs, 14, model.config.history);
      const LatentGraph lg = property_extract(model, w);
      const auto staged = decode(model, lg, global_interact(model, lg, local_interact(model, lg)), w.back().keypoints);
      CHECK(staged == predict_one_step(model, w, w.back().action).keypoints);
    }
  }
}

TEST_SUITE("dyn.property_extractor") {
  TEST_CASE("static straight history gives equal latents when position inputs are masked") {
    std::mt19937_64 rng(11);
    DynModel model = make_model(DynConfig{.kind = ModelKind::ea_pe_gat}, rng);
    jitter(model.params, rng, 0.2);
    // drop the absolute-position columns (first 2 rows of the input weights)
    const int d = model.config.latent_dim;
    for (const char* name : {"pe.gru.l0.w_ih", "pe.proj.layer0.weight"}) {
      auto& t = model.params.mutable_at(name);
      const std::size_t cols = t.shape()[1];
      const std::size_t first = std::string(name) == "pe.proj.layer0.weight" ? d : 0;
      for (std::size_t r = first; r < first + 2; ++r)
        for (std::size_t c = 0; c < cols; ++c) t.mutable_data()[r * cols + c] = 0.0;
    }
    const sim::RodConfig rc;
    const sim::RodState rest = sim::rest_state(rc);
    const Frame f{sim::keypoints(rc, rest), rest.ee, {}};
    const LatentGraph lg = property_extract(model, HistoryWindow(5, f));
    // node 9 sees x_hat - x at rounding level only (rigid motion by zero is not bit-exact)
    for (int n = 2; n < 10; ++n) CHECK((lg.latents.row(n) - lg.latents.row(1)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((lg.latents.row(0) - lg.latents.row(1)).cwiseAbs().maxCoeff() > 0.0);
  }
  TEST_CASE("moving and static histories ending at the same state differ") {
    std::mt19937_64 rng(12);
    DynModel model = make_model(DynConfig{.kind = ModelKind::pe_gat}, rng);
    jitter(model.params, rng, 0.2);
    const auto recs = sim_trajectory(7, 20);
    const auto moving = window_at(recs, 12, 5);
    const HistoryWindow still(5, {recs[12].keypoints, recs[12].ee, {}});
    HistoryWindow moving_last = moving;
    moving_last.back().action = {};
    const auto a = property_extract(model, moving_last).latents;
    const auto b = property_extract(model, still).latents;
    CHECK((a - b).cwiseAbs().maxCoeff() > 1e-6);
  }
  TEST_CASE("H = 1 reads only the current frame") {
    std::mt19937_64 rng(13);
    DynConfig c{.kind = ModelKind::ea_pe_gat};
    c.history = 1;
    DynModel model = make_model(c, rng);
    jitter(model.params, rng, 0.2);
    const auto recs = sim_trajectory(8, 20);
    const auto long_w = window_at(recs, 12, 4);
    const HistoryWindow short_w{long_w.back()};
    CHECK(predict_one_step(model, long_w, recs[12].action).keypoints ==
          predict_one_step(model, short_w, recs[12].action).keypoints);
    // a single GRU step from zero state: latent of the fused pass
    nn::Tape t(false);
    nn::BoundParams p(t, model.params, false);
    const auto frames = frames_on_tape(t, short_w);
    const WindowEncoding enc = encode_window(p, model, frames, 1);
    const nn::Var feat = node_features(model, frames[0], enc.xhat);
    const int f = node_feature_dim(c.kind), d = c.latent_dim;
    std::vector<nn::Var> h0{t.constant(nn::Matrix::Zero(11, d)), t.constant(nn::Matrix::Zero(11, d))};
    const auto cell = nn::gru_forward(p, "pe.gru", {f, d, 2}, std::vector<nn::Var>{feat}, h0);
    const std::array<nn::Var, 2> joined{cell.outputs.back(), feat};
    const nn::Matrix lat = nn::mlp_forward(p, "pe.proj", std::vector<int>{d + f, d}, nn::concat_cols(joined), nn::Activation::relu).value();
    CHECK((lat - enc.latent.value()).cwiseAbs().maxCoeff() == 0.0);
  }
  TEST_CASE("short history is padded with the oldest state at zero action") {
    const auto recs = sim_trajectory(9, 10);
    const HistoryWindow w{{recs[0].keypoints, recs[0].ee, recs[0].action}, {recs[1].keypoints, recs[1].ee, recs[1].action}};
    bool padded = false;
    const auto p = pad_history(w, 5, &padded);
    CHECK(padded);
    REQUIRE(p.size() == 5);
    for (int k = 0; k < 3; ++k) {
      CHECK(p[k].keypoints == recs[0].keypoints);
      CHECK(p[k].action == sim::Action{});
    }
    CHECK(p[3] == w[0]);
    CHECK(p[4] == w[1]);
    std::mt19937_64 rng(14);
    const DynModel model = make_model(DynConfig{.kind = ModelKind::pe_gat}, rng);
    CHECK(predict_one_step(model, w, recs[1].action).padded);
  }
}

TEST_SUITE("dyn.prediction") {
  TEST_CASE("rollout of one action equals one step and lengths match") {
    std::mt19937_64 rng(15);
    for (ModelKind k : kAllKinds) {
      DynModel model = make_model(DynConfig{.kind = k}, rng);
      jitter(model.params, rng, 0.1);
      const auto recs = sim_trajectory(10, 30);
      const auto w = window_at(recs, 10, 5);
      const std::vector<sim::Action> one{recs[10].action};
      CHECK(rollout(model, w, one).front() == predict_one_step(model, w, recs[10].action).keypoints);
      std::vector<sim::Action> many;
      for (int t = 10; t < 17; ++t) many.push_back(recs[t].action);
      const auto out = rollout(model, w, many);
      CHECK(out.size() == many.size());
      for (const auto& x : out) CHECK(x.size() == 22);
    }
  }
  TEST_CASE("batched forward equals single-sample predictions") {
    std::mt19937_64 rng(16);
    for (ModelKind k : kAllKinds) {
      DynModel model = make_model(DynConfig{.kind = k}, rng);
      jitter(model.params, rng, 0.1);
      const auto recs = sim_trajectory(11, 30);
      std::vector<HistoryWindow> ws{window_at(recs, 6, 5), window_at(recs, 19, 5), window_at(recs, 25, 5)};
      nn::Tape t(false);
      nn::BoundParams p(t, model.params, false);
      const nn::Matrix y = forward_step(p, model, testing::stack_windows(t, ws), 3).value();
      for (int s = 0; s < 3; ++s) {
        const auto single = predict_one_step(model, ws[s], ws[s].back().action).keypoints;
        for (int n = 0; n < 11; ++n) {
          CHECK(std::abs(y(s * 11 + n, 0) - single[2 * n]) <= 1e-14);
          CHECK(std::abs(y(s * 11 + n, 1) - single[2 * n + 1]) <= 1e-14);
        }
      }
    }
  }
  TEST_CASE("EA-GAT at zero action keeps the grasped node") {
    std::mt19937_64 rng(17);
    DynModel model = make_model(DynConfig{.kind = ModelKind::ea_gat}, rng);
    jitter(model.params, rng, 0.5);
    const auto recs = sim_trajectory(12, 20);
    const auto w = window_at(recs, 9, 1);
    const auto pred = predict_one_step(model, w, {}).keypoints;
    CHECK(std::abs(pred[20] - w.back().keypoints[20]) <= 1e-15);
    CHECK(std::abs(pred[21] - w.back().keypoints[21]) <= 1e-15);
  }
  TEST_CASE("wrong history shape is rejected") {
    std::mt19937_64 rng(18);
    const DynModel model = make_model(DynConfig{}, rng);
    CHECK_THROWS_AS(predict_one_step(model, {}, {}), PreconditionError);
    CHECK_THROWS_AS(predict_one_step(model, {Frame{{0.0, 1.0}, {}, {}}}, {}), ShapeError);
    const auto recs = sim_trajectory(13, 10);
    CHECK_THROWS_AS(rollout(model, window_at(recs, 3, 5), {}), PreconditionError);
  }
}

TEST_SUITE("dyn.checkpoint") {
  TEST_CASE("save and load reproduce bit-identical predictions") {
    std::mt19937_64 rng(19);
    const auto recs = sim_trajectory(14, 30);
    const auto w = window_at(recs, 20, 5);
    std::vector<sim::Action> acts;
    for (int t = 20; t < 25; ++t) acts.push_back(recs[t].action);
    for (ModelKind k : kAllKinds) {
      DynModel model = make_model(DynConfig{.kind = k}, rng);
      jitter(model.params, rng, 0.1);
      const auto path = std::filesystem::temp_directory_path() / ("dlo_test_" + to_string(k) + ".ckpt");
      save_model(path, model);
      const DynModel back = load_model(path);
      std::filesystem::remove(path);
      CHECK(back.config.hash() == model.config.hash());
      CHECK(back.params.entries() == model.params.entries());
      CHECK(rollout(back, w, acts) == rollout(model, w, acts));
      CHECK(to_checkpoint(model).kind == "dyn/" + to_string(k));
    }
  }
  TEST_CASE("kind and hash mismatches are rejected") {
    std::mt19937_64 rng(20);
    const DynModel model = make_model(DynConfig{.kind = ModelKind::ea_gat}, rng);
    const nn::ParameterStore s = to_checkpoint(model);
    CHECK_NOTHROW(from_checkpoint(s, ModelKind::ea_gat));
    CHECK_THROWS_AS(from_checkpoint(s, ModelKind::mlp), ConfigError);
    nn::ParameterStore bad = s;
    bad.config_hash ^= 1;
    CHECK_THROWS(from_checkpoint(bad));
    nn::ParameterStore foreign = s;
    foreign.kind = "p2ft";
    CHECK_THROWS_AS(from_checkpoint(foreign), ConfigError);
  }
}

TEST_SUITE("dyn.gradients") {
  TEST_CASE("parameter gradients of every kind agree with central differences") {
    std::mt19937_64 rng(21);
    int skipped = 0, checked = 0;
    for (ModelKind k : kAllKinds) {
      double worst = 0.0;
      for (int draw = 0; draw < 4; ++draw) {
        const auto r = testing::dyn_parameter_gradcheck(k, rng);
        worst = std::max(worst, r.max_rel_error);
        skipped += r.skipped;
        checked += r.checked;
        CHECK_MESSAGE(r.max_rel_error < 1e-4, to_string(k) << ": " << r.worst);
      }
      MESSAGE(to_string(k) << " worst relative error " << worst);
    }
    MESSAGE("stencils across a kink: " << skipped << " of " << skipped + checked);
    CHECK(skipped * 10 < checked);
  }
  TEST_CASE("rollout gradients w.r.t. actions agree with central differences") {
    std::mt19937_64 rng(22);
    int skipped = 0, checked = 0;
    for (ModelKind k : kAllKinds) {
      for (int draw = 0; draw < 3; ++draw) {
        const auto r = testing::dyn_action_gradcheck(k, rng);
        skipped += r.skipped;
        checked += r.checked;
        CHECK_MESSAGE(r.max_rel_error < 1e-3, to_string(k) << ": " << r.worst);
      }
    }
    MESSAGE("stencils across a kink: " << skipped << " of " << skipped + checked);
    CHECK(skipped * 10 < checked);
  }
}
