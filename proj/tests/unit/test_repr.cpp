// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "dlo/error.hpp"
#include "dlo/nn/ops.hpp"
#include "dlo/repr/graph.hpp"
#include "dlo/repr/normalizer.hpp"
#include "dlo/repr/transformers.hpp"
#include "support/gradcheck.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace dlo;
using namespace dlo::repr;

namespace {

// Random planar chain of m points with unit total length; `bend` scales the turning angles.
std::vector<double> random_chain(std::mt19937_64& rng, int m, double bend) {
  std::normal_distribution<double> turn(0.0, bend);
  std::vector<double> x(2 * m, 0.0);
  const double seg = 1.0 / (m - 1);
  double th = 0.0;
  for (int i = 1; i < m; ++i) {
    th += turn(rng);
    x[2 * i] = x[2 * i - 2] + seg * std::cos(th);
    x[2 * i + 1] = x[2 * i - 1] + seg * std::sin(th);
  }
  return x;
}

std::vector<Edge> brute_force_edges(const std::vector<double>& x, double r) {
  const int m = static_cast<int>(x.size() / 2);
  std::vector<Edge> e;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const double dx = x[2 * i] - x[2 * j], dy = x[2 * i + 1] - x[2 * j + 1];
      if (dx * dx + dy * dy < r * r) e.push_back({i, j});
    }
  }
  return e;
}

}  // namespace

TEST_SUITE("repr.graph") {
  TEST_CASE("radius rule matches the pairwise brute force") {
    std::mt19937_64 rng(3);
    int mismatched = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int m = 3 + trial % 15;
      const auto x = random_chain(rng, m, 0.1 + 0.6 * (trial % 5));
      const double r = default_radius(1.0, m) * (0.6 + 0.2 * (trial % 7));
      const GraphState g = build_graph(x, {}, r);
      // exact equality up to borderline pairs at |d| == r, which random draws never hit
      if (g.edges != brute_force_edges(x, r)) ++mismatched;
      CHECK(g.size() == m);
    }
    CHECK(mismatched == 0);
  }
  TEST_CASE("folded hairpin links the two arms") {
    // straight out 5 segments, back along a parallel line 0.05 below
    const int m = 11;
    std::vector<double> x;
    for (int i = 0; i <= 5; ++i) x.insert(x.end(), {0.1 * i, 0.0});
    for (int i = 4; i >= 0; --i) x.insert(x.end(), {0.1 * i + 0.05, -0.05});
    const GraphState g = build_graph(x, {}, default_radius(1.0, m));
    CHECK(g.edges == brute_force_edges(x, g.radius));
    bool cross = false;
    for (const auto& e : g.edges) cross |= std::abs(e.receiver - e.sender) > 2;
    CHECK(cross);
    CHECK(g.connected());
  }
  TEST_CASE("one-hot attributes and node kinds") {
    std::mt19937_64 rng(4);
    const auto x = random_chain(rng, 11, 0.3);
    const GraphState g = build_graph(x, {0.01, -0.02, 0.1}, 0.15);
    for (int i = 0; i < g.size(); ++i) {
      const auto f = g.nodes[i].features();
      CHECK(f[5] + f[6] + f[7] == 1.0);
      CHECK(f[0] == x[2 * i]);
      CHECK(f[1] == x[2 * i + 1]);
    }
    CHECK(g.nodes.front().kind == NodeKind::fixed);
    CHECK(g.nodes.back().kind == NodeKind::grasped);
    CHECK(g.nodes[5].kind == NodeKind::internal);
    // only the grasped node carries the action
    CHECK(g.nodes.back().features()[2] == 0.01);
    CHECK(g.nodes[5].features()[2] == 0.0);
  }
  TEST_CASE("consecutive keypoints always linked above the segment length") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      const int m = 4 + trial % 12;
      const auto x = random_chain(rng, m, 1.0);
      const GraphState g = build_graph(x, {}, 1.0001 / (m - 1));
      for (int i = 0; i + 1 < m; ++i) {
        CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{i, i + 1}) != g.edges.end());
        CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{i + 1, i}) != g.edges.end());
      }
      CHECK(g.connected());
      CHECK(g.warnings.empty());
    }
  }
  TEST_CASE("edges sorted by receiver and symmetric") {
    std::mt19937_64 rng(6);
    const auto x = random_chain(rng, 11, 0.8);
    const GraphState g = build_graph(x, {}, 0.25);
    for (std::size_t k = 1; k < g.edges.size(); ++k) {
      const auto& a = g.edges[k - 1];
      const auto& b = g.edges[k];
      CHECK((a.receiver < b.receiver || (a.receiver == b.receiver && a.sender < b.sender)));
    }
    for (const auto& e : g.edges) {
      CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{e.sender, e.receiver}) != g.edges.end());
    }
    const auto deg = g.in_degree();
    std::size_t total = 0;
    for (int d : deg) total += d;
    CHECK(total == g.edges.size());
  }
  TEST_CASE("small radius flags a disconnected graph") {
    std::vector<double> x;
    for (int i = 0; i < 5; ++i) x.insert(x.end(), {0.25 * i, 0.0});
    const GraphState g = build_graph(x, {}, 0.1);
    CHECK(g.edges.empty());
    CHECK_FALSE(g.connected());
    REQUIRE(g.warnings.size() == 1);
    CHECK(g.warnings[0].find("disconnected") != std::string::npos);
  }
  TEST_CASE("invalid inputs") {
    const std::vector<double> one{0.0, 0.0};
    CHECK_THROWS_AS(build_graph(one, {}, 0.1), PreconditionError);
    const std::vector<double> two{0.0, 0.0, 1.0, 0.0};
    CHECK_THROWS_AS(build_graph(two, {}, 0.0), PreconditionError);
    CHECK(default_radius(1.0, 11) == doctest::Approx(0.15).epsilon(1e-15));
  }
}

TEST_SUITE("repr.normalizer") {
  TEST_CASE("constant column is floored and maps to zero") {
    nn::Matrix d(3, 2);
    d << 1.0, 5.0, 2.0, 5.0, 3.0, 5.0;
    const Normalizer n = Normalizer::fit(d);
    CHECK(n.std[1] == Normalizer::kStdFloor);
    const nn::Matrix z = n.apply(d);
    for (int r = 0; r < 3; ++r) CHECK(z(r, 1) == 0.0);
  }
  TEST_CASE("standardised training data has zero mean and unit spread") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(3.0, 7.0);
    nn::Matrix d(500, 4);
    for (int r = 0; r < 500; ++r)
      for (int c = 0; c < 4; ++c) d(r, c) = g(rng) * (c + 1);
    const nn::Matrix z = Normalizer::fit(d).apply(d);
    for (int c = 0; c < 4; ++c) {
      const double mean = z.col(c).mean();
      const double var = (z.col(c).array() - mean).square().mean();
      CHECK(std::abs(mean) < 1e-12);
      CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-2);
    }
  }
  TEST_CASE("invert undoes apply and constants round-trip through a store") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    nn::Matrix d(20, 3);
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 3; ++c) d(r, c) = u(rng);
    const Normalizer n = Normalizer::fit(d);
    CHECK((n.invert(n.apply(d)) - d).cwiseAbs().maxCoeff() < 1e-14);
    nn::ParameterStore s;
    n.store(s, "norm.x");
    CHECK(Normalizer::load(s, "norm.x") == n);
    // vector overload agrees with the matrix path
    const std::vector<double> row{d(4, 0), d(4, 1), d(4, 2)};
    const auto zr = n.apply(row);
    const nn::Matrix zm = n.apply(d);
    for (int c = 0; c < 3; ++c) CHECK(zr[c] == zm(4, c));
  }
  TEST_CASE("empty data is rejected") {
    CHECK_THROWS_AS(Normalizer::fit(nn::Matrix(0, 3)), PreconditionError);
  }
}

TEST_SUITE("repr.transformers") {
  TEST_CASE("default layer widths") {
    CHECK(default_transformer_dims(TransformerKind::p2ft, 11) == std::vector<int>{22, 64, 128, 128, 64, 16, 3});
    CHECK(default_transformer_dims(TransformerKind::f2pt, 11) == std::vector<int>{3, 16, 64, 128, 128, 64, 22});
    CHECK(transformer_kind_from_string(to_string(TransformerKind::f2pt)) == TransformerKind::f2pt);
    CHECK_THROWS_AS(transformer_kind_from_string("vit"), ConfigError);
  }
  TEST_CASE("forward is a pure function of parameters and input") {
    std::mt19937_64 rng(10);
    const ForceTransformer p2ft = make_transformer(TransformerKind::p2ft, 11, rng);
    const auto x = random_chain(rng, 11, 0.3);
    const auto a = p2ft_forward(p2ft, x);
    const auto b = p2ft_forward(p2ft, x);
    CHECK(a.wrench.fx == b.wrench.fx);
    CHECK(a.wrench.fy == b.wrench.fy);
    CHECK(a.wrench.mz == b.wrench.mz);
    const ForceTransformer f2pt = make_transformer(TransformerKind::f2pt, 11, rng);
    CHECK(f2pt_forward(f2pt, {0.1, 0.2, 0.3}).keypoints == f2pt_forward(f2pt, {0.1, 0.2, 0.3}).keypoints);
    CHECK(f2pt_forward(f2pt, {}).keypoints.size() == 22);
    CHECK_THROWS_AS(p2ft_forward(f2pt, x), ConfigError);
    CHECK_THROWS_AS(f2pt_forward(p2ft, {}), ConfigError);
  }
  TEST_CASE("normalisation is applied around the network") {
    std::mt19937_64 rng(11);
    ForceTransformer net = make_transformer(TransformerKind::f2pt, 4, rng);
    // zero the net so the standardised output is exactly zero
    for (const auto& [name, t] : net.params.entries()) {
      auto& w = net.params.mutable_at(name);
      for (auto& v : w.mutable_data()) v = 0.0;
    }
    Normalizer in{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
    Normalizer out{{1, 2, 3, 4, 5, 6, 7, 8}, {2, 2, 2, 2, 2, 2, 2, 2}};
    set_normalization(net, in, out);
    const auto s = f2pt_forward(net, {0.3, -0.1, 0.2});
    CHECK(s.keypoints == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK_FALSE(s.out_of_range);
    CHECK(f2pt_forward(net, {11.0, 0.0, 0.0}).out_of_range);
  }
  TEST_CASE("checkpoint round trip gives bit-identical predictions") {
    std::mt19937_64 rng(12);
    ForceTransformer net = make_transformer(TransformerKind::p2ft, 11, rng);
    nn::Matrix data(30, 22);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int r = 0; r < 30; ++r)
      for (int c = 0; c < 22; ++c) data(r, c) = g(rng);
    nn::Matrix w(30, 3);
    for (int r = 0; r < 30; ++r)
      for (int c = 0; c < 3; ++c) w(r, c) = g(rng) * 0.1;
    set_normalization(net, Normalizer::fit(data), Normalizer::fit(w));
    const auto path = std::filesystem::temp_directory_path() / "dlo_test_p2ft.ckpt";
    save_transformer(path, net);
    const ForceTransformer back = load_transformer(path);
    std::filesystem::remove(path);
    CHECK(back.kind == net.kind);
    CHECK(back.dims == net.dims);
    CHECK(back.in_norm == net.in_norm);
    const nn::Matrix a = transformer_predict(net, data);
    const nn::Matrix b = transformer_predict(back, data);
    CHECK((a.array() == b.array()).all());
  }
  TEST_CASE("checkpoint of another kind is rejected") {
    nn::ParameterStore s;
    s.kind = "dyn/mlp";
    CHECK_THROWS_AS(from_checkpoint(s), ConfigError);
  }
  TEST_CASE("both transformers' gradients agree with central differences") {
    std::mt19937_64 rng(13);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      const auto kind = draw % 2 ? TransformerKind::p2ft : TransformerKind::f2pt;
      const ForceTransformer net = make_transformer(kind, 6, rng, draw % 4 < 2 ? nn::Activation::relu
                                                                             : nn::Activation::tanh);
      std::normal_distribution<double> g(0.0, 1.0);
      nn::Matrix in(4, net.input_dim());
      nn::Matrix tgt(4, net.output_dim());
      for (auto& v : in.reshaped()) v = g(rng);
      for (auto& v : tgt.reshaped()) v = g(rng);
      auto build = [&](nn::Tape& t, const nn::BoundParams& b) {
        nn::Var y = transformer_forward(b, net, t.constant(in));
        return nn::mse(y, tgt);
      };
      auto loss = [&](const nn::ParameterStore& ps) {
        nn::Tape t(false);
        nn::BoundParams b(t, ps, false);
        return build(t, b).value()(0, 0);
      };
      nn::Tape t;
      nn::BoundParams b(t, net.params, true);
      const auto grads = nn::backward(t, build(t, b));
      const auto r = testing::check_parameter_gradients(net.params, grads, loss, 1e-5, 4, rng);
      worst = std::max(worst, r.max_rel_error);
      CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst);
    }
    MESSAGE("worst relative error " << worst);
  }
}
