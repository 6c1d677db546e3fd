// SPDX-License-Identifier: Apache-2.0
#include "dlo/app/suite.hpp"

#include "dlo/error.hpp"
#include "dlo/sim/dataset.hpp"
#include "dlo/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace dlo::app {

using nlohmann::json;

namespace {

// keeps suite shapes off the dataset's per-trajectory seeds
constexpr std::uint64_t kSuiteSeedOffset = 1'000'000;

json state_json(const sim::RodState& s) {
  return json{{"angles", s.angles}, {"ee", json::array({s.ee.x, s.ee.y, s.ee.theta})}};
}

sim::RodState state_from(const json& j) {
  sim::RodState s;
  s.angles = j.at("angles").get<std::vector<double>>();
  const auto ee = j.at("ee").get<std::vector<double>>();
  if (ee.size() != 3) throw IoError("suite state pose must have three entries");
  s.ee = {ee[0], ee[1], ee[2]};
  return s;
}

}  // namespace

std::string to_string(DeformationClass c) { return c == DeformationClass::large ? "large" : "small"; }

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw PreconditionError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

BenchmarkSuite generate_suite(const RunConfig& config) {
  config.validate();
  const auto& sc = config.suite;
  sim::CollectConfig cc;
  cc.n_traj = 1;
  cc.steps_per_traj = sc.settle_steps;
  cc.dt = config.collect.dt;
  cc.seed = config.seed + kSuiteSeedOffset;

  std::vector<sim::RodState> states;
  std::vector<sim::Wrench> wrenches;
  const int max_attempts = 4 * sc.pool;
  for (int id = 0; static_cast<int>(states.size()) < sc.pool; ++id) {
    if (id >= max_attempts) throw PreconditionError("suite sampling gave up after " + std::to_string(id) + " attempts");
    sim::RodState s;
    try {
      sim::collect_trajectory(config.rod, cc, id, &s);
    } catch (const SolverError&) {
      continue;
    }
    wrenches.push_back(sim::base_wrench(config.rod, s));
    states.push_back(std::move(s));
  }

  // per-component spread of the pool
  std::array<double, 3> mean{}, sd{};
  for (const auto& w : wrenches) {
    const auto a = w.as_array();
    for (int k = 0; k < 3; ++k) mean[k] += a[k] / sc.pool;
  }
  for (const auto& w : wrenches) {
    const auto a = w.as_array();
    for (int k = 0; k < 3; ++k) sd[k] += (a[k] - mean[k]) * (a[k] - mean[k]) / sc.pool;
  }
  for (auto& v : sd) v = std::max(std::sqrt(v), 1e-12);

  struct Pair {
    int i, j;
    double d;
  };
  std::vector<Pair> pairs;
  std::vector<double> dist;
  for (int i = 0; i < sc.pool; ++i) {
    for (int j = 0; j < sc.pool; ++j) {
      if (i == j) continue;
      const auto a = wrenches[i].as_array(), b = wrenches[j].as_array();
      double d2 = 0.0;
      for (int k = 0; k < 3; ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]) / (sd[k] * sd[k]);
      pairs.push_back({i, j, std::sqrt(d2)});
      dist.push_back(pairs.back().d);
    }
  }

  BenchmarkSuite suite;
  suite.seed = config.seed;
  suite.rod_hash = config.rod.hash();
  suite.small_cutoff = quantile(dist, sc.small_quantile);
  suite.large_cutoff = quantile(dist, sc.large_quantile);
  std::vector<Pair> large, small;
  for (const auto& p : pairs) {
    if (p.d > suite.large_cutoff) large.push_back(p);
    if (p.d < suite.small_cutoff) small.push_back(p);
  }
  if (static_cast<int>(large.size()) < sc.large || static_cast<int>(small.size()) < sc.small) {
    throw PreconditionError("not enough candidate pairs for the requested suite");
  }
  std::mt19937_64 rng(config.seed + kSuiteSeedOffset);
  std::shuffle(large.begin(), large.end(), rng);
  std::shuffle(small.begin(), small.end(), rng);
  auto add = [&](const Pair& p, DeformationClass label) {
    BenchmarkTask t;
    t.id = static_cast<int>(suite.tasks.size());
    t.label = label;
    t.wrench_distance = p.d;
    t.initial = states[p.i];
    t.target = states[p.j];
    t.target_keypoints = sim::keypoints(config.rod, t.target);
    suite.tasks.push_back(std::move(t));
  };
  for (int k = 0; k < sc.large; ++k) add(large[k], DeformationClass::large);
  for (int k = 0; k < sc.small; ++k) add(small[k], DeformationClass::small);
  return suite;
}

void save_suite(const std::filesystem::path& path, const BenchmarkSuite& suite) {
  json tasks = json::array();
  for (const auto& t : suite.tasks) {
    tasks.push_back({{"id", t.id},
                     {"label", to_string(t.label)},
                     {"wrench_distance", t.wrench_distance},
                     {"initial", state_json(t.initial)},
                     {"target", state_json(t.target)},
                     {"target_keypoints", t.target_keypoints}});
  }
  const json j{{"format", "dlo-suite v1"},
               {"seed", suite.seed},
               {"rod_hash", hex64(suite.rod_hash)},
               {"small_cutoff", suite.small_cutoff},
               {"large_cutoff", suite.large_cutoff},
               {"tasks", tasks}};
  write_file_atomic(path, j.dump(1) + "\n");
}

BenchmarkSuite load_suite(const std::filesystem::path& path) {
  BenchmarkSuite s;
  try {
    const json j = json::parse(read_file(path));
    if (j.at("format").get<std::string>() != "dlo-suite v1") throw IoError("unsupported suite format");
    s.seed = j.at("seed").get<std::uint64_t>();
    s.rod_hash = std::stoull(j.at("rod_hash").get<std::string>(), nullptr, 16);
    s.small_cutoff = j.at("small_cutoff").get<double>();
    s.large_cutoff = j.at("large_cutoff").get<double>();
    for (const auto& t : j.at("tasks")) {
      BenchmarkTask task;
      task.id = t.at("id").get<int>();
      const std::string label = t.at("label").get<std::string>();
      if (label != "large" && label != "small") throw IoError("unknown task label '" + label + "'");
      task.label = label == "large" ? DeformationClass::large : DeformationClass::small;
      task.wrench_distance = t.at("wrench_distance").get<double>();
      task.initial = state_from(t.at("initial"));
      task.target = state_from(t.at("target"));
      task.target_keypoints = t.at("target_keypoints").get<std::vector<double>>();
      s.tasks.push_back(std::move(task));
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed suite: " + e.what());
  } catch (const std::invalid_argument&) {
    throw IoError(path.string() + ": malformed rod hash");
  }
  return s;
}

}  // namespace dlo::app
