// SPDX-License-Identifier: Apache-2.0
#include "dlo/app/config.hpp"

#include "dlo/error.hpp"
#include "dlo/util.hpp"

#include <charconv>
#include <functional>
#include <sstream>

namespace dlo::app {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("config key '" + key + "': " + what + " (got '" + value + "')");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "expected a number");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "expected an integer");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream s(v);
  std::string item;
  while (std::getline(s, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class F>
Entry int_entry(std::string key, F field) {
  return {key,
          [field](RunConfig& c, const std::string& k, const std::string& v) {
            const long long x = to_int(k, v);
            if (x < -2147483647LL || x > 2147483647LL) bad(k, v, "out of range");
            field(c) = static_cast<int>(x);
          },
          [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
Entry double_entry(std::string key, F field) {
  return {key, [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = to_double(k, v); },
          [field](const RunConfig& c) { return format_double(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
Entry string_entry(std::string key, F field) {
  return {key,
          [field](RunConfig& c, const std::string& k, const std::string& v) {
            if (v.empty()) bad(k, v, "expected a non-empty value");
            field(c) = v;
          },
          [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); }};
}

#define DLO_INT(key, expr) int_entry(key, [](RunConfig& c) -> int& { return expr; })
#define DLO_DOUBLE(key, expr) double_entry(key, [](RunConfig& c) -> double& { return expr; })
#define DLO_STRING(key, expr) string_entry(key, [](RunConfig& c) -> std::string& { return expr; })

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back({"seed",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   const long long s = to_int(k, v);
                   if (s < 0) bad(k, v, "expected a non-negative integer");
                   c.set_seed(static_cast<std::uint64_t>(s));
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    e.push_back(DLO_INT("sim.n_segments", c.rod.n_segments));
    e.push_back(DLO_DOUBLE("sim.total_length", c.rod.total_length));
    e.push_back(DLO_DOUBLE("sim.bend_stiffness", c.rod.bend_stiffness));
    e.push_back(DLO_DOUBLE("sim.clamp_penalty", c.rod.clamp_penalty));
    e.push_back(DLO_INT("sim.n_keypoints", c.rod.n_keypoints));
    e.push_back(DLO_DOUBLE("sim.solver_tol", c.rod.solver_tol));
    e.push_back(DLO_INT("sim.max_solver_iters", c.rod.max_solver_iters));
    e.push_back({"sim.u_max",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   const auto parts = split_list(v);
                   if (parts.size() != 3) bad(k, v, "expected three comma-separated numbers");
                   c.rod.u_max = {to_double(k, parts[0]), to_double(k, parts[1]), to_double(k, parts[2])};
                 },
                 [](const RunConfig& c) {
                   return join(std::vector<double>{c.rod.u_max.dx, c.rod.u_max.dy, c.rod.u_max.dtheta});
                 }});
    e.push_back(DLO_DOUBLE("sim.workspace_min", c.rod.workspace_min));
    e.push_back(DLO_DOUBLE("sim.workspace_max", c.rod.workspace_max));
    e.push_back(DLO_INT("collect.n_traj", c.collect.n_traj));
    e.push_back(DLO_INT("collect.steps_per_traj", c.collect.steps_per_traj));
    e.push_back(DLO_DOUBLE("collect.dt", c.collect.dt));
    e.push_back(DLO_INT("split.train", c.split.train));
    e.push_back(DLO_INT("split.val", c.split.val));
    e.push_back(DLO_INT("split.test", c.split.test));
    e.push_back({"model.kind",
                 [](RunConfig& c, const std::string&, const std::string& v) { c.model.kind = dyn::model_kind_from_string(v); },
                 [](const RunConfig& c) { return dyn::to_string(c.model.kind); }});
    e.push_back(DLO_INT("model.history", c.model.history));
    e.push_back(DLO_DOUBLE("model.radius", c.model.radius));
    e.push_back(DLO_INT("model.latent_dim", c.model.latent_dim));
    e.push_back(DLO_INT("model.mlp_hidden_layers", c.model.mlp_hidden_layers));
    e.push_back(DLO_INT("model.gru_layers", c.model.gru_layers));
    e.push_back(DLO_INT("model.encoder_layers", c.model.encoder_layers));
    e.push_back(DLO_INT("model.heads", c.model.heads));
    e.push_back(DLO_INT("model.ffn_dim", c.model.ffn_dim));
    e.push_back({"model.baseline_hidden",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   std::vector<int> dims;
                   for (const auto& p : split_list(v)) dims.push_back(static_cast<int>(to_int(k, p)));
                   if (dims.empty()) bad(k, v, "expected a comma-separated list");
                   c.model.baseline_hidden = dims;
                 },
                 [](const RunConfig& c) { return join(c.model.baseline_hidden); }});
    for (const char* group : {"train", "transformer"}) {
      const bool tr = std::string(group) == "transformer";
      auto cfg = [tr](RunConfig& c) -> train::TrainConfig& { return tr ? c.transformer : c.train; };
      const std::string p = std::string(group) + ".";
      e.push_back(int_entry(p + "batch_size", [cfg](RunConfig& c) -> int& { return cfg(c).batch_size; }));
      e.push_back(double_entry(p + "lr_max", [cfg](RunConfig& c) -> double& { return cfg(c).lr_max; }));
      e.push_back(double_entry(p + "lr_min", [cfg](RunConfig& c) -> double& { return cfg(c).lr_min; }));
      e.push_back(int_entry(p + "max_epochs", [cfg](RunConfig& c) -> int& { return cfg(c).max_epochs; }));
      e.push_back(int_entry(p + "patience", [cfg](RunConfig& c) -> int& { return cfg(c).patience; }));
      if (!tr) {
        e.push_back(double_entry(p + "noise_fraction", [cfg](RunConfig& c) -> double& { return cfg(c).noise_fraction; }));
      }
      e.push_back(int_entry(p + "samples_per_epoch", [cfg](RunConfig& c) -> int& { return cfg(c).samples_per_epoch; }));
      e.push_back(int_entry(p + "stop_after", [cfg](RunConfig& c) -> int& { return cfg(c).stop_after; }));
    }
    e.push_back({"transformer.activation",
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   c.transformer_activation = nn::activation_from_string(v);
                 },
                 [](const RunConfig& c) { return nn::to_string(c.transformer_activation); }});
    e.push_back(DLO_INT("eval.horizon", c.eval_horizon));
    e.push_back(DLO_INT("eval.timing_trials", c.timing_trials));
    e.push_back(DLO_INT("control.horizon_cap", c.control.horizon_cap));
    e.push_back(DLO_INT("control.iterations", c.control.iterations));
    e.push_back(DLO_DOUBLE("control.learning_rate", c.control.learning_rate));
    e.push_back(DLO_DOUBLE("control.switch_threshold", c.control.switch_threshold));
    e.push_back(DLO_DOUBLE("control.success_threshold", c.control.success_threshold));
    e.push_back(DLO_INT("control.waypoints", c.control.waypoints));
    e.push_back(DLO_INT("control.steps_per_waypoint", c.control.steps_per_waypoint));
    e.push_back(DLO_INT("control.direct_budget", c.control.direct_budget));
    e.push_back(DLO_INT("suite.pool", c.suite.pool));
    e.push_back(DLO_INT("suite.large", c.suite.large));
    e.push_back(DLO_INT("suite.small", c.suite.small));
    e.push_back(DLO_INT("suite.settle_steps", c.suite.settle_steps));
    e.push_back(DLO_DOUBLE("suite.large_quantile", c.suite.large_quantile));
    e.push_back(DLO_DOUBLE("suite.small_quantile", c.suite.small_quantile));
    e.push_back(DLO_STRING("paths.dataset", c.dataset_path));
    e.push_back(DLO_STRING("paths.models", c.models_dir));
    e.push_back(DLO_STRING("paths.reports", c.reports_dir));
    e.push_back(DLO_STRING("paths.suite", c.suite_path));
    return e;
  }();
  return entries;
}

#undef DLO_INT
#undef DLO_DOUBLE
#undef DLO_STRING

}  // namespace

RunConfig RunConfig::defaults(bool paper_scale) {
  RunConfig c;
  if (paper_scale) {
    c.collect.n_traj = 3000;
    c.collect.steps_per_traj = 150;
    const dyn::DynConfig p = dyn::DynConfig::paper_scale(c.model.kind);
    c.model.latent_dim = p.latent_dim;
    c.model.mlp_hidden_layers = p.mlp_hidden_layers;
    c.model.gru_layers = p.gru_layers;
    c.model.encoder_layers = p.encoder_layers;
    c.model.heads = p.heads;
    c.model.ffn_dim = p.ffn_dim;
    c.model.baseline_hidden = p.baseline_hidden;
    c.train.samples_per_epoch = 0;
  }
  c.set_seed(c.seed);
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Entry& e : registry()) {
    if (e.key == key) {
      e.set(*this, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  collect.seed = s;
  split.seed = s;
  train.seed = s;
  transformer.seed = s;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const Entry& e : registry()) out += e.key + " = " + e.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  rod.validate();
  if (collect.n_traj < 1 || collect.steps_per_traj < 2 || !(collect.dt > 0.0)) {
    throw ConfigError("collect.n_traj, collect.steps_per_traj and collect.dt must be positive");
  }
  if (split.train < 1 || split.val < 1 || split.test < 1) throw ConfigError("split shares must be positive");
  model_config(model.kind).validate();
  train.validate();
  transformer.validate();
  if (eval_horizon < 1) throw ConfigError("eval.horizon must be positive");
  if (timing_trials < 1) throw ConfigError("eval.timing_trials must be positive");
  control.validate();
  if (suite.pool < 2 || suite.large < 0 || suite.small < 0 || suite.settle_steps < 1) {
    throw ConfigError("suite sizes must be positive");
  }
  if (!(suite.small_quantile > 0.0 && suite.small_quantile <= suite.large_quantile && suite.large_quantile < 1.0)) {
    throw ConfigError("suite quantiles must satisfy 0 < small <= large < 1");
  }
}

dyn::DynConfig RunConfig::model_config(dyn::ModelKind kind) const {
  dyn::DynConfig c = model;
  c.kind = kind;
  c.n_keypoints = rod.n_keypoints;
  c.dt = collect.dt;
  c.total_length = rod.total_length;
  c.u_max = rod.u_max;
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : registry()) keys.push_back(e.key);
  return keys;
}

OutputLayout layout(const RunConfig& config, const std::filesystem::path& out_dir) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : out_dir / q;
  };
  return {out_dir, resolve(config.dataset_path), resolve(config.models_dir), resolve(config.reports_dir),
          resolve(config.suite_path)};
}

}  // namespace dlo::app
