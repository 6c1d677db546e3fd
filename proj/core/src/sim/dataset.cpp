// SPDX-License-Identifier: Apache-2.0
#include "dlo/sim/dataset.hpp"

#include "dlo/error.hpp"
#include "dlo/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>
#include <sstream>

namespace dlo::sim {

std::vector<int> TrajectoryDataset::trajectory_ids() const {
  std::vector<int> ids;
  for (const auto& r : records) {
    if (ids.empty() || ids.back() != r.traj_id) ids.push_back(r.traj_id);
  }
  return ids;
}

std::span<const TrajectoryRecord> TrajectoryDataset::trajectory(int id) const {
  auto first = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.traj_id == id; });
  if (first == records.end()) throw PreconditionError("no trajectory with id " + std::to_string(id));
  auto last = std::find_if(first, records.end(), [&](const auto& r) { return r.traj_id != id; });
  return {&*first, static_cast<std::size_t>(last - first)};
}

TrajectoryDataset TrajectoryDataset::subset(std::span<const int> ids) const {
  TrajectoryDataset out = *this;
  out.records.clear();
  for (int id : ids) {
    auto tr = trajectory(id);
    out.records.insert(out.records.end(), tr.begin(), tr.end());
  }
  return out;
}

Pose sample_destination(const RodConfig& config, std::mt19937_64& rng) {
  const double lo = config.workspace_min * config.total_length;
  const double hi = config.workspace_max * config.total_length;
  std::uniform_real_distribution<double> r2(lo * lo, hi * hi);
  std::uniform_real_distribution<double> half_turn(-std::numbers::pi / 2, std::numbers::pi / 2);
  for (;;) {
    const double r = std::sqrt(r2(rng));
    const double phi = half_turn(rng);
    const double theta = half_turn(rng);
    // Rejection guard; the annulus lies inside the reachable disc by construction.
    if (r < config.total_length) return Pose{r * std::cos(phi), r * std::sin(phi), theta};
  }
}

namespace {

double toward(double from, double to, double cap, double dt) {
  return std::clamp((to - from) / dt, -cap, cap);
}

bool arrived(const Pose& p, const Pose& goal) {
  constexpr double kTol = 1e-9;
  return std::abs(p.x - goal.x) < kTol && std::abs(p.y - goal.y) < kTol && std::abs(p.theta - goal.theta) < kTol;
}

}  // namespace

std::vector<TrajectoryRecord> collect_trajectory(const RodConfig& config, const CollectConfig& cc,
                                                 int traj_id, RodState* final_state) {
  config.validate();
  if (cc.steps_per_traj < 1 || !(cc.dt > 0.0)) throw ConfigError("steps_per_traj and dt must be positive");
  std::mt19937_64 rng(cc.seed + static_cast<std::uint64_t>(traj_id));
  RodState state = rest_state(config);
  Pose goal = sample_destination(config, rng);
  std::vector<TrajectoryRecord> out;
  out.reserve(cc.steps_per_traj);
  for (int t = 0; t < cc.steps_per_traj; ++t) {
    const Pose& p = state.ee;
    if (arrived(p, goal)) goal = sample_destination(config, rng);
    Action u{toward(p.x, goal.x, config.u_max.dx, cc.dt), toward(p.y, goal.y, config.u_max.dy, cc.dt),
             toward(p.theta, goal.theta, config.u_max.dtheta, cc.dt)};
    TrajectoryRecord rec;
    rec.traj_id = traj_id;
    rec.t = t;
    rec.keypoints = keypoints(config, state);
    rec.ee = state.ee;
    rec.action = u;
    rec.wrench = base_wrench(config, state);
    out.push_back(std::move(rec));
    state = step(config, state, u, cc.dt);
  }
  if (final_state) *final_state = state;
  return out;
}

TrajectoryDataset collect_trajectories(const RodConfig& config, const CollectConfig& cc) {
  if (cc.n_traj < 1) throw ConfigError("n_traj must be positive");
  TrajectoryDataset data;
  data.config_hash = config.hash();
  data.n_keypoints = config.n_keypoints;
  data.dt = cc.dt;
  data.total_length = config.total_length;
  data.workspace_min = config.workspace_min;
  data.workspace_max = config.workspace_max;
  data.seed = cc.seed;
  data.records.reserve(static_cast<std::size_t>(cc.n_traj) * cc.steps_per_traj);
  for (int id = 0; id < cc.n_traj; ++id) {
    auto tr = collect_trajectory(config, cc, id);
    data.records.insert(data.records.end(), std::make_move_iterator(tr.begin()),
                        std::make_move_iterator(tr.end()));
  }
  return data;
}

void write_dataset(std::ostream& out, const TrajectoryDataset& data) {
  out << "# dlo-trajectories v1 config_hash=" << hex64(data.config_hash) << " m=" << data.n_keypoints
      << " dt=" << format_double(data.dt) << " length=" << format_double(data.total_length)
      << " workspace=" << format_double(data.workspace_min) << "," << format_double(data.workspace_max)
      << " seed=" << data.seed << " records=" << data.records.size() << "\n";
  std::string line;
  for (const auto& r : data.records) {
    if (static_cast<int>(r.keypoints.size()) != 2 * data.n_keypoints) {
      throw ShapeError("record keypoint count does not match header m");
    }
    line.clear();
    line += std::to_string(r.traj_id);
    line += ' ';
    line += std::to_string(r.t);
    auto put = [&](double v) {
      line += ' ';
      line += format_double(v);
    };
    for (double v : r.keypoints) put(v);
    put(r.ee.x), put(r.ee.y), put(r.ee.theta);
    put(r.action.dx), put(r.action.dy), put(r.action.dtheta);
    put(r.wrench.fx), put(r.wrench.fy), put(r.wrench.mz);
    line += '\n';
    out << line;
  }
}

namespace {

std::map<std::string, std::string> parse_header(const std::string& line) {
  std::istringstream ss(line);
  std::string hash_mark, magic, version;
  ss >> hash_mark >> magic >> version;
  if (hash_mark != "#" || magic != "dlo-trajectories") throw IoError("not a trajectory dataset");
  if (version != "v1") throw IoError("unsupported dataset version " + version);
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ss >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw IoError("malformed header field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"config_hash", "m", "dt", "length", "workspace", "seed", "records"}) {
    if (!kv.count(key)) throw IoError(std::string("dataset header lacks ") + key);
  }
  return kv;
}

double parse_double(const char*& p) {
  char* end = nullptr;
  const double v = std::strtod(p, &end);
  if (end == p) throw IoError("malformed number in dataset record");
  p = end;
  return v;
}

}  // namespace

TrajectoryDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset");
  const auto kv = parse_header(line);
  TrajectoryDataset data;
  try {
    data.config_hash = std::stoull(kv.at("config_hash"), nullptr, 16);
    data.n_keypoints = std::stoi(kv.at("m"));
    data.dt = std::stod(kv.at("dt"));
    data.total_length = std::stod(kv.at("length"));
    const std::string& ws = kv.at("workspace");
    const auto comma = ws.find(',');
    if (comma == std::string::npos) throw IoError("malformed workspace field");
    data.workspace_min = std::stod(ws.substr(0, comma));
    data.workspace_max = std::stod(ws.substr(comma + 1));
    data.seed = std::stoull(kv.at("seed"));
  } catch (const std::logic_error&) {
    throw IoError("malformed dataset header");
  }
  const std::size_t expected = std::stoull(kv.at("records"));
  data.records.reserve(expected);
  const int m2 = 2 * data.n_keypoints;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* p = line.c_str();
    TrajectoryRecord r;
    r.traj_id = static_cast<int>(parse_double(p));
    r.t = static_cast<int>(parse_double(p));
    r.keypoints.resize(m2);
    for (int i = 0; i < m2; ++i) r.keypoints[i] = parse_double(p);
    r.ee = {parse_double(p), parse_double(p), parse_double(p)};
    r.action = {parse_double(p), parse_double(p), parse_double(p)};
    r.wrench = {parse_double(p), parse_double(p), parse_double(p)};
    while (*p == ' ') ++p;
    if (*p != '\0') throw IoError("trailing fields in dataset record");
    data.records.push_back(std::move(r));
  }
  if (data.records.size() != expected) {
    throw IoError("dataset has " + std::to_string(data.records.size()) + " records, header says " +
                  std::to_string(expected));
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const TrajectoryDataset& data) {
  std::ostringstream ss;
  write_dataset(ss, data);
  write_file_atomic(path, ss.str());
}

TrajectoryDataset load_dataset(const std::filesystem::path& path) {
  std::istringstream ss(read_file(path));
  return read_dataset(ss);
}

}  // namespace dlo::sim
