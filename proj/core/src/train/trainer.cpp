// SPDX-License-Identifier: Apache-2.0
#include "dlo/train/trainer.hpp"

#include "dlo/dyn/forward.hpp"
#include "dlo/error.hpp"
#include "dlo/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace dlo::train {

void TrainConfig::validate() const {
  if (batch_size < 1 || max_epochs < 1 || patience < 1) throw ConfigError("batch_size, max_epochs and patience must be positive");
  if (!(lr_max > 0.0) || !(lr_min > 0.0) || lr_min > lr_max) throw ConfigError("need 0 < lr_min <= lr_max");
  if (noise_fraction < 0.0) throw ConfigError("noise_fraction must be non-negative");
  if (samples_per_epoch < 0 || stop_after < 0) throw ConfigError("samples_per_epoch and stop_after must be non-negative");
}

std::string TrainConfig::canonical() const {
  std::ostringstream ss;
  ss << "train batch=" << batch_size << " lr=" << format_double(lr_max) << "," << format_double(lr_min)
     << " epochs=" << max_epochs << " patience=" << patience << " noise=" << format_double(noise_fraction)
     << " samples=" << samples_per_epoch << " seed=" << seed;
  return ss.str();
}

double learning_rate(const TrainConfig& c, int epoch) {
  if (c.max_epochs <= 1) return c.lr_max;
  const double progress = std::clamp(static_cast<double>(epoch) / (c.max_epochs - 1), 0.0, 1.0);
  return c.lr_min + 0.5 * (c.lr_max - c.lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,train_loss,val_loss,lr,wall_seconds\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss) << ','
        << format_double(e.lr) << ',' << format_double(e.wall_seconds) << '\n';
  }
}

FitState start_fit(const nn::ParameterStore& params, const TrainConfig& config) {
  config.validate();
  FitState s;
  s.params = params;
  s.best = params;
  s.best_val = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(config.seed);
  std::ostringstream ss;
  ss << rng;
  s.rng_state = ss.str();
  return s;
}

void run_fit(FitState& state, const Objective& objective, const TrainConfig& config,
             const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (objective.train_size == 0) throw PreconditionError("no training samples");
  std::mt19937_64 rng;
  {
    std::istringstream ss(state.rng_state);
    ss >> rng;
    if (!ss) throw ConfigError("corrupt RNG state in training state");
  }
  const nn::AdamConfig adam_base;
  int ran = 0;
  while (!state.finished && state.next_epoch < config.max_epochs) {
    if (config.stop_after > 0 && ran >= config.stop_after) break;
    const auto start = std::chrono::steady_clock::now();
    const int epoch = state.next_epoch;
    nn::AdamConfig adam = adam_base;
    adam.lr = learning_rate(config, epoch);

    std::vector<std::size_t> order(objective.train_size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    if (config.samples_per_epoch > 0 && static_cast<std::size_t>(config.samples_per_epoch) < order.size()) {
      order.resize(config.samples_per_epoch);
    }
    double loss_sum = 0.0;
    std::size_t seen = 0;
    bool diverged = false;
    for (std::size_t first = 0; first < order.size() && !diverged; first += config.batch_size) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, order.size() - first);
      const std::span<const std::size_t> idx(order.data() + first, count);
      nn::Tape tape;
      nn::BoundParams bound(tape, state.params, true);
      const nn::Var loss = objective.batch_loss(tape, bound, idx, rng);
      const double lv = loss.value()(0, 0);
      if (!std::isfinite(lv)) {
        diverged = true;
        break;
      }
      try {
        const auto grads = nn::backward(tape, loss);
        nn::adam_step(state.params, grads, state.adam, adam);
      } catch (const NumericError&) {
        diverged = true;
        break;
      }
      loss_sum += lv * static_cast<double>(count);
      seen += count;
    }
    double val = std::numeric_limits<double>::quiet_NaN();
    if (!diverged) {
      val = objective.validation_loss(state.params);
      diverged = !std::isfinite(val);
    }
    if (diverged) {
      state.params = state.best;
      state.diverged = true;
      state.finished = true;
      break;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(seen);
    entry.val_loss = val;
    entry.lr = adam.lr;
    entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    state.log.push_back(entry);
    if (val < state.best_val) {
      state.best_val = val;
      state.best = state.params;
      state.best_epoch = epoch;
      state.since_best = 0;
    } else {
      ++state.since_best;
    }
    state.next_epoch = epoch + 1;
    if (state.since_best >= config.patience || state.next_epoch >= config.max_epochs) state.finished = true;
    ++ran;
    std::ostringstream ss;
    ss << rng;
    state.rng_state = ss.str();
    if (on_epoch) on_epoch(entry);
  }
}

nn::ParameterStore fit_state_to_store(const FitState& s) {
  nn::ParameterStore out;
  out.kind = "fit-state";
  for (const auto& [name, t] : s.params.entries()) out.set("params/" + name, t);
  for (const auto& [name, t] : s.best.entries()) out.set("best/" + name, t);
  nn::store_adam_state(s.adam, out);
  out.attributes["next_epoch"] = std::to_string(s.next_epoch);
  out.attributes["best_val"] = format_double(s.best_val);
  out.attributes["best_epoch"] = std::to_string(s.best_epoch);
  out.attributes["since_best"] = std::to_string(s.since_best);
  out.attributes["finished"] = s.finished ? "1" : "0";
  out.attributes["diverged"] = s.diverged ? "1" : "0";
  out.attributes["rng"] = s.rng_state;
  auto& a = out.arrays;
  for (const auto& e : s.log) {
    a["log.epoch"].push_back(e.epoch);
    a["log.train"].push_back(e.train_loss);
    a["log.val"].push_back(e.val_loss);
    a["log.lr"].push_back(e.lr);
    a["log.wall"].push_back(e.wall_seconds);
  }
  return out;
}

FitState fit_state_from_store(const nn::ParameterStore& in) {
  if (in.kind != "fit-state") throw ConfigError("not a training state checkpoint (kind '" + in.kind + "')");
  FitState s;
  for (const auto& [name, t] : in.entries()) {
    if (name.rfind("params/", 0) == 0) s.params.set(name.substr(7), t);
    if (name.rfind("best/", 0) == 0) s.best.set(name.substr(5), t);
  }
  s.adam = nn::load_adam_state(in);
  s.next_epoch = static_cast<int>(in.attribute_int("next_epoch"));
  s.best_val = std::stod(in.attribute("best_val"));
  s.best_epoch = static_cast<int>(in.attribute_int("best_epoch"));
  s.since_best = static_cast<int>(in.attribute_int("since_best"));
  s.finished = in.attribute("finished") == "1";
  s.diverged = in.attribute("diverged") == "1";
  s.rng_state = in.attribute("rng");
  if (in.arrays.count("log.epoch")) {
    const auto& ep = in.array("log.epoch");
    for (std::size_t i = 0; i < ep.size(); ++i) {
      s.log.push_back({static_cast<int>(ep[i]), in.array("log.train")[i], in.array("log.val")[i],
                       in.array("log.lr")[i], in.array("log.wall")[i]});
    }
  }
  return s;
}

// -- Dynamics -------------------------------------------------------------------

nn::Var one_step_loss(const nn::BoundParams& p, const dyn::DynModel& model, const Batch& batch, nn::Tape& tape) {
  const auto frames = frames_on_tape(tape, batch);
  const nn::Var pred = dyn::forward_step(p, model, frames, batch.size);
  const double d = model.config.delta();
  return nn::scale(nn::mse(pred, batch.targets.front()), 1.0 / (d * d));
}

double dataset_loss(const dyn::DynModel& model, const WindowSet& set, int batch_size) {
  if (set.size() == 0) throw PreconditionError("empty window set");
  double sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < set.size(); first += batch_size) {
    const std::size_t count = std::min<std::size_t>(batch_size, set.size() - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    const Batch b = assemble(set, idx, 1, nullptr, 0.0);
    nn::Tape tape(false);
    nn::BoundParams p(tape, model.params, false);
    sum += one_step_loss(p, model, b, tape).value()(0, 0) * static_cast<double>(count);
  }
  return sum / static_cast<double>(set.size());
}

Objective dynamics_objective(const dyn::DynModel& model, const WindowSet& train, const WindowSet& val,
                             const TrainConfig& config) {
  const double sigma = config.noise_fraction * model.config.total_length / (model.config.n_keypoints - 1);
  Objective o;
  o.train_size = train.size();
  o.batch_loss = [&model, &train, sigma](nn::Tape& tape, const nn::BoundParams& p, std::span<const std::size_t> idx,
                                         std::mt19937_64& rng) {
    const Batch b = assemble(train, idx, 1, sigma > 0.0 ? &rng : nullptr, sigma);
    return one_step_loss(p, model, b, tape);
  };
  o.validation_loss = [&model, &val](const nn::ParameterStore& params) {
    dyn::DynModel m{model.config, params};
    return dataset_loss(m, val);
  };
  return o;
}

TrainResult train_model(const dyn::DynModel& model, const WindowSet& train, const WindowSet& val,
                        const TrainConfig& config, FitState* resume,
                        const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.size() == 0 || val.size() == 0) throw PreconditionError("training and validation sets must be non-empty");
  FitState local;
  FitState& state = resume ? *resume : local;
  if (state.params.size() == 0) state = start_fit(model.params, config);
  run_fit(state, dynamics_objective(model, train, val, config), config, on_epoch);
  TrainResult r;
  r.best = dyn::DynModel{model.config, state.best};
  r.log = state.log;
  r.best_epoch = state.best_epoch;
  r.best_val = state.best_val;
  r.diverged = state.diverged;
  return r;
}

// -- Transformers ---------------------------------------------------------------

PairSet pairs_from(const sim::TrajectoryDataset& data) {
  PairSet s;
  const int m2 = 2 * data.n_keypoints;
  s.keypoints.resize(static_cast<Eigen::Index>(data.records.size()), m2);
  s.wrenches.resize(static_cast<Eigen::Index>(data.records.size()), 3);
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    for (int k = 0; k < m2; ++k) s.keypoints(static_cast<Eigen::Index>(i), k) = r.keypoints[k];
    s.wrenches.row(static_cast<Eigen::Index>(i)) << r.wrench.fx, r.wrench.fy, r.wrench.mz;
  }
  return s;
}

namespace {

const nn::Matrix& inputs_of(const repr::ForceTransformer& net, const PairSet& s) {
  return net.kind == repr::TransformerKind::p2ft ? s.keypoints : s.wrenches;
}
const nn::Matrix& outputs_of(const repr::ForceTransformer& net, const PairSet& s) {
  return net.kind == repr::TransformerKind::p2ft ? s.wrenches : s.keypoints;
}

}  // namespace

void fit_normalization(repr::ForceTransformer& net, const PairSet& train) {
  repr::set_normalization(net, repr::Normalizer::fit(inputs_of(net, train)),
                          repr::Normalizer::fit(outputs_of(net, train)));
}

double transformer_loss(const repr::ForceTransformer& net, const PairSet& set) {
  if (set.size() == 0) throw PreconditionError("empty pair set");
  const nn::Matrix pred = net.out_norm.apply(repr::transformer_predict(net, inputs_of(net, set)));
  const nn::Matrix target = net.out_norm.apply(outputs_of(net, set));
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Objective transformer_objective(const repr::ForceTransformer& net, const PairSet& train, const PairSet& val) {
  // Standardise once; minibatches gather rows of these.
  auto xin = std::make_shared<nn::Matrix>(net.in_norm.apply(inputs_of(net, train)));
  auto yout = std::make_shared<nn::Matrix>(net.out_norm.apply(outputs_of(net, train)));
  Objective o;
  o.train_size = train.size();
  o.batch_loss = [&net, xin, yout](nn::Tape& tape, const nn::BoundParams& p, std::span<const std::size_t> idx,
                                   std::mt19937_64&) {
    nn::Matrix xb(static_cast<Eigen::Index>(idx.size()), xin->cols());
    nn::Matrix yb(static_cast<Eigen::Index>(idx.size()), yout->cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      xb.row(static_cast<Eigen::Index>(i)) = xin->row(static_cast<Eigen::Index>(idx[i]));
      yb.row(static_cast<Eigen::Index>(i)) = yout->row(static_cast<Eigen::Index>(idx[i]));
    }
    return nn::mse(repr::transformer_forward(p, net, tape.constant(std::move(xb))), yb);
  };
  o.validation_loss = [&net, &val](const nn::ParameterStore& params) {
    repr::ForceTransformer probe = net;
    probe.params = params;
    return transformer_loss(probe, val);
  };
  return o;
}

TransformerResult train_transformer(repr::ForceTransformer net, const PairSet& train, const PairSet& val,
                                    const TrainConfig& config, FitState* resume,
                                    const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.size() == 0 || val.size() == 0) throw PreconditionError("training and validation sets must be non-empty");
  fit_normalization(net, train);
  FitState local;
  FitState& state = resume ? *resume : local;
  if (state.params.size() == 0) state = start_fit(net.params, config);
  run_fit(state, transformer_objective(net, train, val), config, on_epoch);
  TransformerResult r;
  r.best = net;
  r.best.params = state.best;
  repr::set_normalization(r.best, net.in_norm, net.out_norm);
  r.log = state.log;
  r.best_epoch = state.best_epoch;
  r.diverged = state.diverged;
  return r;
}

}  // namespace dlo::train
