// SPDX-License-Identifier: Apache-2.0
// Command-line front end: collect, train, eval, bench, gen-suite.
#include "dlo/app/commands.hpp"
#include "dlo/error.hpp"
#include "dlo/util.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace dlo;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  long long seed = -1;
  std::string out = "run";
  bool paper_scale = false;
  std::string model;
  int horizon = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "extra key=value settings, applied after --config");
  cmd->add_option("--seed", c.seed, "seed for data, splits, initialisation and the suite")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_flag("--paper-scale", c.paper_scale, "3000 x 150 trajectories and 128-wide models");
  cmd->add_option("--model", c.model, "model kind, p2ft, f2pt, or a comma-separated list");
  cmd->add_option("--horizon", c.horizon, "evaluation horizon")->check(CLI::PositiveNumber);
}

app::RunConfig resolve(const Common& c) {
  app::RunConfig cfg = app::RunConfig::defaults(c.paper_scale);
  if (!c.config_path.empty()) cfg.apply_text(read_file(c.config_path));
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed >= 0) cfg.set_seed(static_cast<std::uint64_t>(c.seed));
  if (c.horizon > 0) cfg.eval_horizon = c.horizon;
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Deformable linear object modelling and control experiments"};
  cli.require_subcommand(1);
  Common common;
  bool resume = false;
  std::string strategies = "hybrid,pmpc";
  int tasks = 0;

  auto* collect = cli.add_subcommand("collect", "simulate the trajectory dataset");
  auto* train = cli.add_subcommand("train", "train a dynamics model or force transformer (--model, or 'all')");
  auto* eval = cli.add_subcommand("eval", "per-step test RMSE and inference timing of trained models");
  auto* bench = cli.add_subcommand("bench", "closed-loop control benchmark on the suite");
  auto* suite = cli.add_subcommand("gen-suite", "sample the seed-pinned benchmark suite");
  for (auto* c : {collect, train, eval, bench, suite}) add_common(c, common);
  train->add_flag("--resume", resume, "continue from the saved training state");
  bench->add_option("--strategies", strategies, "comma-separated subset of hybrid,pmpc")->capture_default_str();
  bench->add_option("--tasks", tasks, "run only the first N tasks")->check(CLI::NonNegativeNumber);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 1;
  }

  app::RunConfig cfg;
  try {
    cfg = resolve(common);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    std::ostream* log = &std::cerr;
    if (*collect) {
      const auto s = app::cmd_collect(cfg, common.out, log);
      std::cout << "wrote " << s.records << " records to " << s.dataset.string() << "\n";
    } else if (*train) {
      if (common.model.empty()) throw ConfigError("train needs --model");
      auto names = common.model == "all" ? app::trainable_names() : split_names(common.model);
      for (const auto& n : names) {
        const auto s = app::cmd_train(cfg, common.out, n, resume, log);
        std::cout << n << ": best epoch " << s.best_epoch << ", val loss " << format_double(s.best_val) << ", "
                  << s.checkpoint.string() << "\n";
      }
    } else if (*eval) {
      const auto s = app::cmd_eval(cfg, common.out, split_names(common.model), log);
      std::cout << "wrote " << s.rmse_csv.string() << " and " << s.timing_csv.string() << "\n";
    } else if (*suite) {
      const auto s = app::cmd_gen_suite(cfg, common.out, log);
      std::cout << "wrote " << s.tasks.size() << " tasks\n";
    } else if (*bench) {
      std::vector<app::Strategy> strats;
      for (const auto& n : split_names(strategies)) strats.push_back(app::strategy_from_string(n));
      const auto s = app::cmd_bench(cfg, common.out, common.model.empty() ? "ea-pe-gat" : common.model, strats, tasks, log);
      std::cout << read_file(s.table_csv);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
