// Command-line front end: train/eval/baseline runs, drop-file generation and
// the quick invariant self-test, all driven by a key-value config file.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "cfgnn/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool out_set = false;
};

cfgnn::ExperimentConfig load_experiment(const CommonArgs& args) {
  cfgnn::ExperimentConfig cfg =
      args.config_path.empty()
          ? cfgnn::ExperimentConfig{}
          : cfgnn::ExperimentConfig::from_config(cfgnn::KeyValueConfig::from_file(args.config_path));
  if (args.seed_set) cfg.seed = args.seed;
  if (args.out_set) cfg.out_dir = args.out_dir;
  cfg.finalize();
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* cfg_opt = cmd->add_option("--config", args.config_path, "key-value configuration file");
  if (config_required) cfg_opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "override the experiment seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--out", args.out_dir, "override the output directory")->each([&](const std::string&) {
    args.out_set = true;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-filter power control: training, evaluation and baselines"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, baseline_args, gen_args;
  std::string checkpoint_dir;
  int gen_m = 6;
  int gen_count = 1;

  CLI::App* train_cmd = app.add_subcommand("train", "train one policy per configured network size");
  add_common(train_cmd, train_args, /*config_required=*/true);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate trained policies and baselines on test drops");
  add_common(eval_cmd, eval_args, /*config_required=*/true);
  eval_cmd->add_option("--checkpoint-dir", checkpoint_dir,
                       "directory holding regnn_m<size>.ckpt files (default: output directory)");

  CLI::App* baseline_cmd = app.add_subcommand("baseline", "evaluate only the TDM and WMMSE baselines");
  add_common(baseline_cmd, baseline_args, /*config_required=*/true);

  CLI::App* gen_cmd = app.add_subcommand("gen-drops", "write drop files for inspection or fixtures");
  add_common(gen_cmd, gen_args, /*config_required=*/false);
  gen_cmd->add_option("--m", gen_m, "number of transmitter/receiver pairs")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--count", gen_count, "number of drops to write")->check(CLI::PositiveNumber);

  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run the invariant suites and report counts");
  (void)selftest_cmd;

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      cfgnn::run_train(load_experiment(train_args));
    } else if (eval_cmd->parsed()) {
      const cfgnn::ExperimentConfig cfg = load_experiment(eval_args);
      const std::string ckpt_dir = checkpoint_dir.empty() ? cfg.out_dir : checkpoint_dir;
      cfgnn::run_eval(cfg, /*include_trained=*/true, ckpt_dir);
    } else if (baseline_cmd->parsed()) {
      const cfgnn::ExperimentConfig cfg = load_experiment(baseline_args);
      cfgnn::run_eval(cfg, /*include_trained=*/false, cfg.out_dir);
    } else if (gen_cmd->parsed()) {
      cfgnn::gen_drops(load_experiment(gen_args), gen_m, gen_count);
    } else if (selftest_cmd->parsed()) {
      const cfgnn::SelftestResult res = cfgnn::run_selftest();
      return res.failed == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
