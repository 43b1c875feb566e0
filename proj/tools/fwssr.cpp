// fwssr — command-line driver for the safety-subspace fine-tuning lab.
//
//   fwssr gen-data  [--config f] [--seed n] [--out dir] [--set k=v]...
//   fwssr pretrain  [--config f] ...
//   fwssr run       --mode {original|baseline|fwssr} ...
//   fwssr report    --runs dirA dirB [dirC...] [--out dir]
//   fwssr sweep     --knob {concentration|overlap|lambda0} --values v...
//
// FWSSR_LOG={error|info|debug} controls verbosity.

#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fwssr/commands.hpp"
#include "fwssr/config.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--set", opts.overrides,
                  "config override, key.path=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "top-level seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
}

fwssr::ExperimentConfig build_config(const CommonOpts& opts) {
  fwssr::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = fwssr::load_config(opts.config_path);
  for (const auto& kv : opts.overrides) cfg = fwssr::apply_override(cfg, kv);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  return fwssr::resolved(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-weighted safety-subspace regularization lab"};
  app.require_subcommand(1);

  CommonOpts gen_opts, pre_opts, run_opts, sweep_opts;
  std::string mode = "fwssr";
  std::string knob = "concentration";
  std::vector<double> values;
  std::vector<std::string> report_runs;
  std::string report_out = "report";

  CLI::App* cmd_gen = app.add_subcommand("gen-data", "write dataset CSVs");
  add_common(cmd_gen, gen_opts);

  CLI::App* cmd_pre =
      app.add_subcommand("pretrain", "train and save the anchor checkpoint");
  add_common(cmd_pre, pre_opts);

  CLI::App* cmd_run = app.add_subcommand("run", "run one condition");
  add_common(cmd_run, run_opts);
  cmd_run->add_option("--mode", mode, "original | baseline | fwssr");

  CLI::App* cmd_rep =
      app.add_subcommand("report", "compare finished run directories");
  cmd_rep->add_option("--runs", report_runs, "run directories (>= 2)")
      ->required();
  cmd_rep->add_option("--out", report_out, "report output directory");

  CLI::App* cmd_sw = app.add_subcommand("sweep", "sweep one knob");
  add_common(cmd_sw, sweep_opts);
  cmd_sw->add_option("--knob", knob, "concentration | overlap | lambda0");
  cmd_sw->add_option("--values", values, "knob values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) return fwssr::cmd_gen_data(build_config(gen_opts));
    if (cmd_pre->parsed()) return fwssr::cmd_pretrain(build_config(pre_opts));
    if (cmd_run->parsed())
      return fwssr::cmd_run(build_config(run_opts),
                            fwssr::mode_from_name(mode));
    if (cmd_rep->parsed()) return fwssr::cmd_report(report_runs, report_out);
    if (cmd_sw->parsed())
      return fwssr::cmd_sweep(build_config(sweep_opts), knob, values);
  } catch (const std::exception& e) {
    nlohmann::json diag;
    diag["error"] = e.what();
    std::cerr << diag.dump() << std::endl;
    return 1;
  }
  return 0;
}
