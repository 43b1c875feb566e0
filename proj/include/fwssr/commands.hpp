// commands.hpp — experiment pipeline and the CLI-facing command surface.
//
// Each command is deterministic under the config seed and returns 0 on
// success; failures surface as exceptions that the CLI turns into a
// structured diagnostic and a nonzero exit code.

#ifndef FWSSR_COMMANDS_HPP
#define FWSSR_COMMANDS_HPP

#include <string>
#include <vector>

#include "fwssr/config.hpp"
#include "fwssr/eval.hpp"
#include "fwssr/trainer.hpp"

namespace fwssr {

// Shared inputs for one experiment: generated datasets, the pretrained
// anchor, and the frozen subspaces/activations extracted from it.
struct ExperimentBundle {
  ProbeSet probes;
  TaskSet tasks;
  AnchorBundle anchors;
};

// Generates data and pretrains the anchor in-memory.
ExperimentBundle prepare_experiment(const ExperimentConfig& cfg);

// Same, but loads the anchor from a checkpoint produced by cmd_pretrain.
ExperimentBundle prepare_experiment_from_anchor(
    const ExperimentConfig& cfg, const std::string& anchor_checkpoint);

// Runs one condition against the shared bundle.
RunResult execute_condition(const ExperimentConfig& cfg,
                            const ExperimentBundle& bundle, RunMode mode);

ConditionResult to_condition_result(const RunResult& run);

// Writes one run directory: config.json, trace.jsonl, geometry.csv/.json,
// behavior.csv, summary.json, checkpoints/{anchor,final}.bin and the
// per-layer subspace files.
void write_run_dir(const std::string& dir, const ExperimentConfig& cfg,
                   const ExperimentBundle& bundle, const RunResult& run);

// CLI commands. Paths are rooted at cfg.out_dir.
int cmd_gen_data(const ExperimentConfig& cfg);
int cmd_pretrain(const ExperimentConfig& cfg);
int cmd_run(const ExperimentConfig& cfg, RunMode mode);
int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_dir);
int cmd_sweep(const ExperimentConfig& cfg, const std::string& knob,
              const std::vector<double>& values);

std::string anchor_checkpoint_path(const ExperimentConfig& cfg);

}  // namespace fwssr

#endif  // FWSSR_COMMANDS_HPP
