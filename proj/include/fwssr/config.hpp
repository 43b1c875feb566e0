// config.hpp — declarative experiment configuration.
//
// One top-level seed drives every random stream through named splits
// (probe-set, task-set, model-init, pretrain-data, pretrain-shuffle,
// task-shuffle, safe-batch, cka-subsample), so conditions run with the
// same seed share data and initialization. The fully resolved config is
// serialized back into each run directory before execution.

#ifndef FWSSR_CONFIG_HPP
#define FWSSR_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fwssr/synthdata.hpp"
#include "fwssr/trainer.hpp"

namespace fwssr {

struct ExperimentConfig {
  std::uint64_t seed = 17;
  std::string out_dir = "runs";

  SynthSpec data;  // probe-set spec; data.seed follows the top-level seed

  int n_tasks = 2000;
  double overlap = 0.0;

  std::vector<int> layer_widths = {64, 64, 64, 64, 2};
  std::vector<int> probe_layers = {1, 2, 3};

  PretrainConfig pretrain;
  TrainConfig train;  // train.seed follows the top-level seed

  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3, 4, 5};

  ExperimentConfig();
};

// Propagates the top-level seed into sub-configs and validates coherence
// (input width vs layer widths, probe layers vs depth, ...). Throws on
// inconsistent settings.
ExperimentConfig resolved(ExperimentConfig cfg);

std::string to_json_string(const ExperimentConfig& cfg);
ExperimentConfig config_from_json_string(const std::string& text);

// Loads a config file (JSON). Missing keys keep their defaults.
ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

// Applies one "dotted.key=value" override, e.g. "train.learning_rate=0.1".
ExperimentConfig apply_override(ExperimentConfig cfg, const std::string& kv);

}  // namespace fwssr

#endif  // FWSSR_CONFIG_HPP
