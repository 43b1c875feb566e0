// trainer.hpp — the fine-tuning loop with optional subspace regularization.
//
// Three conditions share data, initialization and the anchor snapshot:
//   original    — no training, the anchor evaluated against itself
//   baseline_ft — task-loss-only fine-tuning
//   fwssr       — task loss + lambda * Fisher-weighted subspace penalty,
//                 with Fisher EMA every tau steps and a conflict-driven
//                 lambda update every conflict_period steps
//
// Task-batch shuffling and safety-batch sampling draw from independent
// seeded streams, so the baseline and regularized conditions see identical
// task batches under the same seed.

#ifndef FWSSR_TRAINER_HPP
#define FWSSR_TRAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fwssr/eval.hpp"
#include "fwssr/geometry.hpp"
#include "fwssr/regularizer.hpp"
#include "fwssr/rng.hpp"
#include "fwssr/synthdata.hpp"
#include "fwssr/toymodel.hpp"

namespace fwssr {

enum class RunMode { original, baseline_ft, fwssr };

std::string mode_name(RunMode mode);
RunMode mode_from_name(const std::string& name);

struct TrainConfig {
  double learning_rate = 2e-5;
  int epochs = 3;
  int batch_task = 8;
  int batch_safe = 16;
  double lambda0 = 0.1;
  int k = 32;
  double beta = 0.9;
  int tau = 50;            // Fisher EMA period
  int conflict_period = 20;  // lambda measurement period
  std::uint64_t seed = 17;
  RunMode mode = RunMode::fwssr;
  double clip_norm = 1.0;
  // Subspace extraction
  double gamma = 5.0;
  int n_a = 32;  // clamped to the harmful row count
  // Final evaluation
  double eval_threshold = 0.7;
  int cka_subsample = 64;
};

void validate(const TrainConfig& cfg);

// Fixed regularization targets for one run: the frozen snapshot, one
// subspace per probed layer, and cached anchor activations for the full
// probe set. Never recomputed mid-run.
struct AnchorBundle {
  ModelSnapshot snapshot;
  std::vector<SafetySubspace> subspaces;
  std::vector<ActivationBatch> anchor_acts;
};

// Extracts per-layer subspaces from the anchor's probe activations and
// caches the anchor activations. n_a is clamped to min(n_a, N_harmful).
AnchorBundle prepare_anchors(const ModelSnapshot& snap, const ProbeSet& probes,
                             int k, double gamma, int n_a);

struct StepTrace {
  int step = 0;
  double task_loss = 0.0;
  double lambda = 0.0;
  double fwssr_loss = 0.0;
  bool has_penalty = false;   // set on every fwssr-mode step
  bool has_conflict = false;  // set on conflict measurement steps
  double s_t = 0.0;
  std::vector<double> per_layer_penalty;
};

struct RunResult {
  std::string condition;
  ToyGuardModel final_model;
  std::vector<StepTrace> trace;
  std::vector<GeometryReport> geometry;  // per probed layer, vs anchor
  BehaviorReport behavior;               // harmful probe rows
  double benign_false_refusal = 0.0;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, const AnchorBundle& anchors, const ProbeSet& probes);

  // One SGD update on grad(task + lambda * penalty) over explicit batch
  // indices (task_idx into the task set, safe_idx into the probe set).
  StepTrace train_step(const TaskSet& tasks, const std::vector<int>& task_idx,
                       const std::vector<int>& safe_idx);

  // Full schedule: epochs over the task set with fresh safety batches each
  // step, then final geometry/behavior evaluation against the anchor.
  RunResult run(const TaskSet& tasks);

  const ToyGuardModel& model() const { return model_; }
  const LambdaState& lambda_state() const { return lambda_; }
  const std::vector<FisherState>& fisher_states() const { return fisher_; }
  int step() const { return step_; }

 private:
  struct SafetyBatchEval {
    ForwardCache cache;
    std::vector<ActivationBatch> current;
    std::vector<ActivationBatch> anchor;
    PenaltyResult penalty;
  };

  SafetyBatchEval eval_safety_batch(const std::vector<int>& safe_idx);
  double measure_conflict(const TaskSet& tasks,
                          const std::vector<int>& task_idx,
                          const std::vector<int>& safe_idx);
  RunResult evaluate_final();

  TrainConfig cfg_;
  const AnchorBundle& anchors_;
  const ProbeSet& probes_;
  ToyGuardModel model_;
  std::vector<FisherState> fisher_;
  std::vector<Eigen::VectorXd> fresh_fisher_;
  LambdaState lambda_;
  int step_ = 0;
  SplitRng task_rng_;
  SplitRng safe_rng_;
  std::vector<StepTrace> trace_;
};

struct PretrainConfig {
  int n_per_class = 256;
  double learning_rate = 0.1;
  int batch_size = 32;
  int epochs = 60;
  double target_accuracy = 0.95;
};

// Manufactures the safety-aligned anchor: trains a freshly initialized
// model on a larger sample of the probe distribution, then verifies probe
// accuracy meets the target. Throws if it does not.
ModelSnapshot pretrain_anchor(const SynthSpec& data_spec,
                              const PretrainConfig& cfg,
                              const std::vector<int>& layer_widths,
                              const std::vector<int>& probe_layers,
                              const ProbeSet& probes, std::uint64_t seed);

// Classification accuracy of argmax(logits) against labels.
double accuracy(const ToyGuardModel& model, const Eigen::MatrixXd& inputs,
                const std::vector<int>& labels);

}  // namespace fwssr

#endif  // FWSSR_TRAINER_HPP
