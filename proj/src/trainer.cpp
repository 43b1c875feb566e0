#include "fwssr/trainer.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "fwssr/log.hpp"

namespace fwssr {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m,
                            const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(labels[static_cast<size_t>(i)]);
  return out;
}

void add_gradients(Gradients& acc, const Gradients& other) {
  for (size_t i = 0; i < acc.weights.size(); ++i) {
    acc.weights[i] += other.weights[i];
    acc.biases[i] += other.biases[i];
  }
}

}  // namespace

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::original: return "original";
    case RunMode::baseline_ft: return "baseline_ft";
    case RunMode::fwssr: return "fwssr";
  }
  return "unknown";
}

RunMode mode_from_name(const std::string& name) {
  if (name == "original") return RunMode::original;
  if (name == "baseline" || name == "baseline_ft") return RunMode::baseline_ft;
  if (name == "fwssr") return RunMode::fwssr;
  throw std::invalid_argument("unknown mode: " + name);
}

void validate(const TrainConfig& cfg) {
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("learning_rate <= 0");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs < 1");
  if (cfg.batch_task < 1 || cfg.batch_safe < 1)
    throw std::invalid_argument("batch sizes must be positive");
  if (cfg.lambda0 < 0.0) throw std::invalid_argument("lambda0 < 0");
  if (cfg.k < 1) throw std::invalid_argument("k < 1");
  if (cfg.beta <= 0.0 || cfg.beta >= 1.0)
    throw std::invalid_argument("beta outside (0, 1)");
  if (cfg.tau < 1 || cfg.conflict_period < 1)
    throw std::invalid_argument("update periods must be positive");
  if (cfg.gamma <= 0.0) throw std::invalid_argument("gamma <= 0");
  if (cfg.n_a < 0) throw std::invalid_argument("n_a < 0");
  if (!(cfg.eval_threshold > 0.5 && cfg.eval_threshold < 1.0))
    throw std::invalid_argument("eval_threshold outside (0.5, 1)");
  if (cfg.cka_subsample < 2) throw std::invalid_argument("cka_subsample < 2");
}

AnchorBundle prepare_anchors(const ModelSnapshot& snap, const ProbeSet& probes,
                             int k, double gamma, int n_a) {
  AnchorBundle bundle;
  bundle.snapshot = snap;
  const ForwardCache cache = anchor_forward(snap, probes.inputs);
  bundle.anchor_acts =
      probes_from_cache(snap.params, cache, SnapshotTag::anchor);
  bundle.subspaces.reserve(bundle.anchor_acts.size());
  for (const ActivationBatch& acts : bundle.anchor_acts) {
    SafetySubspace sub = extract_from_labeled(acts, probes.labels, k, gamma, n_a);
    sub.anchor_id = snap.snapshot_id;
    bundle.subspaces.push_back(std::move(sub));
  }
  return bundle;
}

Trainer::Trainer(TrainConfig cfg, const AnchorBundle& anchors,
                 const ProbeSet& probes)
    : cfg_(std::move(cfg)),
      anchors_(anchors),
      probes_(probes),
      model_(anchors.snapshot.params),
      task_rng_(mix_seed(cfg_.seed, "task-shuffle")),
      safe_rng_(mix_seed(cfg_.seed, "safe-batch")) {
  validate(cfg_);
  if (anchors_.subspaces.size() != model_.probe_layers.size())
    throw std::invalid_argument("anchor bundle disagrees with probe layers");
  lambda_.lambda = cfg_.lambda0;
  lambda_.lambda0 = cfg_.lambda0;
  lambda_.conflict_period = cfg_.conflict_period;
  for (const auto& sub : anchors_.subspaces) {
    fisher_.push_back(make_fisher_state(sub.k, cfg_.beta, cfg_.tau));
    fresh_fisher_.push_back(Eigen::VectorXd::Ones(sub.k));
  }
}

Trainer::SafetyBatchEval Trainer::eval_safety_batch(
    const std::vector<int>& safe_idx) {
  SafetyBatchEval ev;
  const Eigen::MatrixXd safe_inputs = gather_rows(probes_.inputs, safe_idx);
  ev.cache = forward_with_probes(model_, safe_inputs);
  ev.current = probes_from_cache(model_, ev.cache, SnapshotTag::current);
  ev.anchor.reserve(anchors_.anchor_acts.size());
  for (const ActivationBatch& full : anchors_.anchor_acts) {
    ActivationBatch slice;
    slice.layer_index = full.layer_index;
    slice.tag = SnapshotTag::anchor;
    slice.data = gather_rows(full.data, safe_idx);
    ev.anchor.push_back(std::move(slice));
  }
  std::vector<Eigen::VectorXd> weights;
  weights.reserve(fisher_.size());
  for (const FisherState& st : fisher_) weights.push_back(normalize_fisher(st.raw));
  ev.penalty = fwssr_penalty(anchors_.subspaces, weights, ev.current, ev.anchor);
  return ev;
}

double Trainer::measure_conflict(const TaskSet& tasks,
                                 const std::vector<int>& task_idx,
                                 const std::vector<int>& safe_idx) {
  // Two extra backward passes on the same minibatch pair, post-update.
  const Eigen::MatrixXd task_inputs = gather_rows(tasks.inputs, task_idx);
  const std::vector<int> task_labels = gather_labels(tasks.labels, task_idx);
  const ForwardCache cache_t = forward_with_probes(model_, task_inputs);
  const TaskLoss loss = softmax_cross_entropy(cache_t.logits, task_labels);
  const Eigen::VectorXd task_grad = flatten(backward(model_, cache_t, loss.dlogits));

  SafetyBatchEval ev = eval_safety_batch(safe_idx);
  std::map<int, Eigen::MatrixXd> inject;
  for (size_t l = 0; l < ev.current.size(); ++l)
    inject[ev.current[l].layer_index] = ev.penalty.grads[l];
  const Eigen::MatrixXd zero_dlogits =
      Eigen::MatrixXd::Zero(ev.cache.logits.rows(), ev.cache.logits.cols());
  const Eigen::VectorXd safety_grad =
      flatten(backward(model_, ev.cache, zero_dlogits, inject));

  return gradient_conflict(task_grad, safety_grad);
}

StepTrace Trainer::train_step(const TaskSet& tasks,
                              const std::vector<int>& task_idx,
                              const std::vector<int>& safe_idx) {
  ++step_;
  StepTrace tr;
  tr.step = step_;

  const Eigen::MatrixXd task_inputs = gather_rows(tasks.inputs, task_idx);
  const std::vector<int> task_labels = gather_labels(tasks.labels, task_idx);
  const ForwardCache cache_t = forward_with_probes(model_, task_inputs);
  const TaskLoss loss = softmax_cross_entropy(cache_t.logits, task_labels);
  if (!std::isfinite(loss.value))
    throw std::runtime_error("non-finite task loss at step " +
                             std::to_string(step_));
  tr.task_loss = loss.value;

  Gradients total = backward(model_, cache_t, loss.dlogits);

  if (cfg_.mode == RunMode::fwssr) {
    SafetyBatchEval ev = eval_safety_batch(safe_idx);
    if (!std::isfinite(ev.penalty.value))
      throw std::runtime_error("non-finite penalty at step " +
                               std::to_string(step_));
    tr.has_penalty = true;
    tr.lambda = lambda_.lambda;
    tr.fwssr_loss = ev.penalty.value;
    tr.per_layer_penalty = ev.penalty.per_layer;
    for (size_t l = 0; l < fisher_.size(); ++l)
      fresh_fisher_[l] = estimate_fisher(anchors_.subspaces[l], ev.current[l]);

    if (lambda_.lambda > 0.0) {
      std::map<int, Eigen::MatrixXd> inject;
      for (size_t l = 0; l < ev.current.size(); ++l)
        inject[ev.current[l].layer_index] = lambda_.lambda * ev.penalty.grads[l];
      const Eigen::MatrixXd zero_dlogits =
          Eigen::MatrixXd::Zero(ev.cache.logits.rows(), ev.cache.logits.cols());
      add_gradients(total, backward(model_, ev.cache, zero_dlogits, inject));
    }
  }

  sgd_step(model_, total, cfg_.learning_rate, cfg_.clip_norm);

  if (cfg_.mode == RunMode::fwssr) {
    for (FisherState& st : fisher_) ++st.steps_since_update;
    if (step_ % cfg_.tau == 0) {
      for (size_t l = 0; l < fisher_.size(); ++l)
        fisher_[l] = ema_update(fisher_[l], fresh_fisher_[l]);
    }
    if (step_ % cfg_.conflict_period == 0) {
      const double s = measure_conflict(tasks, task_idx, safe_idx);
      lambda_ = lambda_step(lambda_, s);
      tr.has_conflict = true;
      tr.s_t = s;
    }
  }
  return tr;
}

RunResult Trainer::evaluate_final() {
  RunResult result;
  result.condition = mode_name(cfg_.mode);
  result.final_model = model_;
  result.trace = trace_;

  const ForwardCache cache = forward_with_probes(model_, probes_.inputs);
  const std::vector<ActivationBatch> current =
      probes_from_cache(model_, cache, SnapshotTag::current);
  const std::uint64_t cka_seed = mix_seed(cfg_.seed, "cka-subsample");
  for (size_t l = 0; l < current.size(); ++l) {
    result.geometry.push_back(evaluate_layer(
        anchors_.subspaces[l], current[l], anchors_.anchor_acts[l],
        probes_.labels, cfg_.cka_subsample, cka_seed));
  }

  result.behavior = behavior_rates(model_, probes_.rows_with_label(1),
                                   cfg_.eval_threshold);
  result.benign_false_refusal =
      behavior_rates(model_, probes_.rows_with_label(0), cfg_.eval_threshold)
          .refusal_rate;
  return result;
}

RunResult Trainer::run(const TaskSet& tasks) {
  model_ = anchors_.snapshot.params;
  step_ = 0;
  trace_.clear();
  lambda_ = LambdaState{};
  lambda_.lambda = cfg_.lambda0;
  lambda_.lambda0 = cfg_.lambda0;
  lambda_.conflict_period = cfg_.conflict_period;
  for (size_t l = 0; l < fisher_.size(); ++l) {
    fisher_[l] = make_fisher_state(anchors_.subspaces[l].k, cfg_.beta, cfg_.tau);
    fresh_fisher_[l] = Eigen::VectorXd::Ones(anchors_.subspaces[l].k);
  }

  if (cfg_.mode != RunMode::original) {
    const int n = static_cast<int>(tasks.inputs.rows());
    if (n < cfg_.batch_task)
      throw std::invalid_argument("task set smaller than one batch");
    const int steps_per_epoch = n / cfg_.batch_task;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      const std::vector<int> perm = random_permutation(n, task_rng_);
      for (int b = 0; b < steps_per_epoch; ++b) {
        std::vector<int> task_idx(
            perm.begin() + static_cast<long>(b) * cfg_.batch_task,
            perm.begin() + static_cast<long>(b + 1) * cfg_.batch_task);
        std::vector<int> safe_idx;
        if (cfg_.mode == RunMode::fwssr) {
          safe_idx.reserve(static_cast<size_t>(cfg_.batch_safe));
          for (int i = 0; i < cfg_.batch_safe; ++i)
            safe_idx.push_back(safe_rng_.uniform_int(probes_.size()));
        }
        trace_.push_back(train_step(tasks, task_idx, safe_idx));
      }
      FWSSR_LOG_DEBUG("mode=%s epoch=%d steps=%d task_loss=%.4f",
                      mode_name(cfg_.mode).c_str(), epoch, step_,
                      trace_.empty() ? 0.0 : trace_.back().task_loss);
    }
  }
  return evaluate_final();
}

double accuracy(const ToyGuardModel& model, const Eigen::MatrixXd& inputs,
                const std::vector<int>& labels) {
  const ForwardCache cache = forward_with_probes(model, inputs);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < cache.logits.rows(); ++i) {
    Eigen::Index arg = 0;
    cache.logits.row(i).maxCoeff(&arg);
    correct += (static_cast<int>(arg) == labels[static_cast<size_t>(i)]);
  }
  return static_cast<double>(correct) /
         static_cast<double>(cache.logits.rows());
}

ModelSnapshot pretrain_anchor(const SynthSpec& data_spec,
                              const PretrainConfig& cfg,
                              const std::vector<int>& layer_widths,
                              const std::vector<int>& probe_layers,
                              const ProbeSet& probes, std::uint64_t seed) {
  if (cfg.n_per_class < 2 || cfg.epochs < 1 || cfg.learning_rate <= 0.0 ||
      cfg.batch_size < 1)
    throw std::invalid_argument("invalid pretrain config");

  SynthSpec pretrain_spec = data_spec;
  pretrain_spec.n_per_class = cfg.n_per_class;
  pretrain_spec.seed = mix_seed(seed, "pretrain-data");
  const ProbeSet train_set = gen_probe_set(pretrain_spec);

  ToyGuardModel model = make_model(layer_widths, probe_layers, seed);
  SplitRng shuffle_rng(mix_seed(seed, "pretrain-shuffle"));
  const int n = train_set.size();
  const int steps_per_epoch = n / cfg.batch_size;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> perm = random_permutation(n, shuffle_rng);
    for (int b = 0; b < steps_per_epoch; ++b) {
      const std::vector<int> idx(
          perm.begin() + static_cast<long>(b) * cfg.batch_size,
          perm.begin() + static_cast<long>(b + 1) * cfg.batch_size);
      const Eigen::MatrixXd x = gather_rows(train_set.inputs, idx);
      const std::vector<int> y = gather_labels(train_set.labels, idx);
      const ForwardCache cache = forward_with_probes(model, x);
      const TaskLoss loss = softmax_cross_entropy(cache.logits, y);
      if (!std::isfinite(loss.value))
        throw std::runtime_error("non-finite pretraining loss");
      sgd_step(model, backward(model, cache, loss.dlogits), cfg.learning_rate,
               1.0);
    }
  }

  const double acc = accuracy(model, probes.inputs, probes.labels);
  FWSSR_LOG_INFO("pretrained anchor: probe accuracy %.4f", acc);
  if (acc < cfg.target_accuracy)
    throw std::runtime_error("pretraining missed the target probe accuracy");
  return snapshot(model, "anchor-seed-" + std::to_string(seed));
}

}  // namespace fwssr
