// toymodel.hpp — small fully-connected classifier with per-layer probes.
//
// A tanh MLP with two output logits, forward/backward implemented directly
// on Eigen matrices. Probes capture post-nonlinearity hidden states;
// penalty gradients can be injected at probe layers during the backward
// pass and add to the task-loss gradient path.

#ifndef FWSSR_TOYMODEL_HPP
#define FWSSR_TOYMODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fwssr/geometry.hpp"

namespace fwssr {

struct ToyGuardModel {
  std::vector<int> layer_widths;           // d_in, hidden..., n_logits
  std::vector<Eigen::MatrixXd> weights;    // weights[i]: widths[i+1] x widths[i]
  std::vector<Eigen::VectorXd> biases;     // biases[i]: widths[i+1]
  std::vector<int> probe_layers;           // 1-based hidden layer indices

  int num_weight_layers() const { return static_cast<int>(weights.size()); }
  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
};

// Seeded uniform init in +-sqrt(6 / (fan_in + fan_out)); zero biases.
ToyGuardModel make_model(const std::vector<int>& layer_widths,
                         const std::vector<int>& probe_layers,
                         std::uint64_t seed);

// Forward-pass cache: input, post-tanh hidden activations, and logits.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> hidden;  // hidden[l-1] = activations of layer l
  Eigen::MatrixXd logits;
  bool valid = false;
};

ForwardCache forward_with_probes(const ToyGuardModel& model,
                                 const Eigen::MatrixXd& inputs);

// ActivationBatch per probed layer, in probe_layers order.
std::vector<ActivationBatch> probes_from_cache(const ToyGuardModel& model,
                                               const ForwardCache& cache,
                                               SnapshotTag tag);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Reverse-mode gradients of a scalar loss given dL/dlogits, plus optional
// injected dL/d(hidden activations) keyed by 1-based probe layer index.
// Throws if the cache is stale or was never produced by a forward pass.
Gradients backward(const ToyGuardModel& model, const ForwardCache& cache,
                   const Eigen::MatrixXd& dlogits,
                   const std::map<int, Eigen::MatrixXd>& probe_grads = {});

// Mean softmax cross-entropy over two (or more) logits.
struct TaskLoss {
  double value = 0.0;
  Eigen::MatrixXd dlogits;  // gradient of the mean loss
};
TaskLoss softmax_cross_entropy(const Eigen::MatrixXd& logits,
                               const std::vector<int>& labels);

// Row-wise softmax probabilities.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

double global_grad_norm(const Gradients& grads);

// theta <- theta - lr * g, with g rescaled iff its global norm exceeds
// clip_norm (clip_norm <= 0 disables clipping).
void sgd_step(ToyGuardModel& model, const Gradients& grads, double lr,
              double clip_norm);

// Fixed deterministic parameter order: per layer, weight rows then bias.
Eigen::VectorXd flatten(const Gradients& grads);
Eigen::VectorXd flatten_parameters(const ToyGuardModel& model);
void unflatten_parameters(ToyGuardModel& model, const Eigen::VectorXd& theta);

// Deep, immutable copy of all parameters.
struct ModelSnapshot {
  ToyGuardModel params;
  std::string snapshot_id;
};

ModelSnapshot snapshot(const ToyGuardModel& model, std::string snapshot_id);

// Gradient-free forward on a frozen snapshot.
ForwardCache anchor_forward(const ModelSnapshot& snap,
                            const Eigen::MatrixXd& inputs);

}  // namespace fwssr

#endif  // FWSSR_TOYMODEL_HPP
