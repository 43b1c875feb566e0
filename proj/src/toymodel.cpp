#include "fwssr/toymodel.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "fwssr/rng.hpp"

namespace fwssr {

namespace {

void validate_model(const ToyGuardModel& m) {
  if (m.layer_widths.size() < 2)
    throw std::invalid_argument("model needs at least input and output widths");
  if (m.weights.size() + 1 != m.layer_widths.size() ||
      m.biases.size() != m.weights.size())
    throw std::invalid_argument("parameter count disagrees with layer widths");
  for (size_t i = 0; i < m.weights.size(); ++i) {
    if (m.weights[i].rows() != m.layer_widths[i + 1] ||
        m.weights[i].cols() != m.layer_widths[i] ||
        m.biases[i].size() != m.layer_widths[i + 1])
      throw std::invalid_argument("parameter shapes disagree with layer widths");
  }
}

}  // namespace

ToyGuardModel make_model(const std::vector<int>& layer_widths,
                         const std::vector<int>& probe_layers,
                         std::uint64_t seed) {
  if (layer_widths.size() < 2)
    throw std::invalid_argument("model needs at least input and output widths");
  const int n_hidden = static_cast<int>(layer_widths.size()) - 2;
  for (int p : probe_layers)
    if (p < 1 || p > n_hidden)
      throw std::invalid_argument("probe layer outside hidden range");

  ToyGuardModel m;
  m.layer_widths = layer_widths;
  m.probe_layers = probe_layers;
  SplitRng rng(mix_seed(seed, "model-init"));
  for (size_t i = 0; i + 1 < layer_widths.size(); ++i) {
    const int fan_in = layer_widths[i];
    const int fan_out = layer_widths[i + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return m;
}

ForwardCache forward_with_probes(const ToyGuardModel& model,
                                 const Eigen::MatrixXd& inputs) {
  validate_model(model);
  if (inputs.cols() != model.input_width())
    throw std::invalid_argument("input width disagrees with model");

  ForwardCache cache;
  cache.input = inputs;
  const int num_layers = model.num_weight_layers();
  Eigen::MatrixXd a = inputs;
  for (int i = 0; i < num_layers; ++i) {
    Eigen::MatrixXd z =
        (a * model.weights[static_cast<size_t>(i)].transpose()).rowwise() +
        model.biases[static_cast<size_t>(i)].transpose();
    if (i + 1 < num_layers) {
      a = z.array().tanh().matrix();
      cache.hidden.push_back(a);
    } else {
      cache.logits = std::move(z);
    }
  }
  cache.valid = true;
  return cache;
}

std::vector<ActivationBatch> probes_from_cache(const ToyGuardModel& model,
                                               const ForwardCache& cache,
                                               SnapshotTag tag) {
  if (!cache.valid) throw std::logic_error("probes requested without forward");
  std::vector<ActivationBatch> probes;
  probes.reserve(model.probe_layers.size());
  for (int layer : model.probe_layers) {
    ActivationBatch batch;
    batch.layer_index = layer;
    batch.data = cache.hidden[static_cast<size_t>(layer - 1)];
    batch.tag = tag;
    probes.push_back(std::move(batch));
  }
  return probes;
}

Gradients backward(const ToyGuardModel& model, const ForwardCache& cache,
                   const Eigen::MatrixXd& dlogits,
                   const std::map<int, Eigen::MatrixXd>& probe_grads) {
  validate_model(model);
  if (!cache.valid) throw std::logic_error("backward without forward");
  const int num_layers = model.num_weight_layers();
  if (static_cast<int>(cache.hidden.size()) != num_layers - 1 ||
      dlogits.rows() != cache.input.rows() ||
      dlogits.cols() != model.output_width())
    throw std::invalid_argument("cache shape disagrees with model");

  Gradients g;
  g.weights.resize(static_cast<size_t>(num_layers));
  g.biases.resize(static_cast<size_t>(num_layers));

  Eigen::MatrixXd delta = dlogits;  // dL/dz at the current layer
  for (int i = num_layers - 1; i >= 0; --i) {
    const Eigen::MatrixXd& below =
        (i == 0) ? cache.input : cache.hidden[static_cast<size_t>(i - 1)];
    g.weights[static_cast<size_t>(i)] = delta.transpose() * below;
    g.biases[static_cast<size_t>(i)] = delta.colwise().sum().transpose();
    if (i > 0) {
      Eigen::MatrixXd da = delta * model.weights[static_cast<size_t>(i)];
      auto it = probe_grads.find(i);  // hidden layer i feeds weight layer i
      if (it != probe_grads.end()) {
        if (it->second.rows() != da.rows() || it->second.cols() != da.cols())
          throw std::invalid_argument("injected probe gradient shape mismatch");
        da += it->second;
      }
      const Eigen::MatrixXd& a = cache.hidden[static_cast<size_t>(i - 1)];
      delta = (da.array() * (1.0 - a.array().square())).matrix();
    }
  }
  return g;
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

TaskLoss softmax_cross_entropy(const Eigen::MatrixXd& logits,
                               const std::vector<int>& labels) {
  const Eigen::Index n = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("labels length must match logits rows");
  TaskLoss loss;
  Eigen::MatrixXd p = softmax(logits);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= logits.cols())
      throw std::invalid_argument("label outside logit range");
    acc -= std::log(std::max(p(i, y), 1e-300));
  }
  loss.value = acc / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i)
    p(i, labels[static_cast<size_t>(i)]) -= 1.0;
  loss.dlogits = p / static_cast<double>(n);
  return loss;
}

double global_grad_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& w : grads.weights) sq += w.squaredNorm();
  for (const auto& b : grads.biases) sq += b.squaredNorm();
  return std::sqrt(sq);
}

void sgd_step(ToyGuardModel& model, const Gradients& grads, double lr,
              double clip_norm) {
  if (grads.weights.size() != model.weights.size())
    throw std::invalid_argument("gradient layer count disagrees with model");
  double scale = 1.0;
  if (clip_norm > 0.0) {
    const double norm = global_grad_norm(grads);
    if (norm > clip_norm) scale = clip_norm / norm;
  }
  for (size_t i = 0; i < model.weights.size(); ++i) {
    model.weights[i] -= (lr * scale) * grads.weights[i];
    model.biases[i] -= (lr * scale) * grads.biases[i];
  }
}

Eigen::VectorXd flatten(const Gradients& grads) {
  Eigen::Index total = 0;
  for (const auto& w : grads.weights) total += w.size();
  for (const auto& b : grads.biases) total += b.size();
  Eigen::VectorXd flat(total);
  Eigen::Index pos = 0;
  for (size_t i = 0; i < grads.weights.size(); ++i) {
    const auto& w = grads.weights[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat(pos++) = w(r, c);
    const auto& b = grads.biases[i];
    for (Eigen::Index r = 0; r < b.size(); ++r) flat(pos++) = b(r);
  }
  return flat;
}

Eigen::VectorXd flatten_parameters(const ToyGuardModel& model) {
  Gradients view;
  view.weights = model.weights;
  view.biases = model.biases;
  return flatten(view);
}

void unflatten_parameters(ToyGuardModel& model, const Eigen::VectorXd& theta) {
  Eigen::Index pos = 0;
  for (size_t i = 0; i < model.weights.size(); ++i) {
    auto& w = model.weights[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = theta(pos++);
    auto& b = model.biases[i];
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = theta(pos++);
  }
  if (pos != theta.size())
    throw std::invalid_argument("flat parameter vector has wrong length");
}

ModelSnapshot snapshot(const ToyGuardModel& model, std::string snapshot_id) {
  return ModelSnapshot{model, std::move(snapshot_id)};
}

ForwardCache anchor_forward(const ModelSnapshot& snap,
                            const Eigen::MatrixXd& inputs) {
  return forward_with_probes(snap.params, inputs);
}

}  // namespace fwssr
