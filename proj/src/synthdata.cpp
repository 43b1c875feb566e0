#include "fwssr/synthdata.hpp"

#include <cmath>
#include <stdexcept>

#include "fwssr/rng.hpp"

namespace fwssr {

void validate(const SynthSpec& spec) {
  if (spec.d_in < 1) throw std::invalid_argument("invalid spec: d_in < 1");
  if (spec.n_per_class < 2)
    throw std::invalid_argument("invalid spec: n_per_class < 2");
  if (spec.concentration < 1 || spec.concentration > spec.d_in)
    throw std::invalid_argument("invalid spec: concentration outside [1, d_in]");
  if (spec.separation < 0.0)
    throw std::invalid_argument("invalid spec: negative separation");
  if (spec.noise_sigma <= 0.0)
    throw std::invalid_argument("invalid spec: noise_sigma <= 0");
}

Eigen::MatrixXd ProbeSet::rows_with_label(int label) const {
  Eigen::Index count = 0;
  for (int y : labels) count += (y == label);
  Eigen::MatrixXd out(count, inputs.cols());
  Eigen::Index r = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) out.row(r++) = inputs.row(static_cast<Eigen::Index>(i));
  return out;
}

ProbeSet gen_probe_set(const SynthSpec& spec) {
  validate(spec);
  SplitRng rng(mix_seed(spec.seed, "probe-set"));

  const int n = spec.n_per_class;
  const int d = spec.d_in;
  const double per_coord =
      spec.separation / std::sqrt(static_cast<double>(spec.concentration));
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(d);
  offset.head(spec.concentration).setConstant(0.5 * per_coord);

  Eigen::MatrixXd raw(2 * n, d);
  std::vector<int> raw_labels(static_cast<size_t>(2 * n));
  for (int i = 0; i < 2 * n; ++i) {
    const bool harmful = i < n;  // harmful block first, then benign
    for (int j = 0; j < d; ++j) {
      const double mu = harmful ? offset(j) : -offset(j);
      raw(i, j) = mu + spec.noise_sigma * rng.normal();
    }
    raw_labels[static_cast<size_t>(i)] = harmful ? 1 : 0;
  }

  const std::vector<int> perm = random_permutation(2 * n, rng);
  ProbeSet out;
  out.inputs.resize(2 * n, d);
  out.labels.resize(static_cast<size_t>(2 * n));
  for (int i = 0; i < 2 * n; ++i) {
    out.inputs.row(i) = raw.row(perm[static_cast<size_t>(i)]);
    out.labels[static_cast<size_t>(i)] =
        raw_labels[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  }
  return out;
}

TaskSet gen_task_set(const SynthSpec& spec, int n_tasks, double overlap) {
  validate(spec);
  if (n_tasks < 1) throw std::invalid_argument("invalid spec: n_tasks < 1");
  if (overlap < 0.0 || overlap > 1.0)
    throw std::invalid_argument("invalid spec: overlap outside [0, 1]");
  SplitRng rng(mix_seed(spec.seed, "task-set"));

  const int d = spec.d_in;
  const int c = spec.concentration;
  Eigen::VectorXd w_safe = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd w_rest = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < c; ++j) w_safe(j) = rng.normal();
  for (int j = c; j < d; ++j) w_rest(j) = rng.normal();
  w_safe.normalize();
  if (w_rest.norm() > 0.0) w_rest.normalize();

  Eigen::VectorXd w;
  if (c == d) {
    w = w_safe;  // no complement exists; every direction is a safety one
  } else {
    w = std::sqrt(overlap) * w_safe + std::sqrt(1.0 - overlap) * w_rest;
  }

  TaskSet out;
  out.direction = w;
  out.overlap = overlap;
  out.inputs.resize(n_tasks, d);
  out.labels.resize(static_cast<size_t>(n_tasks));
  for (int i = 0; i < n_tasks; ++i) {
    for (int j = 0; j < d; ++j) out.inputs(i, j) = rng.normal();
    out.labels[static_cast<size_t>(i)] = out.inputs.row(i).dot(w) >= 0.0 ? 1 : 0;
  }
  return out;
}

}  // namespace fwssr
