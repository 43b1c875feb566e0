#include "fwssr/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fwssr {

FisherState make_fisher_state(int k, double beta, int update_period) {
  if (k <= 0) throw std::invalid_argument("fisher state needs k >= 1");
  FisherState st;
  st.raw = Eigen::VectorXd::Ones(k);
  st.beta = beta;
  st.update_period = update_period;
  st.steps_since_update = 0;
  return st;
}

PenaltyResult fwssr_penalty(const std::vector<SafetySubspace>& subspaces,
                            const std::vector<Eigen::VectorXd>& weights,
                            const std::vector<ActivationBatch>& current,
                            const std::vector<ActivationBatch>& anchor) {
  const size_t n_layers = subspaces.size();
  if (weights.size() != n_layers || current.size() != n_layers ||
      anchor.size() != n_layers)
    throw std::invalid_argument("penalty inputs cover mismatched layer sets");

  PenaltyResult result;
  result.per_layer.reserve(n_layers);
  result.grads.reserve(n_layers);

  for (size_t l = 0; l < n_layers; ++l) {
    const SafetySubspace& sub = subspaces[l];
    const Eigen::VectorXd& w = weights[l];
    const ActivationBatch& cur = current[l];
    const ActivationBatch& anc = anchor[l];
    if (cur.layer_index != sub.layer_index || anc.layer_index != sub.layer_index)
      throw std::invalid_argument("penalty inputs cover mismatched layer sets");
    if (w.size() != sub.basis.rows())
      throw std::invalid_argument("fisher weights disagree with subspace k");
    if (cur.rows() != anc.rows() || cur.cols() != anc.cols() ||
        cur.cols() != sub.basis.cols())
      throw std::invalid_argument("activation shapes disagree with subspace");

    const Eigen::Index n = cur.rows();
    const Eigen::MatrixXd diff = cur.data - anc.data;        // N x d
    const Eigen::MatrixXd proj = diff * sub.basis.transpose();  // N x k
    const Eigen::ArrayXXd weighted =
        proj.array().rowwise() * w.transpose().array();
    const double layer_value =
        weighted.square().rowwise().sum().mean();

    // d(mean_i ||w ⊙ U d_i||^2)/d h_cur = (2/N) U^T (w^2 ⊙ U d_i)
    const Eigen::ArrayXd w2 = w.array().square();
    const Eigen::MatrixXd scaled =
        (proj.array().rowwise() * w2.transpose()).matrix();
    Eigen::MatrixXd grad =
        (2.0 / static_cast<double>(n)) * scaled * sub.basis;  // N x d

    result.per_layer.push_back(layer_value);
    result.grads.push_back(std::move(grad));
    result.value += layer_value;
  }
  return result;
}

Eigen::VectorXd estimate_fisher(const SafetySubspace& sub,
                                const ActivationBatch& acts) {
  if (acts.cols() != sub.basis.cols())
    throw std::invalid_argument("activation width disagrees with subspace");
  const Eigen::MatrixXd proj = acts.data * sub.basis.transpose();  // N x k
  return proj.array().square().colwise().mean().transpose();
}

Eigen::VectorXd normalize_fisher(const Eigen::VectorXd& raw, double eps) {
  const int k = static_cast<int>(raw.size());
  if (k == 0) throw std::invalid_argument("empty fisher vector");
  if ((raw.array() < 0.0).any())
    throw std::invalid_argument("fisher weights must be nonnegative");
  // eps guards the degenerate-sum regime; estimates that small carry no
  // usable curvature signal, so they keep the uniform weights. Above the
  // guard the plain ratio keeps the output mean at exactly one.
  const double total = raw.sum();
  if (total <= eps) return Eigen::VectorXd::Ones(k);
  return static_cast<double>(k) * raw / total;
}

FisherState ema_update(FisherState state, const Eigen::VectorXd& fresh) {
  if (fresh.size() != state.raw.size())
    throw std::invalid_argument("fisher EMA shape mismatch");
  state.raw = state.beta * state.raw + (1.0 - state.beta) * fresh;
  state.steps_since_update = 0;
  return state;
}

double gradient_conflict(const Eigen::VectorXd& task_grad,
                         const Eigen::VectorXd& safety_grad, double eps) {
  if (task_grad.size() != safety_grad.size())
    throw std::invalid_argument("gradient vectors have mismatched lengths");
  const double na = task_grad.norm();
  const double nb = safety_grad.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return task_grad.dot(safety_grad) / (na * nb + eps);
}

LambdaState lambda_step(LambdaState state, double s) {
  const double raw =
      std::clamp(state.lambda * (1.0 - 0.5 * s), kLambdaMin, kLambdaMax);
  const double smoothed = state.smooth_old * state.lambda + state.smooth_new * raw;
  state.lambda = std::clamp(smoothed, kLambdaMin, kLambdaMax);
  state.last_cosine = s;
  return state;
}

}  // namespace fwssr
