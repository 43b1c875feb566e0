// regularizer.hpp — Fisher-weighted subspace penalty and its schedulers.
//
// The penalty anchors current activations to frozen anchor activations
// inside each layer's safety subspace, weighting directions by normalized
// diagonal Fisher estimates. Regularization strength follows an adaptive
// schedule driven by task/safety gradient conflict.

#ifndef FWSSR_REGULARIZER_HPP
#define FWSSR_REGULARIZER_HPP

#include <Eigen/Dense>
#include <vector>

#include "fwssr/geometry.hpp"

namespace fwssr {

inline constexpr double kLambdaMin = 1e-4;
inline constexpr double kLambdaMax = 1.0;

// Raw per-direction curvature weights for one probed layer, with EMA
// bookkeeping. Starts at the all-ones vector (uniform regularization).
struct FisherState {
  Eigen::VectorXd raw;
  double beta = 0.9;
  int update_period = 50;  // tau
  int steps_since_update = 0;
};

FisherState make_fisher_state(int k, double beta = 0.9, int update_period = 50);

// Scalar regularization strength with clip bounds and smoothing history.
struct LambdaState {
  double lambda = 0.1;
  double lambda0 = 0.1;
  int conflict_period = 20;
  double smooth_old = 0.95;
  double smooth_new = 0.05;
  double last_cosine = 0.0;  // s_t
};

// Penalty value plus the gradient of the (mean-over-samples) penalty with
// respect to each layer's current activations. grads[l] has the shape of
// current[l].data; anchor activations carry no gradient.
struct PenaltyResult {
  double value = 0.0;
  std::vector<double> per_layer;
  std::vector<Eigen::MatrixXd> grads;
};

// Sum over layers of the per-sample mean of || w ⊙ U (h_cur - h_anchor) ||^2.
// weights[l] must have length subspaces[l].k. Throws on layer-set mismatch.
PenaltyResult fwssr_penalty(const std::vector<SafetySubspace>& subspaces,
                            const std::vector<Eigen::VectorXd>& weights,
                            const std::vector<ActivationBatch>& current,
                            const std::vector<ActivationBatch>& anchor);

// Diagonal projected Fisher estimate: per-direction mean of (U h)^2.
Eigen::VectorXd estimate_fisher(const SafetySubspace& sub,
                                const ActivationBatch& acts);

// k * raw / sum(raw); output has mean 1. Sums at or below eps (including
// the all-zero vector) fall back to the all-ones vector. Negative entries
// are an error.
Eigen::VectorXd normalize_fisher(const Eigen::VectorXd& raw, double eps = kEps);

// F <- beta * F + (1 - beta) * fresh; resets the step counter.
FisherState ema_update(FisherState state, const Eigen::VectorXd& fresh);

// Cosine similarity between flattened gradient vectors; 0 if either is zero.
double gradient_conflict(const Eigen::VectorXd& task_grad,
                         const Eigen::VectorXd& safety_grad,
                         double eps = kEps);

// raw = clip(lambda * (1 - s/2), 1e-4, 1); lambda <- 0.95*lambda + 0.05*raw,
// re-clipped so the bound invariant survives smoothing.
LambdaState lambda_step(LambdaState state, double s);

}  // namespace fwssr

#endif  // FWSSR_REGULARIZER_HPP
