// geometry.hpp — safety-subspace extraction and latent-geometry metrics.
//
// A per-layer safety subspace is the span of the top-k right singular
// vectors of the class-centered activation matrix, augmented with scaled
// copies of the between-class mean difference. All drift metrics compare a
// current model snapshot against a frozen anchor on the same probe rows.

#ifndef FWSSR_GEOMETRY_HPP
#define FWSSR_GEOMETRY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fwssr {

// Default epsilon for every guarded division in the metric set.
inline constexpr double kEps = 1e-8;

enum class SnapshotTag { anchor, current };

// N x d matrix of per-sample hidden states at one layer of one snapshot.
struct ActivationBatch {
  int layer_index = 0;
  Eigen::MatrixXd data;  // rows = samples, columns = hidden units
  SnapshotTag tag = SnapshotTag::current;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
};

// Per-class first and second-order statistics of a labeled batch.
struct ClassStats {
  Eigen::VectorXd mean_harmful;
  Eigen::VectorXd mean_benign;
  double spread_harmful = 0.0;  // mean intra-class L2 distance to the mean
  double spread_benign = 0.0;
  Eigen::VectorXd delta_mu;  // mean_harmful - mean_benign
};

// Fixed k x d row-orthonormal basis per probed layer. Immutable once built.
struct SafetySubspace {
  int layer_index = 0;
  Eigen::MatrixXd basis;  // k x d, rows are directions
  int k = 0;
  double gamma = 0.0;
  int n_a = 0;
  std::string anchor_id;
};

// Per-layer record of all six latent metrics for one model condition.
struct GeometryReport {
  int layer_index = 0;
  double safety_drift = 0.0;
  double drift_ratio = 0.0;
  double cosine_sim = 0.0;
  double fisher_score = 0.0;
  double interclass_dist = 0.0;
  double cka = 0.0;
};

// Per-class means, spreads and delta_mu. labels[i] == 1 marks harmful rows.
// Throws "degenerate class partition" unless both classes are present.
ClassStats compute_class_stats(const ActivationBatch& acts,
                               const std::vector<int>& labels);

// Splits a labeled batch into its class-mean-centered harmful and benign
// row blocks (in original row order within each class).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> class_centered(
    const ActivationBatch& acts, const std::vector<int>& labels,
    const ClassStats& stats);

// Stacks [centered_h; centered_b; n_a copies of gamma * delta_mu^T].
Eigen::MatrixXd build_augmented(const ClassStats& stats,
                                const Eigen::MatrixXd& centered_h,
                                const Eigen::MatrixXd& centered_b,
                                double gamma, int n_a);

// Top-k right singular vectors of aug, rows ordered by descending singular
// value. Each row is sign-fixed so its largest-magnitude coordinate is
// positive. Throws if k exceeds min(rows, cols) or the basis fails the
// orthonormality check.
SafetySubspace extract_subspace(const Eigen::MatrixXd& aug, int k);

// Convenience: stats -> centering -> augmentation -> SVD in one call.
// n_a is clamped to min(n_a, number of harmful rows).
SafetySubspace extract_from_labeled(const ActivationBatch& acts,
                                    const std::vector<int>& labels, int k,
                                    double gamma, int n_a);

// Mean over samples of || basis * (h_cur - h_anchor) ||_2.
double safety_drift(const SafetySubspace& sub, const ActivationBatch& current,
                    const ActivationBatch& anchor);

// safety_drift / (mean total L2 change + eps). In [0, 1] up to eps slack.
double drift_ratio(const SafetySubspace& sub, const ActivationBatch& current,
                   const ActivationBatch& anchor, double eps = kEps);

// Mean per-sample cosine between current and anchor activations.
// Zero-norm rows contribute 0 (guarded denominator), not an error.
double activation_cosine(const ActivationBatch& current,
                         const ActivationBatch& anchor, double eps = kEps);

// ||mu_h - mu_b|| / (sigma_h + sigma_b + eps).
double fisher_score(const ClassStats& stats, double eps = kEps);

// ||mu_h - mu_b||.
double interclass_distance(const ClassStats& stats);

// Linear CKA between paired batches via biased HSIC on double-centered Gram
// matrices. Takes the first `subsample` indices of a seeded permutation
// (sorted, so current/anchor rows stay paired in original order); uses all
// rows when N <= subsample. Throws "CKA undefined" for N < 2.
double linear_cka(const ActivationBatch& current, const ActivationBatch& anchor,
                  int subsample, std::uint64_t seed);

// All six metrics for one layer of one condition against the anchor.
// Class statistics are computed from the current snapshot's activations.
GeometryReport evaluate_layer(const SafetySubspace& sub,
                              const ActivationBatch& current,
                              const ActivationBatch& anchor,
                              const std::vector<int>& labels, int cka_subsample,
                              std::uint64_t cka_seed, double eps = kEps);

}  // namespace fwssr

#endif  // FWSSR_GEOMETRY_HPP
