#include "fwssr/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fwssr/rng.hpp"

namespace fwssr {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_same_shape(const ActivationBatch& a, const ActivationBatch& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("activation batches have mismatched row counts");
  if (a.cols() != b.cols())
    throw std::invalid_argument("activation batches have mismatched widths");
}

// Biased HSIC estimator: trace(Kc * Lc) / (n-1)^2 on double-centered Grams.
double hsic_biased(const Eigen::MatrixXd& kc, const Eigen::MatrixXd& lc) {
  const double n = static_cast<double>(kc.rows());
  return kc.cwiseProduct(lc).sum() / ((n - 1.0) * (n - 1.0));
}

Eigen::MatrixXd double_center(const Eigen::MatrixXd& gram) {
  const Eigen::VectorXd row_mean = gram.rowwise().mean();
  const Eigen::VectorXd col_mean = gram.colwise().mean();
  const double grand = gram.mean();
  Eigen::MatrixXd centered = gram;
  centered.colwise() -= row_mean;
  centered.rowwise() -= col_mean.transpose();
  centered.array() += grand;
  return centered;
}

}  // namespace

ClassStats compute_class_stats(const ActivationBatch& acts,
                               const std::vector<int>& labels) {
  const Eigen::Index n = acts.rows();
  require(static_cast<Eigen::Index>(labels.size()) == n,
          "labels length must match batch rows");
  require(n >= 1 && acts.cols() >= 1, "empty activation batch");

  Eigen::Index n_h = 0;
  for (int y : labels) n_h += (y != 0);
  const Eigen::Index n_b = n - n_h;
  if (n_h == 0 || n_b == 0)
    throw std::invalid_argument("degenerate class partition");

  const Eigen::Index d = acts.cols();
  ClassStats stats;
  stats.mean_harmful = Eigen::VectorXd::Zero(d);
  stats.mean_benign = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<size_t>(i)] != 0)
      stats.mean_harmful += acts.data.row(i).transpose();
    else
      stats.mean_benign += acts.data.row(i).transpose();
  }
  stats.mean_harmful /= static_cast<double>(n_h);
  stats.mean_benign /= static_cast<double>(n_b);

  double sp_h = 0.0, sp_b = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<size_t>(i)] != 0)
      sp_h += (acts.data.row(i).transpose() - stats.mean_harmful).norm();
    else
      sp_b += (acts.data.row(i).transpose() - stats.mean_benign).norm();
  }
  stats.spread_harmful = sp_h / static_cast<double>(n_h);
  stats.spread_benign = sp_b / static_cast<double>(n_b);
  stats.delta_mu = stats.mean_harmful - stats.mean_benign;
  return stats;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> class_centered(
    const ActivationBatch& acts, const std::vector<int>& labels,
    const ClassStats& stats) {
  const Eigen::Index n = acts.rows();
  require(static_cast<Eigen::Index>(labels.size()) == n,
          "labels length must match batch rows");
  Eigen::Index n_h = 0;
  for (int y : labels) n_h += (y != 0);
  Eigen::MatrixXd ch(n_h, acts.cols());
  Eigen::MatrixXd cb(n - n_h, acts.cols());
  Eigen::Index ih = 0, ib = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<size_t>(i)] != 0)
      ch.row(ih++) = acts.data.row(i) - stats.mean_harmful.transpose();
    else
      cb.row(ib++) = acts.data.row(i) - stats.mean_benign.transpose();
  }
  return {std::move(ch), std::move(cb)};
}

Eigen::MatrixXd build_augmented(const ClassStats& stats,
                                const Eigen::MatrixXd& centered_h,
                                const Eigen::MatrixXd& centered_b,
                                double gamma, int n_a) {
  const Eigen::Index d = stats.delta_mu.size();
  require(centered_h.cols() == d && centered_b.cols() == d,
          "centered matrices disagree with stats dimension");
  require(gamma > 0.0, "gamma must be positive");
  require(n_a >= 0, "n_a must be nonnegative");

  Eigen::MatrixXd aug(centered_h.rows() + centered_b.rows() + n_a, d);
  aug.topRows(centered_h.rows()) = centered_h;
  aug.middleRows(centered_h.rows(), centered_b.rows()) = centered_b;
  for (int i = 0; i < n_a; ++i)
    aug.row(centered_h.rows() + centered_b.rows() + i) =
        gamma * stats.delta_mu.transpose();
  return aug;
}

SafetySubspace extract_subspace(const Eigen::MatrixXd& aug, int k) {
  require(k >= 1, "k must be positive");
  if (k > std::min(aug.rows(), aug.cols()))
    throw std::invalid_argument("k exceeds available rank");
  if (!aug.allFinite())
    throw std::invalid_argument("augmented matrix has non-finite entries");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(aug, Eigen::ComputeThinV);
  Eigen::MatrixXd basis = svd.matrixV().leftCols(k).transpose();  // k x d

  // Deterministic sign convention: largest-magnitude coordinate positive.
  for (Eigen::Index r = 0; r < basis.rows(); ++r) {
    Eigen::Index arg = 0;
    basis.row(r).cwiseAbs().maxCoeff(&arg);
    if (basis(r, arg) < 0.0) basis.row(r) = -basis.row(r);
  }

  const Eigen::MatrixXd gram = basis * basis.transpose();
  const double ortho_err =
      (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  if (!(ortho_err < 1e-6))
    throw std::runtime_error("SVD produced a non-orthonormal basis");

  SafetySubspace sub;
  sub.basis = std::move(basis);
  sub.k = k;
  return sub;
}

SafetySubspace extract_from_labeled(const ActivationBatch& acts,
                                    const std::vector<int>& labels, int k,
                                    double gamma, int n_a) {
  const ClassStats stats = compute_class_stats(acts, labels);
  auto [ch, cb] = class_centered(acts, labels, stats);
  const int n_a_eff = std::min<int>(n_a, static_cast<int>(ch.rows()));
  SafetySubspace sub =
      extract_subspace(build_augmented(stats, ch, cb, gamma, n_a_eff), k);
  sub.layer_index = acts.layer_index;
  sub.gamma = gamma;
  sub.n_a = n_a_eff;
  return sub;
}

double safety_drift(const SafetySubspace& sub, const ActivationBatch& current,
                    const ActivationBatch& anchor) {
  check_same_shape(current, anchor);
  if (current.cols() != sub.basis.cols())
    throw std::invalid_argument("subspace width disagrees with activations");
  const Eigen::MatrixXd diff = current.data - anchor.data;
  const Eigen::MatrixXd proj = diff * sub.basis.transpose();  // N x k
  return proj.rowwise().norm().mean();
}

double drift_ratio(const SafetySubspace& sub, const ActivationBatch& current,
                   const ActivationBatch& anchor, double eps) {
  const double drift = safety_drift(sub, current, anchor);
  const double total =
      (current.data - anchor.data).rowwise().norm().mean();
  return drift / (total + eps);
}

double activation_cosine(const ActivationBatch& current,
                         const ActivationBatch& anchor, double eps) {
  check_same_shape(current, anchor);
  const Eigen::Index n = current.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dot = current.data.row(i).dot(anchor.data.row(i));
    const double denom =
        current.data.row(i).norm() * anchor.data.row(i).norm() + eps;
    acc += dot / denom;
  }
  return acc / static_cast<double>(n);
}

double fisher_score(const ClassStats& stats, double eps) {
  return stats.delta_mu.norm() /
         (stats.spread_harmful + stats.spread_benign + eps);
}

double interclass_distance(const ClassStats& stats) {
  return stats.delta_mu.norm();
}

double linear_cka(const ActivationBatch& current, const ActivationBatch& anchor,
                  int subsample, std::uint64_t seed) {
  check_same_shape(current, anchor);
  const Eigen::Index n = current.rows();
  if (n < 2 || subsample < 2) throw std::invalid_argument("CKA undefined");

  Eigen::MatrixXd x, y;
  if (n <= subsample) {
    x = current.data;
    y = anchor.data;
  } else {
    SplitRng rng(seed);
    std::vector<int> perm = random_permutation(static_cast<int>(n), rng);
    perm.resize(static_cast<size_t>(subsample));
    std::sort(perm.begin(), perm.end());  // keep original row order
    x.resize(subsample, current.cols());
    y.resize(subsample, current.cols());
    for (int i = 0; i < subsample; ++i) {
      x.row(i) = current.data.row(perm[static_cast<size_t>(i)]);
      y.row(i) = anchor.data.row(perm[static_cast<size_t>(i)]);
    }
  }

  const Eigen::MatrixXd kc = double_center(x * x.transpose());
  const Eigen::MatrixXd lc = double_center(y * y.transpose());
  const double hxy = hsic_biased(kc, lc);
  const double hxx = hsic_biased(kc, kc);
  const double hyy = hsic_biased(lc, lc);

  // Constant batches center to an all-zero Gram; two trivial structures are
  // identical, one trivial vs one structured is maximally dissimilar.
  constexpr double kTiny = 1e-30;
  if (hxx < kTiny && hyy < kTiny) return 1.0;
  if (hxx < kTiny || hyy < kTiny) return 0.0;
  return hxy / std::sqrt(hxx * hyy);
}

GeometryReport evaluate_layer(const SafetySubspace& sub,
                              const ActivationBatch& current,
                              const ActivationBatch& anchor,
                              const std::vector<int>& labels, int cka_subsample,
                              std::uint64_t cka_seed, double eps) {
  GeometryReport rep;
  rep.layer_index = current.layer_index;
  rep.safety_drift = safety_drift(sub, current, anchor);
  rep.drift_ratio = drift_ratio(sub, current, anchor, eps);
  rep.cosine_sim = activation_cosine(current, anchor, eps);
  const ClassStats stats = compute_class_stats(current, labels);
  rep.fisher_score = fisher_score(stats, eps);
  rep.interclass_dist = interclass_distance(stats);
  rep.cka = linear_cka(current, anchor, cka_subsample, cka_seed);
  return rep;
}

}  // namespace fwssr
