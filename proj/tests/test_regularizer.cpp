#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fwssr/regularizer.hpp"
#include "fwssr/rng.hpp"
#include "oracles.hpp"

using namespace fwssr;

namespace {

ActivationBatch batch_from(const Eigen::MatrixXd& m, int layer = 0) {
  ActivationBatch b;
  b.layer_index = layer;
  b.data = m;
  return b;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              SplitRng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

SafetySubspace make_subspace(const Eigen::MatrixXd& basis, int layer = 0) {
  SafetySubspace sub;
  sub.layer_index = layer;
  sub.basis = basis;
  sub.k = static_cast<int>(basis.rows());
  return sub;
}

}  // namespace

TEST_CASE("penalty vanishes at the anchor") {
  SplitRng rng(1);
  const Eigen::MatrixXd acts = random_matrix(5, 4, rng);
  const SafetySubspace sub = make_subspace(
      extract_subspace(random_matrix(6, 4, rng), 2).basis);
  const PenaltyResult res =
      fwssr_penalty({sub}, {Eigen::VectorXd::Ones(2)}, {batch_from(acts)},
                    {batch_from(acts)});
  CHECK(res.value == 0.0);
  CHECK(res.grads[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("penalty on a hand-worked single-sample case") {
  Eigen::MatrixXd basis(1, 2);
  basis << 1, 0;
  Eigen::MatrixXd anchor(1, 2), current(1, 2);
  anchor << 0, 0;
  current << 3, 4;
  const PenaltyResult res =
      fwssr_penalty({make_subspace(basis)}, {Eigen::VectorXd::Ones(1)},
                    {batch_from(current)}, {batch_from(anchor)});
  CHECK(res.value == doctest::Approx(9.0));
  // d/dh of ||U (h - a)||^2 = 2 U^T U (h - a) = (6, 0)
  CHECK(res.grads[0](0, 0) == doctest::Approx(6.0));
  CHECK(res.grads[0](0, 1) == doctest::Approx(0.0));
}

TEST_CASE("penalty gradient matches central finite differences") {
  SplitRng rng(1234);
  const Eigen::MatrixXd anchor = random_matrix(8, 6, rng);
  const Eigen::MatrixXd current = anchor + random_matrix(8, 6, rng);
  const SafetySubspace sub =
      extract_subspace(random_matrix(10, 6, rng), 3);
  Eigen::VectorXd weights(3);
  weights << 1.4, 0.2, 1.4;  // mean 1

  auto value_at = [&](const Eigen::VectorXd& flat) {
    Eigen::MatrixXd cur(8, 6);
    for (Eigen::Index i = 0; i < 8; ++i)
      for (Eigen::Index j = 0; j < 6; ++j) cur(i, j) = flat(i * 6 + j);
    return fwssr_penalty({sub}, {weights}, {batch_from(cur)},
                         {batch_from(anchor)})
        .value;
  };

  Eigen::VectorXd flat(48);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) flat(i * 6 + j) = current(i, j);

  const Eigen::VectorXd fd = oracles::finite_diff(value_at, flat);
  const PenaltyResult res = fwssr_penalty(
      {sub}, {weights}, {batch_from(current)}, {batch_from(anchor)});
  Eigen::VectorXd analytic(48);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 6; ++j)
      analytic(i * 6 + j) = res.grads[0](i, j);
  CHECK((analytic - fd).norm() / fd.norm() < 1e-4);
}

TEST_CASE("uniform weights reduce to the plain subspace anchor penalty") {
  SplitRng rng(5);
  const Eigen::MatrixXd anchor = random_matrix(7, 5, rng);
  const Eigen::MatrixXd current = anchor + random_matrix(7, 5, rng);
  const SafetySubspace sub = extract_subspace(random_matrix(9, 5, rng), 2);
  const PenaltyResult res =
      fwssr_penalty({sub}, {Eigen::VectorXd::Ones(2)}, {batch_from(current)},
                    {batch_from(anchor)});

  // Separately coded uniform penalty: mean_i ||U (h_i - a_i)||^2.
  double want = 0.0;
  for (int i = 0; i < 7; ++i) {
    double sq = 0.0;
    for (int r = 0; r < 2; ++r) {
      double proj = 0.0;
      for (int c = 0; c < 5; ++c)
        proj += sub.basis(r, c) * (current(i, c) - anchor(i, c));
      sq += proj * proj;
    }
    want += sq;
  }
  want /= 7.0;
  CHECK(std::abs(res.value - want) < 1e-12);
}

TEST_CASE("penalty is zero exactly when weighted projections vanish") {
  Eigen::MatrixXd basis(2, 3);
  basis << 1, 0, 0, 0, 1, 0;
  Eigen::VectorXd weights(2);
  weights << 0.0, 2.0;  // first direction unweighted

  Eigen::MatrixXd anchor = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd current(1, 3);
  current << 5, 0, 9;  // drift only in the unweighted and off-subspace dims
  const PenaltyResult zero =
      fwssr_penalty({make_subspace(basis)}, {weights}, {batch_from(current)},
                    {batch_from(anchor)});
  CHECK(zero.value == 0.0);

  current << 0, 0.1, 0;  // drift in the weighted direction
  const PenaltyResult pos =
      fwssr_penalty({make_subspace(basis)}, {weights}, {batch_from(current)},
                    {batch_from(anchor)});
  CHECK(pos.value > 0.0);
}

TEST_CASE("penalty rejects mismatched layer sets") {
  SplitRng rng(6);
  const SafetySubspace sub =
      extract_subspace(random_matrix(6, 4, rng), 2);
  const Eigen::MatrixXd acts = random_matrix(3, 4, rng);
  CHECK_THROWS_AS(
      fwssr_penalty({sub}, {Eigen::VectorXd::Ones(2)},
                    {batch_from(acts, 1)}, {batch_from(acts, 2)}),
      std::invalid_argument);
  CHECK_THROWS_AS(fwssr_penalty({sub}, {Eigen::VectorXd::Ones(5)},
                                {batch_from(acts)}, {batch_from(acts)}),
                  std::invalid_argument);
}

TEST_CASE("fisher estimate: zero, hand-worked and loop-oracle cases") {
  Eigen::MatrixXd basis(2, 2);
  basis << 1, 0, 0, 1;
  const SafetySubspace sub = make_subspace(basis);

  CHECK(estimate_fisher(sub, batch_from(Eigen::MatrixXd::Zero(4, 2)))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  Eigen::MatrixXd samples(2, 2);
  samples << 1, 0, 3, 0;
  const Eigen::VectorXd f = estimate_fisher(sub, batch_from(samples));
  CHECK(f(0) == doctest::Approx(5.0));  // mean of {1, 9}
  CHECK(f(1) == doctest::Approx(0.0));

  SplitRng rng(808);
  const Eigen::MatrixXd acts = random_matrix(16, 5, rng);
  const SafetySubspace sub5 = extract_subspace(random_matrix(8, 5, rng), 3);
  const Eigen::VectorXd got = estimate_fisher(sub5, batch_from(acts));
  for (int j = 0; j < 3; ++j) {
    double acc = 0.0;
    for (int i = 0; i < 16; ++i) {
      double proj = 0.0;
      for (int c = 0; c < 5; ++c) proj += sub5.basis(j, c) * acts(i, c);
      acc += proj * proj;
    }
    CHECK(std::abs(got(j) - acc / 16.0) < 1e-10);
  }
}

TEST_CASE("fisher normalization: scaling, fixed point, fallback, errors") {
  Eigen::VectorXd raw(3);
  raw << 1, 2, 3;
  const Eigen::VectorXd n = normalize_fisher(raw);
  CHECK(n(0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(n(1) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(n(2) == doctest::Approx(1.5).epsilon(1e-7));

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
  CHECK((normalize_fisher(ones) - ones).cwiseAbs().maxCoeff() < 1e-7);

  CHECK((normalize_fisher(Eigen::VectorXd::Zero(4)) - ones)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  Eigen::VectorXd neg(2);
  neg << 1, -1;
  CHECK_THROWS_AS(normalize_fisher(neg), std::invalid_argument);
}

TEST_CASE("normalized fisher mean is one for any nonzero input") {
  SplitRng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + rng.uniform_int(48);
    Eigen::VectorXd raw(k);
    for (int i = 0; i < k; ++i) raw(i) = std::abs(rng.normal()) * 10.0;
    CHECK(std::abs(normalize_fisher(raw).mean() - 1.0) < 1e-9);
  }
}

TEST_CASE("fisher EMA: arithmetic, fixed point, geometric convergence") {
  FisherState st = make_fisher_state(1, 0.9, 50);
  Eigen::VectorXd fresh(1);
  fresh << 2.0;
  st = ema_update(st, fresh);
  CHECK(st.raw(0) == doctest::Approx(1.1));
  CHECK(st.steps_since_update == 0);

  FisherState fixed = make_fisher_state(3, 0.9, 50);
  const Eigen::VectorXd same = fixed.raw;
  fixed = ema_update(fixed, same);
  CHECK((fixed.raw - same).cwiseAbs().maxCoeff() < 1e-15);

  FisherState conv = make_fisher_state(1, 0.9, 50);
  Eigen::VectorXd target(1);
  target << 7.0;
  double expected_gap = std::abs(conv.raw(0) - 7.0);
  for (int i = 0; i < 30; ++i) {
    conv = ema_update(conv, target);
    expected_gap *= 0.9;
    CHECK(std::abs(std::abs(conv.raw(0) - 7.0) - expected_gap) < 1e-12);
  }

  CHECK_THROWS_AS(ema_update(conv, Eigen::VectorXd::Ones(2)),
                  std::invalid_argument);
}

TEST_CASE("gradient conflict: identity, flip, orthogonality, zeros") {
  SplitRng rng(2);
  Eigen::VectorXd g(10);
  for (int i = 0; i < 10; ++i) g(i) = rng.normal();
  CHECK(gradient_conflict(g, g) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(gradient_conflict(g, (-g).eval()) ==
        doctest::Approx(-1.0).epsilon(1e-7));

  Eigen::VectorXd a = Eigen::VectorXd::Zero(4), b = Eigen::VectorXd::Zero(4);
  a(0) = 1;
  b(1) = 1;
  CHECK(gradient_conflict(a, b) == 0.0);
  CHECK(gradient_conflict(Eigen::VectorXd::Zero(4), b) == 0.0);
  CHECK_THROWS_AS(gradient_conflict(g, a), std::invalid_argument);
}

TEST_CASE("lambda step reproduces the worked examples") {
  LambdaState st;
  st.lambda = 0.1;
  LambdaState aligned = lambda_step(st, 1.0);
  CHECK(aligned.lambda == doctest::Approx(0.0975).epsilon(1e-12));
  CHECK(aligned.last_cosine == 1.0);

  LambdaState conflicted = lambda_step(st, -1.0);
  CHECK(conflicted.lambda == doctest::Approx(0.1025).epsilon(1e-12));

  st.lambda = 0.8;
  LambdaState clipped = lambda_step(st, -1.0);  // raw 1.2 clips to 1.0
  CHECK(clipped.lambda == doctest::Approx(0.81).epsilon(1e-12));
}

TEST_CASE("lambda never leaves its bounds under random walks") {
  SplitRng rng(404);
  for (int walk = 0; walk < 100; ++walk) {
    LambdaState st;
    st.lambda = kLambdaMin + (kLambdaMax - kLambdaMin) * rng.uniform();
    for (int i = 0; i < 1000; ++i) {
      st = lambda_step(st, rng.uniform(-1.0, 1.0));
      CHECK(st.lambda >= kLambdaMin);
      CHECK(st.lambda <= kLambdaMax);
    }
  }
}

TEST_CASE("lambda step is strictly decreasing in s on the unclipped region") {
  SplitRng rng(606);
  for (int trial = 0; trial < 200; ++trial) {
    const double lambda = 0.01 + 0.5 * rng.uniform();
    double s1 = rng.uniform(-1.0, 1.0);
    double s2 = rng.uniform(-1.0, 1.0);
    if (s1 > s2) std::swap(s1, s2);
    if (s2 - s1 < 1e-9) continue;
    // Keep both raw updates inside the clip bounds.
    const double r1 = lambda * (1.0 - 0.5 * s1);
    const double r2 = lambda * (1.0 - 0.5 * s2);
    if (r1 <= kLambdaMin || r1 >= kLambdaMax || r2 <= kLambdaMin ||
        r2 >= kLambdaMax)
      continue;
    LambdaState st;
    st.lambda = lambda;
    CHECK(lambda_step(st, s1).lambda > lambda_step(st, s2).lambda);
  }
}
