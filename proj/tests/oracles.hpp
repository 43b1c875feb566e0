// oracles.hpp — independent reference implementations used only by tests.
//
// These deliberately avoid the library's code paths: the eigen solver is a
// hand-rolled cyclic Jacobi iteration (never Eigen's SVD), HSIC is computed
// from its definition with an explicit centering matrix, and the metric
// oracles are naive per-sample loops.

#ifndef FWSSR_TESTS_ORACLES_HPP
#define FWSSR_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace oracles {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues in descending order and eigenvectors as matching columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen_sym(
    Eigen::MatrixXd a, int max_sweeps = 100) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) < 1e-15 * std::max(1.0, a.norm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = a(order[static_cast<size_t>(i)], order[static_cast<size_t>(i)]);
    vectors.col(i) = v.col(order[static_cast<size_t>(i)]);
  }
  return {values, vectors};
}

// Central finite differences of a scalar function of a flat vector.
inline Eigen::VectorXd finite_diff(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double h = 1e-5) {
  Eigen::VectorXd g(x0.size());
  Eigen::VectorXd x = x0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x0(i)));
    x(i) = x0(i) + step;
    const double fp = f(x);
    x(i) = x0(i) - step;
    const double fm = f(x);
    x(i) = x0(i);
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

// From-definition biased HSIC with an explicit centering matrix.
inline double hsic_definition(const Eigen::MatrixXd& k,
                              const Eigen::MatrixXd& l) {
  const Eigen::Index n = k.rows();
  const Eigen::MatrixXd h =
      Eigen::MatrixXd::Identity(n, n) -
      Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const double nm1 = static_cast<double>(n) - 1.0;
  return (k * h * l * h).trace() / (nm1 * nm1);
}

inline double cka_definition(const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd k = x * x.transpose();
  const Eigen::MatrixXd l = y * y.transpose();
  const double hxy = hsic_definition(k, l);
  const double hxx = hsic_definition(k, k);
  const double hyy = hsic_definition(l, l);
  return hxy / std::sqrt(hxx * hyy);
}

// FNV-1a over the row-major bytes of a matrix (storage-order independent).
inline std::uint64_t checksum(const Eigen::MatrixXd& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::int64_t rows = m.rows(), cols = m.cols();
  mix(&rows, sizeof(rows));
  mix(&cols, sizeof(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      mix(&v, sizeof(v));
    }
  return h;
}

inline std::uint64_t checksum(const std::vector<int>& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int x : v) {
    const unsigned char* b = reinterpret_cast<const unsigned char*>(&x);
    for (size_t i = 0; i < sizeof(x); ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace oracles

#endif  // FWSSR_TESTS_ORACLES_HPP
