#pragma once

// Lanczos-based kernels for Hermitian operators exposed through
// `op.apply(x, y)` (y = H x) and `op.dim()`: extremal eigenpairs and the
// action of exp(-i tau H) on a vector.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mel/error.hpp"

namespace mel::krylov {

using Complex = std::complex<double>;

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  int iterations = 0;
};

struct LanczosOptions {
  double tolerance = 1e-8;  ///< on ||H x - E x||
  int max_krylov = 120;
  int max_restarts = 60;
};

namespace detail {

template <class Basis, class Vec>
void orthogonalize(const Basis& v, int k, Vec& w) {
  // Two passes of classical Gram-Schmidt.
  for (int pass = 0; pass < 2; ++pass) {
    if (k == 0) break;
    const auto coeff = (v.leftCols(k).adjoint() * w).eval();
    w.noalias() -= v.leftCols(k) * coeff;
  }
}

}  // namespace detail

/// Lowest eigenpair of a real symmetric operator on the complement of
/// `locked` (orthonormal columns), by restarted Lanczos with full
/// reorthogonalization. The start vector is deterministic.
template <class Op>
EigenPair lowest_eigenpair(const Op& op, const Eigen::MatrixXd& locked = {}, const LanczosOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(op.dim());
  if (n == 0) throw ArgumentError("lowest_eigenpair: empty operator");
  const Eigen::Index n_locked = locked.cols();
  if (n_locked >= n) throw ArgumentError("lowest_eigenpair: no space left after deflation");

  auto project = [&](Eigen::VectorXd& w) {
    if (n_locked == 0) return;
    for (int pass = 0; pass < 2; ++pass) w.noalias() -= locked * (locked.transpose() * w).eval();
  };

  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.25 * std::sin(1.0 + 0.7 * static_cast<double>(i));
  project(x);
  x.normalize();

  const int kmax = static_cast<int>(std::min<Eigen::Index>(opt.max_krylov, n - n_locked));
  Eigen::MatrixXd v(n, kmax + 1);
  Eigen::VectorXd w(n), hx(n);
  EigenPair best;
  best.residual = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    std::vector<double> alpha, beta;
    v.col(0) = x;
    int k = 0;
    for (; k < kmax; ++k) {
      Eigen::VectorXd vk = v.col(k);
      op.apply(vk, w);
      project(w);
      alpha.push_back(vk.dot(w));
      detail::orthogonalize(v, k + 1, w);
      project(w);
      const double b = w.norm();
      beta.push_back(b);
      if (b < 1e-13) {
        ++k;
        break;
      }
      v.col(k + 1) = w / b;
    }
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    x = v.leftCols(m) * es.eigenvectors().col(0);
    project(x);
    x.normalize();
    op.apply(x, hx);
    project(hx);
    const double e = x.dot(hx);
    const double res = (hx - e * x).norm();
    best.value = e;
    best.vector = x;
    best.residual = res;
    best.iterations = restart + 1;
    if (res <= opt.tolerance) return best;
  }
  throw ConvergenceError("lowest_eigenpair: Lanczos did not converge", best.residual);
}

struct ExpmOptions {
  double tolerance = 1e-10;
  int max_krylov = 40;
  int max_substep_depth = 12;
};

struct ExpmStats {
  int substeps = 0;
  int max_dimension = 0;
  double error_estimate = 0.0;
};

namespace detail {

/// One Krylov attempt; returns false if the error estimate stays above tol.
template <class Op>
bool expm_attempt(const Op& op, const Eigen::VectorXcd& psi, double tau, const ExpmOptions& opt,
                  Eigen::VectorXcd& out, ExpmStats& stats) {
  const auto n = static_cast<Eigen::Index>(op.dim());
  const double nrm = psi.norm();
  if (nrm == 0.0) {
    out = psi;
    return true;
  }
  const int kmax = static_cast<int>(std::min<Eigen::Index>(opt.max_krylov, n));
  Eigen::MatrixXcd v(n, kmax + 1);
  v.col(0) = psi / nrm;
  std::vector<double> alpha, beta;
  Eigen::VectorXcd w(n);
  for (int k = 0; k < kmax; ++k) {
    Eigen::VectorXcd vk = v.col(k);
    op.apply(vk, w);
    alpha.push_back(vk.dot(w).real());
    orthogonalize(v, k + 1, w);
    const double b = w.norm();
    beta.push_back(b);
    const int m = k + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::MatrixXd& s = es.eigenvectors();
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(m);
    for (int j = 0; j < m; ++j) {
      const Complex ph = std::exp(Complex(0.0, -tau * es.eigenvalues()(j)));
      y += (ph * s(0, j)) * s.col(j).cast<Complex>();
    }
    const bool breakdown = b < 1e-13;
    const double err = breakdown ? 0.0 : b * std::abs(y(m - 1));
    if (err <= opt.tolerance || breakdown) {
      out = nrm * (v.leftCols(m) * y);
      stats.max_dimension = std::max(stats.max_dimension, m);
      stats.error_estimate = std::max(stats.error_estimate, err);
      return true;
    }
    if (k + 1 < kmax) v.col(k + 1) = w / b;
  }
  return false;
}

template <class Op>
void expm_recursive(const Op& op, const Eigen::VectorXcd& psi, double tau, const ExpmOptions& opt, int depth,
                    Eigen::VectorXcd& out, ExpmStats& stats) {
  if (expm_attempt(op, psi, tau, opt, out, stats)) {
    ++stats.substeps;
    return;
  }
  if (depth >= opt.max_substep_depth)
    throw ConvergenceError("krylov expm: step rejected at maximum subspace size", opt.tolerance);
  Eigen::VectorXcd mid;
  expm_recursive(op, psi, 0.5 * tau, opt, depth + 1, mid, stats);
  expm_recursive(op, mid, 0.5 * tau, opt, depth + 1, out, stats);
}

}  // namespace detail

/// exp(-i tau H) psi. A step whose Krylov error estimate exceeds the
/// tolerance at the maximum subspace size is rejected and split in halves.
template <class Op>
Eigen::VectorXcd expm_apply(const Op& op, const Eigen::VectorXcd& psi, double tau, const ExpmOptions& opt = {},
                            ExpmStats* stats = nullptr) {
  if (static_cast<std::size_t>(psi.size()) != op.dim())
    throw DimensionError("expm_apply: vector/operator mismatch", op.dim(), static_cast<std::size_t>(psi.size()));
  ExpmStats local;
  Eigen::VectorXcd out;
  detail::expm_recursive(op, psi, tau, opt, 0, out, local);
  if (stats) *stats = local;
  return out;
}

}  // namespace mel::krylov
