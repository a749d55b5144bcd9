#pragma once

// Haar-random states, reduced Wishart spectra, Page entropies and
// Gibbs / energy-shell typicality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include "mel/error.hpp"
#include "mel/quantum_core.hpp"

namespace mel {

struct WishartSample {
  ComplexMatrix matrix_x;  ///< m x n, i.i.d. standard complex Gaussian
  DensityMatrix rho;       ///< X X^dagger / Tr X X^dagger
  std::vector<double> eigenvalues;
};

/// Owns its RNG. Not shareable across threads; clone with distinct seeds.
class HaarSampler {
 public:
  HaarSampler(std::size_t dim_a, std::size_t dim_b, std::uint64_t seed) : m_(dim_a), n_(dim_b), seed_(seed), rng_(seed) {
    if (dim_a == 0 || dim_b == 0) throw ArgumentError("HaarSampler: dimensions must be positive");
  }

  std::size_t dim_a() const noexcept { return m_; }
  std::size_t dim_b() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// m x n matrix of standard complex Gaussians, E|z|^2 = 1.
  ComplexMatrix gaussian_matrix(std::size_t rows, std::size_t cols) {
    ComplexMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const double s = std::sqrt(0.5);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = Complex(s * normal_(rng_), s * normal_(rng_));
    return x;
  }

  ComplexVector gaussian_vector(std::size_t dim) { return gaussian_matrix(dim, 1).col(0); }

 private:
  std::size_t m_, n_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Haar-random pure state on the m*n-dimensional composite space.
/// Composite index a*n + b (contiguous bipartition).
inline Statevector sample_haar_state(HaarSampler& sampler) {
  return Statevector::normalized(sampler.gaussian_vector(sampler.dim_a() * sampler.dim_b()));
}

inline WishartSample sample_wishart_reduced(HaarSampler& sampler) {
  ComplexMatrix x = sampler.gaussian_matrix(sampler.dim_a(), sampler.dim_b());
  ComplexMatrix w = x * x.adjoint();
  w /= w.trace().real();
  DensityMatrix rho(hermitize(w));
  std::vector<double> ev = rho.eigenvalues();
  return {std::move(x), std::move(rho), std::move(ev)};
}

/// Log-gas energy -sum_{i<j} 2 ln|l_i - l_j| - (n - m) sum_i ln l_i.
/// Returns +infinity for non-positive or coincident eigenvalues.
inline double coulomb_gas_energy(std::span<const double> eigenvalues, std::size_t m, std::size_t n) {
  if (eigenvalues.size() != m) throw DimensionError("coulomb_gas_energy: eigenvalue count", m, eigenvalues.size());
  if (m > n) throw ArgumentError("coulomb_gas_energy: requires m <= n");
  constexpr double inf = std::numeric_limits<double>::infinity();
  double e = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (!(eigenvalues[i] > 0.0)) return inf;
    e -= static_cast<double>(n - m) * std::log(eigenvalues[i]);
    for (std::size_t j = i + 1; j < eigenvalues.size(); ++j) {
      const double gap = std::abs(eigenvalues[i] - eigenvalues[j]);
      if (gap == 0.0) return inf;
      e -= 2.0 * std::log(gap);
    }
  }
  return e;
}

namespace detail {

inline constexpr std::uint64_t kDirectHarmonicLimit = 100'000'000;

/// sum_{k=lo+1}^{hi} 1/k, accumulated in extended precision.
inline long double harmonic_difference_ld(std::uint64_t lo, std::uint64_t hi) {
  if (hi <= lo) return 0.0L;
  if (hi > kDirectHarmonicLimit)
    return boost::math::digamma(static_cast<long double>(hi) + 1.0L) -
           boost::math::digamma(static_cast<long double>(lo) + 1.0L);
  long double sum = 0.0L, c = 0.0L;
  // Smallest terms first.
  for (std::uint64_t k = hi; k > lo; --k) {
    const long double y = 1.0L / static_cast<long double>(k) - c;
    const long double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

inline double harmonic_difference(std::uint64_t lo, std::uint64_t hi) {
  return static_cast<double>(harmonic_difference_ld(lo, hi));
}

inline void check_page_dims(std::size_t m, std::size_t n, const char* what) {
  if (m < 1 || n < 1) throw ArgumentError(std::string(what) + ": dimensions must be positive");
  if (m > n) throw ArgumentError(std::string(what) + ": formula holds for m <= n");
}

}  // namespace detail

/// Average entanglement entropy of an m-dimensional factor of a Haar state.
inline double page_entropy_exact(std::size_t m, std::size_t n) {
  detail::check_page_dims(m, n, "page_entropy_exact");
  // Subtract before rounding so small cases such as (2, 2) = 1/3 come out exact.
  return static_cast<double>(detail::harmonic_difference_ld(n, static_cast<std::uint64_t>(m) * n) -
                             static_cast<long double>(m - 1) / (2.0L * static_cast<long double>(n)));
}

/// ln m - m/(2n). An n >> m expansion: for m = 1 it gives -1/(2n) while the
/// exact value is 0.
inline double page_entropy_asymptotic(std::size_t m, std::size_t n) {
  detail::check_page_dims(m, n, "page_entropy_asymptotic");
  return std::log(static_cast<double>(m)) - static_cast<double>(m) / (2.0 * static_cast<double>(n));
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

inline MonteCarloEstimate mean_and_error(std::span<const double> xs) {
  if (xs.size() < 2) throw ArgumentError("mean_and_error: need at least two samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size())), xs.size()};
}

/// Entropies of `samples` reduced Wishart draws.
inline std::vector<double> sample_page_entropies(HaarSampler& sampler, std::size_t samples) {
  std::vector<double> s;
  s.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) s.push_back(shannon_entropy(sample_wishart_reduced(sampler).eigenvalues));
  return s;
}

inline MonteCarloEstimate monte_carlo_page(HaarSampler& sampler, std::size_t samples) {
  if (samples < 2) throw ArgumentError("monte_carlo_page: need at least two samples");
  const auto s = sample_page_entropies(sampler, samples);
  return mean_and_error(s);
}

namespace detail {

inline void require_hermitian(const ComplexMatrix& h, const char* what) {
  if (h.rows() != h.cols() || h.rows() == 0) throw ValidationError(std::string(what) + ": matrix must be square");
  require_finite(h, what);
  const double scale = std::max(1.0, max_abs(h));
  if (max_abs(h - h.adjoint()) > tol::hermitian_rel * scale)
    throw ValidationError(std::string(what) + ": matrix is not Hermitian");
}

}  // namespace detail

/// Negative beta is accepted and describes a population-inverted state.
struct GibbsSpec {
  ComplexMatrix hamiltonian;
  double beta = 1.0;
};

struct GibbsSpectrum {
  RealVector energies;
  ComplexMatrix vectors;
  RealVector weights;  ///< normalized Boltzmann weights
  double log_z = 0.0;
};

inline GibbsSpectrum gibbs_spectrum(const GibbsSpec& spec) {
  detail::require_hermitian(spec.hamiltonian, "gibbs_state");
  if (!std::isfinite(spec.beta)) throw ArgumentError("gibbs_state: beta must be finite");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(spec.hamiltonian));
  const RealVector& e = es.eigenvalues();
  const double ref = spec.beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
  RealVector w = (-spec.beta * (e.array() - ref)).exp();
  const double sum = w.sum();
  return {e, es.eigenvectors(), w / sum, -spec.beta * ref + std::log(sum)};
}

inline DensityMatrix gibbs_state(const GibbsSpec& spec) {
  const GibbsSpectrum g = gibbs_spectrum(spec);
  return DensityMatrix(hermitize(g.vectors * g.weights.cast<Complex>().asDiagonal() * g.vectors.adjoint()));
}

/// beta <H> + ln Z.
inline double thermo_entropy(const GibbsSpec& spec) {
  const GibbsSpectrum g = gibbs_spectrum(spec);
  return spec.beta * g.weights.dot(g.energies) + g.log_z;
}

/// Eigenvectors of H with energies in [e_min, e_max].
class EnergyShell {
 public:
  EnergyShell(const ComplexMatrix& hamiltonian, double e_min, double e_max) : e_min_(e_min), e_max_(e_max) {
    if (!(e_min < e_max)) throw ArgumentError("EnergyShell: requires e_min < e_max");
    detail::require_hermitian(hamiltonian, "EnergyShell");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(hamiltonian));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) >= e_min && es.eigenvalues()(i) <= e_max) keep.push_back(i);
    if (keep.empty()) throw ArgumentError("EnergyShell: no eigenvalues inside the window");
    basis_ = es.eigenvectors()(Eigen::all, keep);
    energies_ = es.eigenvalues()(keep);
    dim_ = static_cast<std::size_t>(hamiltonian.rows());
  }

  double e_min() const noexcept { return e_min_; }
  double e_max() const noexcept { return e_max_; }
  std::size_t projector_rank() const noexcept { return static_cast<std::size_t>(basis_.cols()); }
  std::size_t dim() const noexcept { return dim_; }
  const ComplexMatrix& basis() const noexcept { return basis_; }
  const RealVector& energies() const noexcept { return energies_; }

  /// P_R / d_R.
  DensityMatrix microcanonical_state() const {
    return DensityMatrix(hermitize(basis_ * basis_.adjoint() / static_cast<double>(basis_.cols())));
  }

 private:
  double e_min_, e_max_;
  std::size_t dim_ = 0;
  ComplexMatrix basis_;
  RealVector energies_;
};

struct TypicalityStats {
  double mean_distance = 0.0;
  double max_distance = 0.0;
  double std_distance = 0.0;
  std::size_t samples = 0;
  std::size_t projector_rank = 0;
};

/// Trace distance between Tr_E |psi><psi| for Haar states psi in the shell
/// and the reduced microcanonical state Tr_E(P_R / d_R).
inline TypicalityStats microcanonical_typicality(const EnergyShell& shell, const Bipartition& part, std::size_t samples,
                                                 std::uint64_t seed) {
  if (part.composite_dim() != shell.dim())
    throw DimensionError("microcanonical_typicality: partition", shell.dim(), part.composite_dim());
  if (samples == 0) throw ArgumentError("microcanonical_typicality: need at least one sample");
  const DensityMatrix omega = partial_trace(shell.microcanonical_state(), part, Side::A);
  HaarSampler rng(shell.projector_rank(), 1, seed);
  std::vector<double> d;
  d.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const ComplexVector c = rng.gaussian_vector(shell.projector_rank());
    const Statevector psi = Statevector::normalized(shell.basis() * c);
    d.push_back(trace_distance(partial_trace(psi, part, Side::A), omega));
  }
  TypicalityStats st;
  st.samples = samples;
  st.projector_rank = shell.projector_rank();
  for (double x : d) st.mean_distance += x;
  st.mean_distance /= static_cast<double>(samples);
  st.max_distance = *std::max_element(d.begin(), d.end());
  double ss = 0.0;
  for (double x : d) ss += (x - st.mean_distance) * (x - st.mean_distance);
  st.std_distance = samples > 1 ? std::sqrt(ss / static_cast<double>(samples - 1)) : 0.0;
  return st;
}

}  // namespace mel
