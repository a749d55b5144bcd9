#pragma once

// Number-phase duality on a truncated Fock space |0>, ..., |s> and the
// phase-averaging map.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mel/error.hpp"
#include "mel/quantum_core.hpp"

namespace mel {

/// Density matrix in the number basis.
class FockDensityMatrix {
 public:
  explicit FockDensityMatrix(DensityMatrix rho) : rho_(std::move(rho)) {}
  explicit FockDensityMatrix(ComplexMatrix m) : rho_(std::move(m)) {}

  static FockDensityMatrix from_pure(const ComplexVector& psi) { return FockDensityMatrix(DensityMatrix::from_pure(psi)); }

  /// s + 1.
  std::size_t cutoff() const noexcept { return rho_.dim(); }
  std::size_t truncation() const noexcept { return rho_.dim() - 1; }
  const DensityMatrix& density() const noexcept { return rho_; }
  const ComplexMatrix& matrix() const noexcept { return rho_.matrix(); }

  std::vector<double> populations() const {
    std::vector<double> p(cutoff());
    for (std::size_t n = 0; n < p.size(); ++n)
      p[n] = rho_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)).real();
    return p;
  }

 private:
  DensityMatrix rho_;
};

/// phi_m = phi0 + 2 pi m / (s + 1), m = 0..s.
class PhaseGrid {
 public:
  explicit PhaseGrid(std::size_t s, double phi0 = 0.0) : s_(s), phi0_(phi0) {
    if (!(phi0 >= 0.0 && phi0 < 2.0 * std::numbers::pi))
      throw ArgumentError("PhaseGrid: reference phase must lie in [0, 2 pi)");
  }

  std::size_t truncation() const noexcept { return s_; }
  std::size_t size() const noexcept { return s_ + 1; }
  double phi0() const noexcept { return phi0_; }
  double operator[](std::size_t m) const {
    return phi0_ + 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(s_ + 1);
  }
  std::vector<double> points() const {
    std::vector<double> p(size());
    for (std::size_t m = 0; m < p.size(); ++m) p[m] = (*this)[m];
    return p;
  }

 private:
  std::size_t s_;
  double phi0_;
};

/// |phi_m> = sum_n e^{i n phi_m} |n> / sqrt(s + 1).
inline Statevector pegg_barnett_state(const PhaseGrid& grid, std::size_t m) {
  if (m > grid.truncation()) throw ArgumentError("pegg_barnett_state: index exceeds truncation");
  const auto d = static_cast<Eigen::Index>(grid.size());
  ComplexVector v(d);
  const double norm = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index n = 0; n < d; ++n) v(n) = std::polar(norm, static_cast<double>(n) * grid[m]);
  return Statevector(std::move(v));
}

/// Unitary with rows <phi_m|: U(m, n) = e^{-i n phi_m} / sqrt(s + 1).
inline ComplexMatrix phase_transform_matrix(const PhaseGrid& grid) {
  const auto d = static_cast<Eigen::Index>(grid.size());
  ComplexMatrix u(d, d);
  const double norm = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index n = 0; n < d; ++n) u(m, n) = std::polar(norm, -static_cast<double>(n) * grid[static_cast<std::size_t>(m)]);
  return u;
}

/// psi(phi_m) = <phi_m|psi>.
inline ComplexVector number_to_phase(const ComplexVector& psi_n, const PhaseGrid& grid) {
  if (static_cast<std::size_t>(psi_n.size()) != grid.size())
    throw DimensionError("number_to_phase: coefficient count", grid.size(), static_cast<std::size_t>(psi_n.size()));
  return phase_transform_matrix(grid) * psi_n;
}

/// psi(n) = sum_m <n|phi_m> psi(phi_m).
inline ComplexVector phase_to_number(const ComplexVector& psi_phi, const PhaseGrid& grid) {
  if (static_cast<std::size_t>(psi_phi.size()) != grid.size())
    throw DimensionError("phase_to_number: coefficient count", grid.size(), static_cast<std::size_t>(psi_phi.size()));
  return phase_transform_matrix(grid).adjoint() * psi_phi;
}

/// Drops every coherence between different occupation numbers.
inline FockDensityMatrix dephase(const FockDensityMatrix& rho) {
  ComplexMatrix d = ComplexMatrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  d.diagonal() = rho.matrix().diagonal().real().cast<Complex>();
  return FockDensityMatrix(std::move(d));
}

/// Default number of quadrature phases, 4 (s + 1).
inline std::size_t default_quadrature_points(std::size_t cutoff) { return 4 * cutoff; }

/// Equally spaced phases phi0 + 2 pi k / K.
inline std::vector<double> uniform_phases(std::size_t count, double phi0 = 0.0) {
  if (count == 0) throw ArgumentError("uniform_phases: need at least one point");
  std::vector<double> p(count);
  for (std::size_t k = 0; k < count; ++k)
    p[k] = phi0 + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
  return p;
}

/// (1/K) sum_k e^{i phi_k n} rho e^{-i phi_k n} over a uniform grid of K
/// phases. Grids that are not equally spaced over one period are rejected;
/// K must exceed 2s for the average to cancel every coherence.
inline FockDensityMatrix dephase_quadrature(const FockDensityMatrix& rho, std::span<const double> phases) {
  const std::size_t k = phases.size();
  if (k < 1) throw ArgumentError("dephase_quadrature: empty phase grid");
  const double step = 2.0 * std::numbers::pi / static_cast<double>(k);
  for (std::size_t i = 1; i < k; ++i)
    if (std::abs(phases[i] - phases[i - 1] - step) > 1e-12 * std::max(1.0, std::abs(phases[i])))
      throw ArgumentError("dephase_quadrature: phase grid must be uniform over one period");
  const auto d = rho.matrix().rows();
  ComplexMatrix acc = ComplexMatrix::Zero(d, d);
  ComplexVector ph(d);
  for (double phi : phases) {
    for (Eigen::Index n = 0; n < d; ++n) ph(n) = std::polar(1.0, phi * static_cast<double>(n));
    acc += ph.asDiagonal() * rho.matrix() * ph.conjugate().asDiagonal();
  }
  acc /= static_cast<double>(k);
  return FockDensityMatrix(hermitize(acc));
}

inline FockDensityMatrix dephase_quadrature(const FockDensityMatrix& rho) {
  const auto phases = uniform_phases(default_quadrature_points(rho.cutoff()));
  return dephase_quadrature(rho, phases);
}

struct EntropyGain {
  double before;
  double after;
};

inline EntropyGain dephasing_entropy_gain(const FockDensityMatrix& rho) {
  const double before = von_neumann_entropy(rho.density());
  const auto p = rho.populations();
  return {before, shannon_entropy(p)};
}

/// Number spread and circular phase spread of a pure state. The phase
/// spread is sqrt(-2 ln R), R the mean resultant length of |psi(phi_m)|^2.
/// Descriptive only; no uncertainty bound is asserted.
struct NumberPhaseSpread {
  double number_stddev;
  double phase_circular_stddev;
};

inline NumberPhaseSpread number_phase_spread(const ComplexVector& psi_n, const PhaseGrid& grid) {
  const ComplexVector psi_phi = number_to_phase(psi_n, grid);
  const double norm = psi_n.squaredNorm();
  if (!(norm > 0.0)) throw ArgumentError("number_phase_spread: zero vector");
  double mean = 0.0, mean_sq = 0.0;
  for (Eigen::Index n = 0; n < psi_n.size(); ++n) {
    const double p = std::norm(psi_n(n)) / norm;
    mean += p * static_cast<double>(n);
    mean_sq += p * static_cast<double>(n) * static_cast<double>(n);
  }
  Complex resultant{0.0, 0.0};
  for (Eigen::Index m = 0; m < psi_phi.size(); ++m)
    resultant += (std::norm(psi_phi(m)) / norm) * std::polar(1.0, grid[static_cast<std::size_t>(m)]);
  const double r = std::min(1.0, std::abs(resultant));
  const double circ = r > 0.0 ? std::sqrt(-2.0 * std::log(r)) : std::numeric_limits<double>::infinity();
  return {std::sqrt(std::max(0.0, mean_sq - mean * mean)), circ};
}

}  // namespace mel
