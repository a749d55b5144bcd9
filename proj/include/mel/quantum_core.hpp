#pragma once

// Dense complex linear algebra kernels shared by every physics module:
// density matrices, statevectors, explicit bipartitions, partial traces,
// entropies and state-distinguishability measures.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mel/error.hpp"

namespace mel {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

namespace tol {
inline constexpr double hermitian_rel = 1e-12;
inline constexpr double trace = 1e-10;
inline constexpr double negative_eigenvalue = 1e-10;
inline constexpr double eigenvalue_floor = 1e-14;
inline constexpr double norm = 1e-10;
}  // namespace tol

/// 0 ln 0 := 0.
inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

/// Shannon entropy in nats of a list of non-negative weights.
inline double shannon_entropy(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s -= xlogx(v);
  return s;
}

inline void require_finite(const ComplexMatrix& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite entry");
}

/// (M + M^dagger)/2; producers call this to remove rounding asymmetry.
inline ComplexMatrix hermitize(const ComplexMatrix& m) { return (m + m.adjoint()) * 0.5; }

namespace detail {

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Eigenvalues of a Hermitian matrix, descending, after the clamping policy:
/// values in [-1e-10, 1e-14) become 0, anything below -1e-10 is rejected.
inline std::vector<double> clamped_spectrum(const ComplexMatrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError(std::string(what) + ": eigensolver failed", 0.0);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  for (double& v : ev) {
    if (v < -tol::negative_eigenvalue)
      throw ValidationError(std::string(what) + ": negative eigenvalue " + std::to_string(v));
    if (v < tol::eigenvalue_floor) v = 0.0;
  }
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

}  // namespace detail

/// Hermitian, positive semidefinite, unit-trace matrix. The spectrum is
/// computed once at construction and reused by every entropy routine.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
      throw DimensionError("DensityMatrix must be square", static_cast<std::size_t>(m_.rows()),
                           static_cast<std::size_t>(m_.cols()));
    require_finite(m_, "DensityMatrix");
    const double scale = detail::max_abs(m_);
    const double asym = detail::max_abs(m_ - m_.adjoint());
    if (asym > tol::hermitian_rel * scale)
      throw ValidationError("DensityMatrix: not Hermitian (max |M - M^dagger| = " + std::to_string(asym) + ")");
    const double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > tol::trace)
      throw ValidationError("DensityMatrix: trace " + std::to_string(tr) + " differs from 1");
    m_ = hermitize(m_);
    spectrum_ = detail::clamped_spectrum(m_, "DensityMatrix");
  }

  static DensityMatrix from_pure(const ComplexVector& psi) {
    const double n = psi.norm();
    if (std::abs(n - 1.0) > tol::norm) throw ValidationError("from_pure: state is not normalized");
    return DensityMatrix(psi * psi.adjoint());
  }

  static DensityMatrix maximally_mixed(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return DensityMatrix(ComplexMatrix::Identity(n, n) / static_cast<double>(d));
  }

  static DensityMatrix diagonal(std::span<const double> p) {
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = p[i];
    return DensityMatrix(std::move(m));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const ComplexMatrix& matrix() const noexcept { return m_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// Descending, clamped eigenvalues.
  const std::vector<double>& eigenvalues() const noexcept { return spectrum_; }

  /// Tr rho^2.
  double purity() const { return m_.cwiseAbs2().sum(); }

 private:
  ComplexMatrix m_;
  std::vector<double> spectrum_;
};

/// Normalized amplitude vector with optional per-basis-state labels
/// (occupation numbers, charges, spin configurations).
class Statevector {
 public:
  explicit Statevector(ComplexVector amplitudes, std::vector<std::int64_t> labels = {})
      : amps_(std::move(amplitudes)), labels_(std::move(labels)) {
    if (amps_.size() == 0) throw ArgumentError("Statevector: empty amplitude vector");
    if (!amps_.allFinite()) throw ValidationError("Statevector: non-finite amplitude");
    const double n = amps_.norm();
    if (std::abs(n - 1.0) > tol::norm)
      throw ValidationError("Statevector: norm " + std::to_string(n) + " differs from 1");
    if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(amps_.size()))
      throw DimensionError("Statevector labels", static_cast<std::size_t>(amps_.size()), labels_.size());
  }

  /// Rescales to unit norm before validating.
  static Statevector normalized(ComplexVector v, std::vector<std::int64_t> labels = {}) {
    const double n = v.norm();
    if (!(n > 0.0)) throw ArgumentError("Statevector::normalized: zero vector");
    v /= n;
    return Statevector(std::move(v), std::move(labels));
  }

  static Statevector basis(std::size_t dim, std::size_t index) {
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return Statevector(std::move(v));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
  const ComplexVector& amplitudes() const noexcept { return amps_; }
  Complex operator[](Eigen::Index i) const { return amps_(i); }
  const std::vector<std::int64_t>& labels() const noexcept { return labels_; }

 private:
  ComplexVector amps_;
  std::vector<std::int64_t> labels_;
};

enum class Side { A, B };

/// Bijection between a composite basis index and a pair (a, b).
class Bipartition {
 public:
  struct Pair {
    std::size_t a;
    std::size_t b;
  };

  Bipartition(std::size_t dim_a, std::size_t dim_b, std::vector<Pair> embedding)
      : dim_a_(dim_a), dim_b_(dim_b), fwd_(std::move(embedding)) {
    if (dim_a_ == 0 || dim_b_ == 0) throw ArgumentError("Bipartition: dimensions must be positive");
    if (fwd_.size() != dim_a_ * dim_b_)
      throw DimensionError("Bipartition: dim_a * dim_b must equal composite dimension", dim_a_ * dim_b_, fwd_.size());
    inv_.assign(fwd_.size(), kUnset);
    for (std::size_t i = 0; i < fwd_.size(); ++i) {
      const auto [a, b] = fwd_[i];
      if (a >= dim_a_ || b >= dim_b_) throw ArgumentError("Bipartition: embedding index out of range");
      std::size_t& slot = inv_[a * dim_b_ + b];
      if (slot != kUnset) throw ArgumentError("Bipartition: embedding is not a bijection");
      slot = i;
    }
  }

  /// composite = a * dim_b + b.
  static Bipartition contiguous(std::size_t dim_a, std::size_t dim_b) {
    std::vector<Pair> e(dim_a * dim_b);
    for (std::size_t a = 0; a < dim_a; ++a)
      for (std::size_t b = 0; b < dim_b; ++b) e[a * dim_b + b] = {a, b};
    return Bipartition(dim_a, dim_b, std::move(e));
  }

  /// Two-level sites: composite bit q is site q. Bit k of the A index is
  /// sites_a[k]; the B index packs the remaining sites in ascending order.
  static Bipartition sites(unsigned n_sites, std::span<const unsigned> sites_a) {
    if (n_sites == 0 || n_sites > 30) throw ArgumentError("Bipartition::sites: unsupported site count");
    std::vector<bool> in_a(n_sites, false);
    for (unsigned s : sites_a) {
      if (s >= n_sites || in_a[s]) throw ArgumentError("Bipartition::sites: invalid site list");
      in_a[s] = true;
    }
    std::vector<unsigned> sites_b;
    for (unsigned s = 0; s < n_sites; ++s)
      if (!in_a[s]) sites_b.push_back(s);
    const std::size_t full = std::size_t{1} << n_sites;
    std::vector<Pair> e(full);
    for (std::size_t i = 0; i < full; ++i) {
      std::size_t a = 0, b = 0;
      for (std::size_t k = 0; k < sites_a.size(); ++k) a |= ((i >> sites_a[k]) & 1u) << k;
      for (std::size_t k = 0; k < sites_b.size(); ++k) b |= ((i >> sites_b[k]) & 1u) << k;
      e[i] = {a, b};
    }
    return Bipartition(std::size_t{1} << sites_a.size(), std::size_t{1} << sites_b.size(), std::move(e));
  }

  std::size_t dim_a() const noexcept { return dim_a_; }
  std::size_t dim_b() const noexcept { return dim_b_; }
  std::size_t composite_dim() const noexcept { return fwd_.size(); }
  Pair split(std::size_t composite) const { return fwd_[composite]; }
  std::size_t join(std::size_t a, std::size_t b) const { return inv_[a * dim_b_ + b]; }

 private:
  static constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::size_t dim_a_;
  std::size_t dim_b_;
  std::vector<Pair> fwd_;
  std::vector<std::size_t> inv_;
};

/// psi reshaped as the dim_a x dim_b coefficient matrix.
inline ComplexMatrix schmidt_matrix(const Statevector& state, const Bipartition& part) {
  if (state.dim() != part.composite_dim())
    throw DimensionError("schmidt_matrix: state/partition mismatch", part.composite_dim(), state.dim());
  ComplexMatrix psi(static_cast<Eigen::Index>(part.dim_a()), static_cast<Eigen::Index>(part.dim_b()));
  for (std::size_t i = 0; i < state.dim(); ++i) {
    const auto [a, b] = part.split(i);
    psi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = state[static_cast<Eigen::Index>(i)];
  }
  return psi;
}

inline DensityMatrix partial_trace(const Statevector& state, const Bipartition& part, Side keep) {
  const ComplexMatrix psi = schmidt_matrix(state, part);
  if (keep == Side::A) return DensityMatrix(hermitize(psi * psi.adjoint()));
  return DensityMatrix(hermitize((psi.adjoint() * psi).transpose()));
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const Bipartition& part, Side keep) {
  if (rho.dim() != part.composite_dim())
    throw DimensionError("partial_trace: density matrix/partition mismatch", part.composite_dim(), rho.dim());
  const std::size_t da = part.dim_a(), db = part.dim_b();
  const std::size_t dk = keep == Side::A ? da : db;
  const std::size_t dt = keep == Side::A ? db : da;
  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::size_t r = 0; r < dk; ++r)
    for (std::size_t c = 0; c < dk; ++c) {
      Complex acc = 0.0;
      for (std::size_t t = 0; t < dt; ++t) {
        const std::size_t i = keep == Side::A ? part.join(r, t) : part.join(t, r);
        const std::size_t j = keep == Side::A ? part.join(c, t) : part.join(t, c);
        acc += rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
    }
  return DensityMatrix(hermitize(out));
}

/// -Tr rho ln rho in nats.
inline double von_neumann_entropy(const DensityMatrix& rho) { return shannon_entropy(rho.eigenvalues()); }

/// ln Tr rho^q.
inline double log_trace_power(const DensityMatrix& rho, double q) {
  double s = 0.0;
  for (double l : rho.eigenvalues())
    if (l > 0.0) s += std::pow(l, q);
  return std::log(s);
}

/// (1/(1-q)) ln Tr rho^q for q > 0, q != 1.
inline double renyi_entropy(const DensityMatrix& rho, double q) {
  if (q == 1.0) throw ArgumentError("renyi_entropy: q = 1 is the von Neumann limit; call von_neumann_entropy");
  if (!(q > 0.0)) throw ArgumentError("renyi_entropy: order q must be positive");
  return log_trace_power(rho, q) / (1.0 - q);
}

namespace detail {
inline void require_same_dim(const DensityMatrix& a, const DensityMatrix& b, const char* what) {
  if (a.dim() != b.dim()) throw DimensionError(what, a.dim(), b.dim());
}
/// Tr(a b) for Hermitian a, b.
inline double trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a.array() * b.conjugate().array()).sum().real();
}
}  // namespace detail

/// Tr(ra rb) / sqrt(Tr ra^2 Tr rb^2).
inline double overlap(const DensityMatrix& ra, const DensityMatrix& rb) {
  detail::require_same_dim(ra, rb, "overlap");
  const double num = detail::trace_product(ra.matrix(), rb.matrix());
  return num / std::sqrt(ra.purity() * rb.purity());
}

struct HilbertSchmidt {
  double distance;    ///< sqrt(Tr (ra - rb)^2)
  double complement;  ///< 1 - distance
};

inline HilbertSchmidt hilbert_schmidt_distance(const DensityMatrix& ra, const DensityMatrix& rb) {
  detail::require_same_dim(ra, rb, "hilbert_schmidt_distance");
  const double d = std::sqrt((ra.matrix() - rb.matrix()).cwiseAbs2().sum());
  return {d, 1.0 - d};
}

inline double trace_distance(const DensityMatrix& ra, const DensityMatrix& rb) {
  detail::require_same_dim(ra, rb, "trace_distance");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(ra.matrix() - rb.matrix()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

struct EntanglementReport {
  std::vector<double> schmidt_eigenvalues;  ///< descending, zeros dropped
  double von_neumann = 0.0;
  std::map<double, double> renyi;
  double purity = 1.0;
  std::optional<std::map<int, std::vector<double>>> sector_spectra;

  static EntanglementReport from_spectrum(std::vector<double> eigenvalues, std::span<const double> renyi_orders) {
    EntanglementReport r;
    std::erase_if(eigenvalues, [](double v) { return v < tol::eigenvalue_floor; });
    std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
    r.schmidt_eigenvalues = std::move(eigenvalues);
    r.von_neumann = shannon_entropy(r.schmidt_eigenvalues);
    r.purity = 0.0;
    for (double l : r.schmidt_eigenvalues) r.purity += l * l;
    for (double q : renyi_orders) {
      if (q == 1.0 || !(q > 0.0)) throw ArgumentError("EntanglementReport: invalid Renyi order");
      double s = 0.0;
      for (double l : r.schmidt_eigenvalues) s += std::pow(l, q);
      r.renyi[q] = std::log(s) / (1.0 - q);
    }
    return r;
  }
};

/// Conserved-charge labels for the two factors of a bipartition.
struct ChargeLabels {
  std::vector<int> a;
  std::vector<int> b;
};

inline constexpr double kDefaultRenyiOrders[] = {0.5, 2.0, 3.0};

namespace detail {
/// Nonzero squared Schmidt coefficients of a coefficient block.
inline std::vector<double> block_spectrum(const ComplexMatrix& block) {
  if (block.size() == 0) return {};
  const ComplexMatrix gram = block.rows() <= block.cols() ? ComplexMatrix(block * block.adjoint())
                                                           : ComplexMatrix(block.adjoint() * block);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(gram), Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double v = es.eigenvalues()(i);
    if (v < -tol::negative_eigenvalue) throw ValidationError("entanglement spectrum: negative eigenvalue");
    if (v >= tol::eigenvalue_floor) out.push_back(v);
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}
}  // namespace detail

/// Schmidt spectrum, entropies and purity of the A side. With charge labels
/// the spectrum is resolved by the A-side charge; the state must then have
/// support on a single total charge.
inline EntanglementReport entanglement_report(const Statevector& state, const Bipartition& part,
                                              const std::optional<ChargeLabels>& charges = std::nullopt,
                                              std::span<const double> renyi_orders = kDefaultRenyiOrders) {
  const ComplexMatrix psi = schmidt_matrix(state, part);
  if (!charges) return EntanglementReport::from_spectrum(detail::block_spectrum(psi), renyi_orders);

  const ChargeLabels& q = *charges;
  if (q.a.size() != part.dim_a()) throw DimensionError("charge labels (A side)", part.dim_a(), q.a.size());
  if (q.b.size() != part.dim_b()) throw DimensionError("charge labels (B side)", part.dim_b(), q.b.size());

  std::optional<int> total;
  for (Eigen::Index a = 0; a < psi.rows(); ++a)
    for (Eigen::Index b = 0; b < psi.cols(); ++b) {
      if (std::abs(psi(a, b)) <= 1e-12) continue;
      const int t = q.a[static_cast<std::size_t>(a)] + q.b[static_cast<std::size_t>(b)];
      if (total && *total != t) throw ValidationError("entanglement_report: state is not in a definite charge sector");
      total = t;
    }

  std::map<int, std::vector<Eigen::Index>> rows_by_q;
  for (std::size_t a = 0; a < q.a.size(); ++a) rows_by_q[q.a[a]].push_back(static_cast<Eigen::Index>(a));
  std::map<int, std::vector<Eigen::Index>> cols_by_q;
  for (std::size_t b = 0; b < q.b.size(); ++b) cols_by_q[q.b[b]].push_back(static_cast<Eigen::Index>(b));

  std::map<int, std::vector<double>> sectors;
  std::vector<double> all;
  for (const auto& [qa, rows] : rows_by_q) {
    auto it = cols_by_q.find(*total - qa);
    if (it == cols_by_q.end()) continue;
    const auto& cols = it->second;
    ComplexMatrix block(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c)
        block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = psi(rows[r], cols[c]);
    auto spec = detail::block_spectrum(block);
    if (spec.empty()) continue;
    all.insert(all.end(), spec.begin(), spec.end());
    sectors.emplace(qa, std::move(spec));
  }
  EntanglementReport r = EntanglementReport::from_spectrum(std::move(all), renyi_orders);
  r.sector_spectra = std::move(sectors);
  return r;
}

}  // namespace mel
