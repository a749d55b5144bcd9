#pragma once

// Thermal reference states of the source-free lattice Hamiltonian and the
// overlap / Hilbert-Schmidt thermometry of reduced density matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mel/error.hpp"
#include "mel/quantum_core.hpp"
#include "mel/schwinger/lattice.hpp"
#include "mel/schwinger/simulation.hpp"

namespace mel::schwinger {

/// 24 log-spaced inverse temperatures in [0.1, 10] (lattice units).
inline std::vector<double> default_beta_grid(std::size_t points = 24, double lo = 0.1, double hi = 10.0) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo * std::pow(hi / lo, points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1));
  return g;
}

struct ThermalReference {
  int n_thermal = 12;
  std::vector<double> beta_grid = default_beta_grid();
  int subsystem_length = 4;

  void validate() const {
    if (n_thermal < 2 || n_thermal % 2 != 0) throw ArgumentError("ThermalReference: n_thermal must be even");
    if (n_thermal > 14) throw CapabilityError("ThermalReference: dense thermal states support at most 14 sites");
    if (subsystem_length <= 0 || subsystem_length % 2 != 0 || subsystem_length > n_thermal)
      throw ArgumentError("ThermalReference: subsystem length must be even and at most n_thermal");
    if (beta_grid.empty()) throw ArgumentError("ThermalReference: empty beta grid");
    for (std::size_t i = 0; i < beta_grid.size(); ++i) {
      if (!(beta_grid[i] > 0.0)) throw ArgumentError("ThermalReference: beta values must be positive");
      if (i > 0 && !(beta_grid[i] > beta_grid[i - 1]))
        throw ArgumentError("ThermalReference: beta grid must be strictly increasing");
    }
  }

  /// The centered subsystem of the thermal chain starts on a site of the same
  /// sublattice as the centered subsystem of a chain of n_sites.
  void check_sublattice(int n_sites) const {
    if ((n_thermal / 2) % 2 != (n_sites / 2) % 2)
      throw ArgumentError("ThermalReference: n_thermal/2 and n_sites/2 must have equal parity so the centered "
                          "subsystems sit on the same staggered sublattice");
  }
};

struct ThermalSummary {
  double log_z;
  double mean_energy;
  double entropy;  ///< -sum w ln w over Gibbs weights
};

/// Full spectral decomposition of the source-free Hamiltonian on a small
/// chain, all charge sectors.
class ThermalEnsemble {
 public:
  struct Sector {
    std::shared_ptr<const SectorBasis> basis;
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;
  };

  explicit ThermalEnsemble(const LatticeModel& model) : model_(model) {
    model_.validate();
    if (model_.n_sites > 14) throw CapabilityError("ThermalEnsemble: dense path supports at most 14 sites");
    e_min_ = std::numeric_limits<double>::infinity();
    for (int q = -model_.n_sites / 2; q <= model_.n_sites / 2; ++q) {
      HamiltonianBuilder b(model_, q);
      const SectorHamiltonian h = b.build(FluxProfile::zero(model_.n_links()));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
      sectors_.push_back({b.basis(), es.eigenvalues(), es.eigenvectors()});
      e_min_ = std::min(e_min_, es.eigenvalues().minCoeff());
    }
  }

  const LatticeModel& model() const noexcept { return model_; }
  const std::vector<Sector>& sectors() const noexcept { return sectors_; }
  double ground_energy() const noexcept { return e_min_; }

  ThermalSummary summary(double beta) const {
    double z = 0.0, ez = 0.0;
    for (const auto& s : sectors_)
      for (Eigen::Index i = 0; i < s.energies.size(); ++i) {
        const double w = std::exp(-beta * (s.energies(i) - e_min_));
        z += w;
        ez += w * s.energies(i);
      }
    const double mean = ez / z;
    const double log_z = std::log(z) - beta * e_min_;
    double entropy = 0.0;
    for (const auto& s : sectors_)
      for (Eigen::Index i = 0; i < s.energies.size(); ++i) {
        const double w = std::exp(-beta * (s.energies(i) - e_min_)) / z;
        entropy -= xlogx(w);
      }
    return {log_z, mean, entropy};
  }

  /// Reduced Gibbs state on `sites_a` (bit k of the index is sites_a[k]).
  DensityMatrix reduced(double beta, std::span<const unsigned> sites_a) const {
    const std::size_t da = std::size_t{1} << sites_a.size();
    std::vector<bool> in_a(static_cast<std::size_t>(model_.n_sites), false);
    for (unsigned s : sites_a) in_a.at(s) = true;
    std::vector<unsigned> sites_b;
    for (int s = 0; s < model_.n_sites; ++s)
      if (!in_a[static_cast<std::size_t>(s)]) sites_b.push_back(static_cast<unsigned>(s));

    const double z = partition_shifted(beta);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(da), static_cast<Eigen::Index>(da));
    for (const auto& s : sectors_) {
      std::vector<Eigen::Index> active;
      for (Eigen::Index i = 0; i < s.energies.size(); ++i)
        if (std::exp(-beta * (s.energies(i) - e_min_)) / z > 1e-18) active.push_back(i);
      if (active.empty()) continue;
      Eigen::MatrixXd va = s.vectors(Eigen::all, active);
      for (std::size_t k = 0; k < active.size(); ++k)
        va.col(static_cast<Eigen::Index>(k)) *=
            std::sqrt(std::exp(-beta * (s.energies(active[k]) - e_min_)) / z);

      // Group configurations by their B part.
      std::vector<std::pair<std::size_t, std::pair<std::size_t, Eigen::Index>>> keyed;  // (b, (a, row))
      keyed.reserve(s.basis->size());
      for (std::size_t i = 0; i < s.basis->size(); ++i) {
        const Config c = s.basis->config(i);
        std::size_t a = 0, b = 0;
        for (std::size_t k = 0; k < sites_a.size(); ++k) a |= ((c >> sites_a[k]) & 1u) << k;
        for (std::size_t k = 0; k < sites_b.size(); ++k) b |= ((c >> sites_b[k]) & 1u) << k;
        keyed.push_back({b, {a, static_cast<Eigen::Index>(i)}});
      }
      std::sort(keyed.begin(), keyed.end());
      for (std::size_t lo = 0; lo < keyed.size();) {
        std::size_t hi = lo;
        while (hi < keyed.size() && keyed[hi].first == keyed[lo].first) ++hi;
        std::vector<Eigen::Index> rows, as;
        for (std::size_t k = lo; k < hi; ++k) {
          as.push_back(static_cast<Eigen::Index>(keyed[k].second.first));
          rows.push_back(keyed[k].second.second);
        }
        const Eigen::MatrixXd m = va(rows, Eigen::all);
        const Eigen::MatrixXd g = m * m.transpose();
        for (std::size_t r = 0; r < as.size(); ++r)
          for (std::size_t c = 0; c < as.size(); ++c)
            rho(as[r], as[c]) += g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        lo = hi;
      }
    }
    const double tr = rho.trace();
    return DensityMatrix(hermitize(rho.cast<Complex>() / tr));
  }

  DensityMatrix centered(double beta, int length) const {
    const auto sites = centered_sites(model_.n_sites, length);
    return reduced(beta, sites);
  }

  /// Dense Gibbs state of the whole chain (all sectors), 2^N x 2^N.
  DensityMatrix full_density_matrix(double beta) const {
    if (model_.n_sites > 12) throw CapabilityError("full_density_matrix: at most 12 sites");
    const auto full = static_cast<Eigen::Index>(std::size_t{1} << model_.n_sites);
    const double z = partition_shifted(beta);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(full, full);
    for (const auto& s : sectors_) {
      Eigen::MatrixXd scaled = s.vectors;
      for (Eigen::Index i = 0; i < scaled.cols(); ++i)
        scaled.col(i) *= std::exp(-beta * (s.energies(i) - e_min_)) / z;
      const Eigen::MatrixXd block = scaled * s.vectors.transpose();
      for (std::size_t r = 0; r < s.basis->size(); ++r)
        for (std::size_t c = 0; c < s.basis->size(); ++c)
          rho(s.basis->config(r), s.basis->config(c)) = block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    return DensityMatrix(hermitize(rho.cast<Complex>()));
  }

  /// Gibbs-averaged site observables: the chiral condensate and energy
  /// density, computed eigenstate by eigenstate.
  LocalObservables observables(double beta) const {
    const double z = partition_shifted(beta);
    LocalObservables acc;
    bool first = true;
    for (const auto& s : sectors_)
      for (Eigen::Index i = 0; i < s.energies.size(); ++i) {
        const double w = std::exp(-beta * (s.energies(i) - e_min_)) / z;
        if (w < 1e-16) continue;
        const SectorState st(model_, s.basis, s.vectors.col(i).cast<Complex>());
        const LocalObservables o = local_observables(st, FluxProfile::zero(model_.n_links()));
        if (first) {
          acc = scaled(o, w);
          first = false;
        } else {
          add(acc, o, w);
        }
      }
    return acc;
  }

 private:
  double partition_shifted(double beta) const {
    double z = 0.0;
    for (const auto& s : sectors_) z += (-beta * (s.energies.array() - e_min_)).exp().sum();
    return z;
  }
  static void add_vec(std::vector<double>& a, const std::vector<double>& b, double w) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += w * b[i];
  }
  static LocalObservables scaled(const LocalObservables& o, double w) {
    LocalObservables r = o;
    for (auto* v : {&r.chiral_condensate, &r.charge_density, &r.electric_field, &r.energy_density})
      for (double& x : *v) x *= w;
    r.total_energy *= w;
    r.total_charge *= w;
    return r;
  }
  static void add(LocalObservables& a, const LocalObservables& o, double w) {
    add_vec(a.chiral_condensate, o.chiral_condensate, w);
    add_vec(a.charge_density, o.charge_density, w);
    add_vec(a.electric_field, o.electric_field, w);
    add_vec(a.energy_density, o.energy_density, w);
    a.total_energy += w * o.total_energy;
    a.total_charge += w * o.total_charge;
  }

  LatticeModel model_;
  std::vector<Sector> sectors_;
  double e_min_;
};

inline LatticeModel thermal_model(const ThermalReference& ref, const LatticeModel& model) {
  LatticeModel m = model;
  m.n_sites = ref.n_thermal;
  return m;
}

/// Gibbs state of the source-free n_thermal-site chain reduced to its
/// central L sites.
inline DensityMatrix thermal_reference_state(const ThermalReference& ref, const LatticeModel& model, double beta) {
  ref.validate();
  if (!(beta > 0.0)) throw ArgumentError("thermal_reference_state: beta must be positive");
  const ThermalEnsemble ens(thermal_model(ref, model));
  return ens.centered(beta, ref.subsystem_length);
}

/// Reduced thermal states for every grid point, built once.
class ThermalReferenceSet {
 public:
  ThermalReferenceSet(const ThermalReference& ref, const LatticeModel& model) : ref_(ref) {
    ref_.validate();
    const double lo = ref_.beta_grid.front(), hi = ref_.beta_grid.back();
    if (hi / lo < 10.0 - 1e-9) throw ArgumentError("thermometry: beta grid must span at least a decade");
    const ThermalEnsemble ens(thermal_model(ref_, model));
    for (double b : ref_.beta_grid) states_.push_back(ens.centered(b, ref_.subsystem_length));
  }

  const ThermalReference& reference() const noexcept { return ref_; }
  const std::vector<double>& betas() const noexcept { return ref_.beta_grid; }
  const std::vector<DensityMatrix>& states() const noexcept { return states_; }

 private:
  ThermalReference ref_;
  std::vector<DensityMatrix> states_;
};

struct ThermometryPoint {
  double label = 0.0;  ///< time or separation
  double best_beta_overlap = 0.0;  ///< grid argmax
  double best_beta_hs = 0.0;
  double refined_beta_overlap = 0.0;  ///< parabola through the maximum and its neighbours, in ln(beta)
  double refined_beta_hs = 0.0;
  double overlap_at_max = 0.0;  ///< the metric at its maximum
  double hs_complement_at_max = 0.0;
  double purity_ratio = 0.0;  ///< Pur(rho_A) / Pur(rho_beta*) at the overlap maximum
  bool overlap_edge = false;  ///< maximum on a grid boundary: temperature unresolved
  bool hs_edge = false;
};

struct Thermometry {
  std::vector<ThermometryPoint> points;
};

namespace detail {

/// Vertex in ln(beta) of the parabola through the grid maximum and its two
/// neighbours; the grid value itself on an edge.
inline double refine_log_peak(std::span<const double> betas, std::span<const double> metric, std::size_t i) {
  if (i == 0 || i + 1 >= betas.size()) return betas[i];
  const double x0 = std::log(betas[i - 1]), x1 = std::log(betas[i]), x2 = std::log(betas[i + 1]);
  const double y0 = metric[i - 1], y1 = metric[i], y2 = metric[i + 1];
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double curv = (d12 - d01) / (x2 - x0);
  if (!(curv < 0.0)) return betas[i];
  const double x = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
  return std::exp(std::clamp(x, x0, x2));
}

}  // namespace detail

inline ThermometryPoint thermometry_point(const DensityMatrix& rho, const ThermalReferenceSet& refs, double label) {
  const auto& st = refs.states();
  if (rho.dim() != st.front().dim()) throw DimensionError("thermometry: subsystem dimension", st.front().dim(), rho.dim());
  ThermometryPoint p;
  p.label = label;
  std::size_t io = 0, ih = 0;
  double bo = -std::numeric_limits<double>::infinity(), bh = bo;
  std::vector<double> fo(st.size()), fh(st.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    fo[i] = overlap(rho, st[i]);
    fh[i] = hilbert_schmidt_distance(rho, st[i]).complement;
    if (fo[i] > bo) bo = fo[i], io = i;
    if (fh[i] > bh) bh = fh[i], ih = i;
  }
  const auto& betas = refs.betas();
  p.best_beta_overlap = betas[io];
  p.best_beta_hs = betas[ih];
  p.refined_beta_overlap = detail::refine_log_peak(betas, fo, io);
  p.refined_beta_hs = detail::refine_log_peak(betas, fh, ih);
  p.overlap_at_max = bo;
  p.hs_complement_at_max = bh;
  p.purity_ratio = rho.purity() / st[io].purity();
  p.overlap_edge = betas.size() == 1 || io == 0 || io + 1 == betas.size();
  p.hs_edge = betas.size() == 1 || ih == 0 || ih + 1 == betas.size();
  return p;
}

inline Thermometry thermometry_scan(std::span<const DensityMatrix> states, std::span<const double> labels,
                                    const ThermalReferenceSet& refs) {
  if (states.size() != labels.size()) throw DimensionError("thermometry_scan: labels", states.size(), labels.size());
  Thermometry t;
  for (std::size_t i = 0; i < states.size(); ++i) t.points.push_back(thermometry_point(states[i], refs, labels[i]));
  return t;
}

/// Inverse temperature at which a thermal expectation curve (sampled on
/// `betas`) matches `value`, by linear interpolation between bracketing grid
/// points; nullopt if the value lies outside the sampled range.
inline std::optional<double> observable_beta(double value, std::span<const double> betas,
                                             std::span<const double> thermal_values) {
  if (betas.size() != thermal_values.size() || betas.size() < 2)
    throw DimensionError("observable_beta: grid sizes", betas.size(), thermal_values.size());
  for (std::size_t i = 0; i + 1 < betas.size(); ++i) {
    const double a = thermal_values[i], b = thermal_values[i + 1];
    if ((value - a) * (value - b) <= 0.0 && a != b) {
      const double f = (value - a) / (b - a);
      return betas[i] + f * (betas[i + 1] - betas[i]);
    }
  }
  return std::nullopt;
}

}  // namespace mel::schwinger
