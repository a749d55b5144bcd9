#pragma once

// Sector statevectors of the lattice Schwinger model: ground states with
// static charges, real-time evolution with moving jet sources, centered
// subsystem entanglement and site-resolved observables.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mel/error.hpp"
#include "mel/quantum_core.hpp"
#include "mel/schwinger/krylov.hpp"
#include "mel/schwinger/lattice.hpp"

namespace mel::schwinger {

/// Amplitudes over the configurations of one total-charge sector.
class SectorState {
 public:
  SectorState(LatticeModel model, std::shared_ptr<const SectorBasis> basis, Eigen::VectorXcd amplitudes)
      : model_(model), basis_(std::move(basis)), amps_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amps_.size()) != basis_->size())
      throw DimensionError("SectorState: amplitude count", basis_->size(), static_cast<std::size_t>(amps_.size()));
    if (basis_->n_sites() != model_.n_sites)
      throw ArgumentError("SectorState: basis and model disagree on the site count");
    const double n = amps_.norm();
    if (std::abs(n - 1.0) > 1e-8) throw ValidationError("SectorState: state is not normalized");
  }

  const LatticeModel& model() const noexcept { return model_; }
  const SectorBasis& basis() const noexcept { return *basis_; }
  const std::shared_ptr<const SectorBasis>& basis_ptr() const noexcept { return basis_; }
  int total_charge() const noexcept { return basis_->total_charge(); }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amps_; }
  double norm() const { return amps_.norm(); }

  /// Embedding into the full 2^N spin space; labels are the configurations.
  Statevector to_full() const {
    const std::size_t full = std::size_t{1} << model_.n_sites;
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(full));
    for (std::size_t i = 0; i < basis_->size(); ++i)
      v(static_cast<Eigen::Index>(basis_->config(i))) = amps_(static_cast<Eigen::Index>(i));
    std::vector<std::int64_t> labels(full);
    for (std::size_t c = 0; c < full; ++c) labels[c] = static_cast<std::int64_t>(c);
    return Statevector::normalized(std::move(v), std::move(labels));
  }

 private:
  LatticeModel model_;
  std::shared_ptr<const SectorBasis> basis_;
  Eigen::VectorXcd amps_;
};

struct GroundState {
  SectorState state;
  double energy;
  double residual;
};

/// Lowest eigenvector in the sector, via restarted Lanczos (residual <= 1e-8).
inline GroundState ground_state(const LatticeModel& model, const ExternalChargeTrack& track = ExternalChargeTrack::none(),
                                int total_charge = 0, const krylov::LanczosOptions& opt = {}) {
  if (track.kind() == ExternalChargeTrack::Kind::jets)
    throw ArgumentError("ground_state: moving jet sources have no static ground state");
  HamiltonianBuilder builder(model, total_charge);
  const SectorHamiltonian h = builder.build(track, 0.0);
  if (h.dim() == 1) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
    return {SectorState(model, builder.basis(), v), h.diagonal()(0), 0.0};
  }
  krylov::EigenPair p = krylov::lowest_eigenpair(h, {}, opt);
  // Fix the global sign so that the largest component is positive.
  Eigen::Index imax = 0;
  p.vector.cwiseAbs().maxCoeff(&imax);
  if (p.vector(imax) < 0) p.vector = -p.vector;
  return {SectorState(model, builder.basis(), p.vector.cast<Complex>()), p.value, p.residual};
}

/// Gap between the two lowest Q = 0 eigenvalues of the source-free
/// Hamiltonian; used as the meson mass M_S for unit conversion.
inline double meson_mass(const LatticeModel& model, const krylov::LanczosOptions& opt = {}) {
  HamiltonianBuilder builder(model, 0);
  const SectorHamiltonian h = builder.build(FluxProfile::zero(model.n_links()));
  if (h.dim() < 2) throw ArgumentError("meson_mass: sector too small");
  const krylov::EigenPair e0 = krylov::lowest_eigenpair(h, {}, opt);
  Eigen::MatrixXd locked = e0.vector;
  const krylov::EigenPair e1 = krylov::lowest_eigenpair(h, locked, opt);
  return e1.value - e0.value;
}

struct EvolutionOptions {
  krylov::ExpmOptions krylov{};
  /// Split steps at source switching times so the piecewise-constant
  /// Hamiltonian is integrated exactly. Otherwise each step uses the
  /// Hamiltonian built from the step-averaged flux (second order in dt).
  bool split_at_switches = false;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SectorState> states;
};

using EvolutionObserver = std::function<void(double t, const SectorState&)>;

namespace detail {

inline double step_time(int k, int n_steps, double dt, double t_final) {
  return k == n_steps ? t_final : static_cast<double>(k) * dt;
}

inline Eigen::VectorXcd propagate_interval(const HamiltonianBuilder& builder, const ExternalChargeTrack& track,
                                           const Eigen::VectorXcd& psi, double t0, double t1,
                                           const EvolutionOptions& opt) {
  const LatticeModel& model = builder.model();
  if (!opt.split_at_switches) {
    const SectorHamiltonian h = builder.build(track.flux_average(model, t0, t1));
    return krylov::expm_apply(h, psi, t1 - t0, opt.krylov);
  }
  std::vector<double> cuts{t0};
  for (double s : track.switch_times(model, t0, t1)) cuts.push_back(s);
  cuts.push_back(t1);
  Eigen::VectorXcd v = psi;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b - a <= 0.0) continue;
    const SectorHamiltonian h = builder.build(track.flux_at(model, 0.5 * (a + b)));
    v = krylov::expm_apply(h, v, b - a, opt.krylov);
  }
  return v;
}

}  // namespace detail

/// Evolves from t = 0 to t_final in steps of dt, calling `observe` at
/// t = 0 and after every step. The final step is shortened to land on t_final.
inline void evolve(const SectorState& initial, const ExternalChargeTrack& track, double t_final, double dt,
                   const EvolutionObserver& observe, const EvolutionOptions& opt = {}) {
  if (!(dt > 0.0)) throw ArgumentError("evolve: dt must be positive");
  if (!(t_final >= 0.0)) throw ArgumentError("evolve: t_final must be non-negative");
  track.validate(initial.model());
  HamiltonianBuilder builder(initial.model(), initial.total_charge());
  const auto basis = initial.basis_ptr();
  const int n_steps = static_cast<int>(std::ceil(t_final / dt - 1e-9));
  Eigen::VectorXcd psi = initial.amplitudes();
  observe(0.0, initial);
  for (int k = 0; k < n_steps; ++k) {
    const double t0 = detail::step_time(k, n_steps, dt, t_final);
    const double t1 = detail::step_time(k + 1, n_steps, dt, t_final);
    psi = detail::propagate_interval(builder, track, psi, t0, t1, opt);
    observe(t1, SectorState(initial.model(), basis, psi));
  }
}

inline Trajectory evolve(const SectorState& initial, const ExternalChargeTrack& track, double t_final, double dt,
                         const EvolutionOptions& opt = {}) {
  Trajectory tr;
  evolve(
      initial, track, t_final, dt,
      [&](double t, const SectorState& s) {
        tr.times.push_back(t);
        tr.states.push_back(s);
      },
      opt);
  return tr;
}

/// Sites of the centered L-site subsystem.
inline std::vector<unsigned> centered_sites(int n_sites, int length) {
  std::vector<unsigned> s;
  for (int i = n_sites / 2 - length / 2; i < n_sites / 2 + length / 2; ++i) s.push_back(static_cast<unsigned>(i));
  return s;
}

/// Charge of every index of a Bipartition::sites factor built from `sites`.
inline std::vector<int> factor_charges(std::span<const unsigned> sites) {
  std::vector<int> q(std::size_t{1} << sites.size());
  for (std::size_t idx = 0; idx < q.size(); ++idx) {
    int c = 0;
    for (std::size_t k = 0; k < sites.size(); ++k) c += static_cast<int>((idx >> k) & 1u) - static_cast<int>(sites[k] % 2);
    q[idx] = c;
  }
  return q;
}

/// Entanglement of an arbitrary site subset with the rest, charge resolved.
inline EntanglementReport subsystem_report(const SectorState& state, std::span<const unsigned> sites_a) {
  const int n = state.model().n_sites;
  const Bipartition part = Bipartition::sites(static_cast<unsigned>(n), sites_a);
  std::vector<unsigned> sites_b;
  std::vector<bool> in_a(static_cast<std::size_t>(n), false);
  for (unsigned s : sites_a) in_a[s] = true;
  for (int s = 0; s < n; ++s)
    if (!in_a[static_cast<std::size_t>(s)]) sites_b.push_back(static_cast<unsigned>(s));
  ChargeLabels labels{factor_charges(sites_a), factor_charges(sites_b)};
  return entanglement_report(state.to_full(), part, labels);
}

/// Reduced density matrix of a site subset (A index packs sites_a in order).
inline DensityMatrix reduced_density_matrix(const SectorState& state, std::span<const unsigned> sites_a) {
  const Bipartition part = Bipartition::sites(static_cast<unsigned>(state.model().n_sites), sites_a);
  return partial_trace(state.to_full(), part, Side::A);
}

inline void check_subsystem_length(const LatticeModel& model, int length) {
  if (length <= 0 || length % 2 != 0) throw ArgumentError("centered subsystem: L must be positive and even");
  if (length > model.n_sites - 2) throw ArgumentError("centered subsystem: L must not exceed N - 2");
}

/// Central L sites versus the rest.
inline EntanglementReport centered_subsystem_report(const SectorState& state, int length) {
  check_subsystem_length(state.model(), length);
  const auto sites = centered_sites(state.model().n_sites, length);
  return subsystem_report(state, sites);
}

inline DensityMatrix centered_density_matrix(const SectorState& state, int length) {
  check_subsystem_length(state.model(), length);
  const auto sites = centered_sites(state.model().n_sites, length);
  return reduced_density_matrix(state, sites);
}

/// Left half of the chain versus the right half.
inline EntanglementReport half_chain_report(const SectorState& state) {
  std::vector<unsigned> left;
  for (int i = 0; i < state.model().n_sites / 2; ++i) left.push_back(static_cast<unsigned>(i));
  return subsystem_report(state, left);
}

struct SeparationPoint {
  int separation;
  double energy;
  double half_chain_entropy;
};

/// Ground-state energy and half-chain entropy for each static separation.
inline std::vector<SeparationPoint> half_chain_entropy_scan(const LatticeModel& model, std::span<const int> separations) {
  std::vector<SeparationPoint> out;
  for (int d : separations) {
    const auto track = ExternalChargeTrack::static_pair(d);
    track.validate(model);
    const GroundState gs = ground_state(model, track);
    out.push_back({d, gs.energy, half_chain_report(gs.state).von_neumann});
  }
  return out;
}

struct LocalObservables {
  std::vector<double> chiral_condensate;  ///< (-1)^n <(1 + Z_n)/2> / a per site
  std::vector<double> charge_density;     ///< <q_n> per site
  std::vector<double> electric_field;     ///< <L_l> per link, external flux included
  std::vector<double> energy_density;     ///< per site; bonds and links split evenly
  double total_energy = 0.0;
  double total_charge = 0.0;
};

/// Site-resolved expectation values under the given external flux.
inline LocalObservables local_observables(const SectorState& state, const FluxProfile& flux) {
  const LatticeModel& m = state.model();
  const SectorBasis& basis = state.basis();
  const int n = m.n_sites;
  const auto links = static_cast<std::size_t>(m.n_links());
  if (flux.mean.size() != links) throw DimensionError("local_observables: flux profile", links, flux.mean.size());

  LocalObservables o;
  std::vector<double> z(static_cast<std::size_t>(n), 0.0), field(links, 0.0), link_energy(links, 0.0),
      bond_energy(links, 0.0);
  const auto& amps = state.amplitudes();
  const HoppingOperator hop(basis, m.hopping());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double p = std::norm(amps(static_cast<Eigen::Index>(i)));
    const Config c = basis.config(i);
    for (int s = 0; s < n; ++s) z[static_cast<std::size_t>(s)] += p * (((c >> s) & 1u) ? 1.0 : -1.0);
    const auto f = dynamical_field(m, c);
    for (std::size_t l = 0; l < links; ++l) {
      field[l] += p * (f[l] + flux.mean[l]);
      link_energy[l] += p * m.electric_prefactor() * (f[l] * f[l] + 2.0 * f[l] * flux.mean[l] + flux.mean_sq[l]);
    }
    for (std::size_t k = hop.row_start[i]; k < hop.row_start[i + 1]; ++k) {
      const Complex term = std::conj(amps(static_cast<Eigen::Index>(i))) * hop.amplitude *
                           amps(static_cast<Eigen::Index>(hop.col[k]));
      bond_energy[static_cast<std::size_t>(hop.bond[k])] += term.real();
    }
  }
  o.chiral_condensate.resize(static_cast<std::size_t>(n));
  o.charge_density.resize(static_cast<std::size_t>(n));
  o.energy_density.assign(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    const auto u = static_cast<std::size_t>(s);
    const double sign = s % 2 == 0 ? 1.0 : -1.0;
    o.chiral_condensate[u] = sign * 0.5 * (1.0 + z[u]) / m.spacing;
    o.charge_density[u] = 0.5 * (z[u] + sign);
    o.energy_density[u] += 0.5 * m.fermion_mass * sign * z[u];
    o.total_charge += o.charge_density[u];
  }
  for (std::size_t l = 0; l < links; ++l) {
    const double e = link_energy[l] + bond_energy[l];
    o.energy_density[l] += 0.5 * e;
    o.energy_density[l + 1] += 0.5 * e;
  }
  o.electric_field = std::move(field);
  for (double e : o.energy_density) o.total_energy += e;
  return o;
}

inline LocalObservables local_observables(const SectorState& state, const ExternalChargeTrack& track, double t) {
  return local_observables(state, track.flux_at(state.model(), t));
}

}  // namespace mel::schwinger
