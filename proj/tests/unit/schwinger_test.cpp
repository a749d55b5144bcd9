#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "generators.hpp"
#include "mel/schwinger/thermal.hpp"

using namespace mel;
using namespace mel::schwinger;
using mel::testing::Rng;

namespace {

LatticeModel model(int n, double mass = 0.25, double g = 0.5) {
  LatticeModel m;
  m.n_sites = n;
  m.fermion_mass = mass;
  m.coupling = g;
  return m;
}

double fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return std::norm(a.dot(b)); }

int count_above(const std::vector<double>& v, double floor) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), [&](double x) { return x > floor; }));
}

SectorState basis_state(const LatticeModel& m, const std::shared_ptr<const SectorBasis>& b, std::size_t i) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b->size()));
  v(static_cast<Eigen::Index>(i)) = 1;
  return SectorState(m, b, v);
}

}  // namespace

TEST(Lattice, ModelValidation) {
  EXPECT_THROW(model(7).validate(), ArgumentError);
  EXPECT_THROW(model(26).validate(), CapabilityError);
  EXPECT_THROW(model(8, -1.0).validate(), ArgumentError);
  EXPECT_THROW(model(8, 0.25, 0.0).validate(), ArgumentError);
  EXPECT_THROW(ExternalChargeTrack::static_pair(8).validate(model(8)), ArgumentError);
  EXPECT_THROW(ExternalChargeTrack::static_pair(-1), ArgumentError);
}

TEST(Lattice, SectorBasisSizes) {
  EXPECT_EQ(SectorBasis(8, 0).size(), 70u);
  EXPECT_EQ(SectorBasis(8, 1).size(), 56u);
  EXPECT_EQ(SectorBasis(8, 4).size(), 1u);
  EXPECT_THROW(SectorBasis(8, 5), ArgumentError);
  const SectorBasis b(10, -1);
  for (Config c : b.configs()) EXPECT_EQ(config_charge(c, 10), -1);
}

TEST(Lattice, GaussLawOnBasisStates) {
  const LatticeModel m = [] {
    auto r = model(10);
    r.theta_background = 0.7;
    return r;
  }();
  const auto track = ExternalChargeTrack::static_pair(3);
  const FluxProfile flux = track.flux_at(m, 0.0);
  HamiltonianBuilder b(m, 0);
  for (std::size_t i = 0; i < b.basis()->size(); i += 7) {
    const Config c = b.basis()->config(i);
    const auto field = dynamical_field(m, c);
    EXPECT_NEAR(field[0], 0.7 / (2 * std::numbers::pi) + site_charge(c, 0), 1e-15);
    const auto obs = local_observables(basis_state(m, b.basis(), i), flux);
    for (int l = 1; l < m.n_links(); ++l) {
      const auto u = static_cast<std::size_t>(l);
      EXPECT_DOUBLE_EQ(field[u] - field[u - 1], site_charge(c, l));
      EXPECT_NEAR(obs.electric_field[u] - obs.electric_field[u - 1],
                  site_charge(c, l) + flux.mean[u] - flux.mean[u - 1], 1e-14);
    }
  }
}

TEST(BuildHamiltonian, MasslessFreeSpectrumParticleHoleSymmetric) {
  const auto h = build_hamiltonian(model(8, 0.0, 1e-6), ExternalChargeTrack::none(), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
  const Eigen::VectorXd e = es.eigenvalues();
  for (Eigen::Index i = 0; i < e.size(); ++i) EXPECT_NEAR(e(i) + e(e.size() - 1 - i), 0.0, 1e-9);
}

TEST(BuildHamiltonian, HermitianAndSymmetric) {
  const auto h = build_hamiltonian(model(8), ExternalChargeTrack::static_pair(3), 0.0, 1);
  const Eigen::MatrixXd d = h.dense();
  EXPECT_EQ((d - d.transpose()).cwiseAbs().maxCoeff(), 0.0);
  Rng rng(1);
  const Eigen::VectorXcd x = mel::testing::random_state(rng, static_cast<Eigen::Index>(h.dim()));
  Eigen::VectorXcd y;
  h.apply(x, y);
  EXPECT_LT((y - d.cast<Complex>() * x).norm(), 1e-13);
}

TEST(BuildHamiltonian, CoincidentPairIsVacuum) {
  const LatticeModel m = model(10);
  const auto vac = build_hamiltonian(m, ExternalChargeTrack::none(), 0.0);
  const auto d0 = build_hamiltonian(m, ExternalChargeTrack::static_pair(0), 0.0);
  EXPECT_EQ((vac.dense() - d0.dense()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildHamiltonian, JetTurnOnChangesOnlyCentralLink) {
  const LatticeModel m = model(10);
  const auto jets = ExternalChargeTrack::jets();
  const FluxProfile before = jets.flux_at(m, 0.0), after = jets.flux_at(m, 1e-9);
  for (int l = 0; l < m.n_links(); ++l) {
    const auto u = static_cast<std::size_t>(l);
    EXPECT_EQ(before.mean[u], 0.0);
    EXPECT_EQ(after.mean[u], l == m.center_link() ? ExternalChargeTrack::kStringFlux : 0.0);
  }
  const auto h0 = build_hamiltonian(m, jets, 0.0), h1 = build_hamiltonian(m, jets, 1e-9);
  const Eigen::MatrixXd diff = h1.dense() - h0.dense();
  const double pref = m.electric_prefactor(), eps = ExternalChargeTrack::kStringFlux;
  for (std::size_t i = 0; i < h0.dim(); ++i) {
    const double lc = dynamical_field(m, h0.basis().config(i))[static_cast<std::size_t>(m.center_link())];
    EXPECT_NEAR(diff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)), pref * (2 * lc * eps + eps * eps),
                1e-13);
  }
  EXPECT_NEAR((diff - Eigen::MatrixXd(diff.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0, 0.0);
  EXPECT_THROW(build_hamiltonian(m, jets, -0.1), ArgumentError);
}

TEST(BuildHamiltonian, FluxAverageOverTurnOn) {
  const LatticeModel m = model(10);
  const auto jets = ExternalChargeTrack::jets();
  // Link center+1 switches on at t = a.
  const FluxProfile f = jets.flux_average(m, 0.8, 1.3);
  const auto next = static_cast<std::size_t>(m.center_link() + 1);
  EXPECT_NEAR(f.mean[next], -0.6, 1e-14);
  EXPECT_NEAR(f.mean_sq[next], 0.6, 1e-14);
  const auto times = jets.switch_times(m, 0.0, 3.5);
  EXPECT_EQ(times, (std::vector<double>{1.0, 2.0, 3.0}));
  const auto nearest = ExternalChargeTrack::jets(ExternalChargeTrack::Snapping::nearest);
  EXPECT_EQ(nearest.switch_times(m, 0.0, 2.0), (std::vector<double>{0.5, 1.5}));
}

TEST(GroundState, TwoSitesMatchDense) {
  for (double mass : {0.0, 0.25, 2.0}) {
    const LatticeModel m = model(2, mass);
    const auto gs = ground_state(m);
    const auto h = build_hamiltonian(m, ExternalChargeTrack::none(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
    EXPECT_NEAR(gs.energy, es.eigenvalues()(0), 1e-12);
    EXPECT_NEAR(fidelity(gs.state.amplitudes(), es.eigenvectors().col(0).cast<Complex>()), 1.0, 1e-12);
  }
}

TEST(GroundState, LanczosMatchesDenseAtEightSites) {
  const LatticeModel m = model(8);
  for (int d : {0, 2, 5}) {
    const auto track = ExternalChargeTrack::static_pair(d);
    const auto gs = ground_state(m, track);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_hamiltonian(m, track, 0.0).dense());
    EXPECT_NEAR(gs.energy, es.eigenvalues()(0), 1e-9);
    EXPECT_LE(gs.residual, 1e-8);
  }
  EXPECT_THROW(ground_state(m, ExternalChargeTrack::jets()), ArgumentError);
}

TEST(GroundState, CoincidentPairIsVacuum) {
  const LatticeModel m = model(10);
  const auto vac = ground_state(m), d0 = ground_state(m, ExternalChargeTrack::static_pair(0));
  EXPECT_NEAR(vac.energy, d0.energy, 1e-12);
  EXPECT_NEAR(fidelity(vac.state.amplitudes(), d0.state.amplitudes()), 1.0, 1e-10);
}

TEST(GroundState, StringEnergyRisesThenPlateaus) {
  const LatticeModel m = model(12);
  std::vector<double> e;
  for (int d = 0; d < 12; ++d) e.push_back(ground_state(m, ExternalChargeTrack::static_pair(d)).energy);
  const auto top = static_cast<std::size_t>(std::max_element(e.begin(), e.end()) - e.begin());
  // Linear rise while the string holds.
  EXPECT_GE(top, 6u);
  for (std::size_t d = 1; d <= top; ++d) EXPECT_GE(e[d], e[d - 1] - 1e-9) << d;
  // Past breaking the energy saturates; open-boundary effects keep it within
  // a band well below the rise.
  const double rise = e[top] - e[0];
  for (std::size_t d = top; d < e.size(); ++d) EXPECT_LT(e[top] - e[d], 0.2 * rise) << d;
}

TEST(Evolve, EigenstateIsStationary) {
  const LatticeModel m = model(10);
  const auto gs = ground_state(m);
  const double s0 = centered_subsystem_report(gs.state, 4).von_neumann;
  const auto o0 = local_observables(gs.state, FluxProfile::zero(m.n_links()));
  evolve(gs.state, ExternalChargeTrack::none(), 2.0, 0.25, [&](double, const SectorState& s) {
    EXPECT_NEAR(centered_subsystem_report(s, 4).von_neumann, s0, 1e-8);
    const auto o = local_observables(s, FluxProfile::zero(m.n_links()));
    for (std::size_t i = 0; i < o.charge_density.size(); ++i)
      EXPECT_NEAR(o.chiral_condensate[i], o0.chiral_condensate[i], 1e-8);
    EXPECT_NEAR(o.total_energy, gs.energy, 1e-8);
  });
}

TEST(Evolve, NormAndChargeConserved) {
  const LatticeModel m = model(10);
  const auto tr = evolve(ground_state(m).state, ExternalChargeTrack::jets(), 4.0, 0.2);
  ASSERT_EQ(tr.times.size(), 21u);
  EXPECT_DOUBLE_EQ(tr.times.back(), 4.0);
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    EXPECT_NEAR(tr.states[k].norm(), 1.0, 1e-8);
    const auto o = local_observables(tr.states[k], ExternalChargeTrack::jets(), tr.times[k]);
    EXPECT_NEAR(o.total_charge, 0.0, 1e-10);
    EXPECT_NEAR(DensityMatrix::from_pure(tr.states[k].amplitudes()).purity(), 1.0, 1e-10);
  }
}

TEST(Evolve, FinalStepShortened) {
  const auto tr = evolve(ground_state(model(6)).state, ExternalChargeTrack::none(), 1.0, 0.3);
  EXPECT_EQ(tr.times, (std::vector<double>{0.0, 0.3, 0.6, 0.8999999999999999, 1.0}));
  EXPECT_THROW(evolve(ground_state(model(6)).state, ExternalChargeTrack::none(), 1.0, 0.0), ArgumentError);
}

TEST(Evolve, HalvingStepReducesFidelityDeficit) {
  const LatticeModel m = model(10);
  const auto init = ground_state(m).state;
  const auto jets = ExternalChargeTrack::jets();
  EvolutionOptions exact;
  exact.split_at_switches = true;
  const Eigen::VectorXcd ref = evolve(init, jets, 3.0, 0.3, exact).states.back().amplitudes();
  auto deficit = [&](double dt) { return 1.0 - fidelity(evolve(init, jets, 3.0, dt).states.back().amplitudes(), ref); };
  const double coarse = deficit(0.3), fine = deficit(0.15);
  EXPECT_GT(coarse, 1e-12);
  EXPECT_GE(coarse / fine, 4.0) << coarse << " " << fine;
}

TEST(Evolve, EnergyConservedBetweenCrossings) {
  const LatticeModel m = model(10);
  const auto jets = ExternalChargeTrack::jets();
  std::vector<std::pair<double, double>> energies;
  evolve(ground_state(m).state, jets, 2.0, 0.25,
         [&](double t, const SectorState& s) { energies.emplace_back(t, local_observables(s, jets, t).total_energy); });
  // Switches at t = 1 and 2; the windows (0, 1) and (1, 2) are static.
  for (std::size_t k : {2u, 3u}) EXPECT_NEAR(energies[k].second, energies[1].second, 1e-8);
  for (std::size_t k : {6u, 7u}) EXPECT_NEAR(energies[k].second, energies[5].second, 1e-8);
  EXPECT_GT(std::abs(energies[4].second - energies[3].second), 1e-4);
}

TEST(Krylov, MatchesDenseExponential) {
  const LatticeModel m = model(8);
  const auto h = build_hamiltonian(m, ExternalChargeTrack::static_pair(3), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
  Rng rng(2);
  const Eigen::VectorXcd psi = mel::testing::random_state(rng, static_cast<Eigen::Index>(h.dim()));
  for (double tau : {0.1, 1.0, 5.0}) {
    const Eigen::VectorXcd phase = (Complex(0, -tau) * es.eigenvalues().cast<Complex>()).array().exp();
    const Eigen::MatrixXcd v = es.eigenvectors().cast<Complex>();
    const Eigen::VectorXcd exact = v * phase.asDiagonal() * v.adjoint() * psi;
    krylov::ExpmStats stats;
    const Eigen::VectorXcd approx = krylov::expm_apply(h, psi, tau, {}, &stats);
    EXPECT_NEAR(fidelity(approx, exact), 1.0, 1e-8) << tau;
    EXPECT_LT((approx - exact).norm(), 1e-8);
    EXPECT_GE(stats.substeps, 1);
  }
  EXPECT_THROW(krylov::expm_apply(h, Eigen::VectorXcd::Ones(3), 0.1), DimensionError);
}

TEST(CenteredReport, HeavyFermionVacuumNearlyProduct) {
  const auto gs = ground_state(model(10, 20.0));
  const auto r = centered_subsystem_report(gs.state, 4);
  EXPECT_GE(r.schmidt_eigenvalues.front(), 0.99);
  const auto o = local_observables(gs.state, FluxProfile::zero(9));
  for (double q : o.charge_density) EXPECT_NEAR(q, 0.0, 1e-2);
}

TEST(CenteredReport, ComplementHasSameEntropy) {
  const LatticeModel m = model(10);
  const auto tr = evolve(ground_state(m).state, ExternalChargeTrack::jets(), 3.0, 0.5);
  for (const auto& s : tr.states) {
    const auto inner = centered_sites(10, 4);
    std::vector<unsigned> outer;
    for (unsigned i = 0; i < 10; ++i)
      if (std::find(inner.begin(), inner.end(), i) == inner.end()) outer.push_back(i);
    EXPECT_NEAR(subsystem_report(s, inner).von_neumann, subsystem_report(s, outer).von_neumann, 1e-9);
  }
}

TEST(CenteredReport, SectorSpectraRecombine) {
  const auto gs = ground_state(model(10), ExternalChargeTrack::static_pair(4));
  const auto r = centered_subsystem_report(gs.state, 4);
  ASSERT_TRUE(r.sector_spectra.has_value());
  std::vector<double> all;
  for (const auto& [q, ev] : *r.sector_spectra) {
    EXPECT_LE(std::abs(q), 2);
    for (double x : ev)
      if (x >= 1e-14) all.push_back(x);
  }
  std::sort(all.begin(), all.end(), std::greater<>());
  ASSERT_EQ(all.size(), r.schmidt_eigenvalues.size());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_NEAR(all[i], r.schmidt_eigenvalues[i], 1e-10);
}

TEST(CenteredReport, SchmidtCountGrowsAfterQuench) {
  const LatticeModel m = model(12);
  const auto tr = evolve(ground_state(m).state, ExternalChargeTrack::jets(), 5.0, 0.25);
  const auto start = centered_subsystem_report(tr.states.front(), 4);
  const auto late = centered_subsystem_report(tr.states.back(), 4);
  EXPECT_GT(count_above(late.schmidt_eigenvalues, 1e-6), count_above(start.schmidt_eigenvalues, 1e-6));
}

TEST(CenteredReport, SubsystemLengthChecked) {
  const auto gs = ground_state(model(8));
  EXPECT_THROW(centered_subsystem_report(gs.state, 3), ArgumentError);
  EXPECT_THROW(centered_subsystem_report(gs.state, 8), ArgumentError);
  EXPECT_NO_THROW(centered_subsystem_report(gs.state, 6));
}

TEST(HalfChainScan, CoincidentPairGivesVacuum) {
  const LatticeModel m = model(10);
  const int d0[] = {0};
  const auto scan = half_chain_entropy_scan(m, d0);
  EXPECT_NEAR(scan[0].half_chain_entropy, half_chain_report(ground_state(m).state).von_neumann, 1e-10);
}

TEST(HalfChainScan, InteriorMaximumAtTwelveSites) {
  std::vector<int> ds(12);
  std::iota(ds.begin(), ds.end(), 0);
  const auto scan = half_chain_entropy_scan(model(12), ds);
  const auto peak = std::max_element(scan.begin(), scan.end(), [](const auto& a, const auto& b) {
    return a.half_chain_entropy < b.half_chain_entropy;
  });
  EXPECT_GT(peak->separation, 0);
  EXPECT_LT(peak->separation, 11);
  EXPECT_GT(peak->half_chain_entropy, scan.front().half_chain_entropy);
  EXPECT_GT(peak->half_chain_entropy, scan.back().half_chain_entropy);
}

TEST(HalfChainScan, PlateauNearVacuumAtFourteenSites) {
  const int ds[] = {0, 12, 13};
  const auto scan = half_chain_entropy_scan(model(14), ds);
  const double vac = scan[0].half_chain_entropy;
  for (std::size_t i = 1; i < scan.size(); ++i)
    EXPECT_LT(std::abs(scan[i].half_chain_entropy - vac), 0.1 * vac) << scan[i].separation;
}

TEST(ThermalReference, Validation) {
  ThermalReference r;
  r.n_thermal = 16;
  EXPECT_THROW(r.validate(), CapabilityError);
  r.n_thermal = 9;
  EXPECT_THROW(r.validate(), ArgumentError);
  r.n_thermal = 8;
  r.subsystem_length = 10;
  EXPECT_THROW(r.validate(), ArgumentError);
  r.subsystem_length = 4;
  r.beta_grid = {1.0, 0.5};
  EXPECT_THROW(r.validate(), ArgumentError);
  r.beta_grid = default_beta_grid();
  EXPECT_NO_THROW(r.validate());
  EXPECT_THROW(r.check_sublattice(10), ArgumentError);
  EXPECT_NO_THROW(r.check_sublattice(12));
  EXPECT_THROW(thermal_reference_state(r, model(8), 0.0), ArgumentError);
}

TEST(ThermalReference, DefaultGrid) {
  const auto g = default_beta_grid();
  ASSERT_EQ(g.size(), 24u);
  EXPECT_NEAR(g.front(), 0.1, 1e-15);
  EXPECT_NEAR(g.back(), 10.0, 1e-12);
  for (std::size_t i = 2; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], g[1] / g[0], 1e-12);
}

TEST(ThermalReference, HighTemperatureIsMaximallyMixed) {
  ThermalReference r;
  r.n_thermal = 8;
  const auto rho = thermal_reference_state(r, model(8), 1e-9);
  EXPECT_EQ(rho.dim(), 16u);
  EXPECT_LT(trace_distance(rho, DensityMatrix::maximally_mixed(16)), 1e-7);
}

TEST(ThermalReference, LowTemperatureApproachesVacuum) {
  ThermalReference r;
  r.n_thermal = 10;
  const LatticeModel m = model(10);
  const auto vac = centered_density_matrix(ground_state(m).state, 4);
  const double f5 = overlap(thermal_reference_state(r, m, 5.0), vac);
  const double f50 = overlap(thermal_reference_state(r, m, 50.0), vac);
  EXPECT_GT(f50, f5);
  EXPECT_NEAR(f50, 1.0, 1e-6);
}

TEST(ThermalReference, CanonicalEntropyIdentity) {
  const ThermalEnsemble ens(model(8));
  for (double beta : {0.1, 1.0, 3.0}) {
    const auto s = ens.summary(beta);
    EXPECT_NEAR(von_neumann_entropy(ens.full_density_matrix(beta)), beta * s.mean_energy + s.log_z, 1e-9);
    EXPECT_NEAR(s.entropy, beta * s.mean_energy + s.log_z, 1e-9);
  }
}

TEST(ThermalReference, AllChargeSectorsIncluded) {
  const ThermalEnsemble ens(model(6));
  std::size_t total = 0;
  for (const auto& s : ens.sectors()) total += s.basis->size();
  EXPECT_EQ(total, 64u);
  EXPECT_NEAR(ens.summary(0.0).log_z, std::log(64.0), 1e-12);
}

TEST(Thermometry, SelfOverlapLandsOnGrid) {
  ThermalReference r;
  r.n_thermal = 8;
  const LatticeModel m = model(12);
  const ThermalReferenceSet refs(r, m);
  for (std::size_t i : {3u, 11u, 19u}) {
    const double beta = refs.betas()[i];
    const auto p = thermometry_point(thermal_reference_state(r, m, beta), refs, 0.0);
    EXPECT_EQ(p.best_beta_overlap, beta);
    EXPECT_EQ(p.best_beta_hs, beta);
    EXPECT_NEAR(p.overlap_at_max, 1.0, 1e-12);
    EXPECT_NEAR(p.hs_complement_at_max, 1.0, 1e-12);
    EXPECT_NEAR(p.purity_ratio, 1.0, 1e-12);
    EXPECT_FALSE(p.overlap_edge);
  }
}

TEST(Thermometry, VacuumSitsOnColdEdge) {
  ThermalReference r;
  r.n_thermal = 10;
  const LatticeModel m = model(10);
  const ThermalReferenceSet refs(r, m);
  const auto p = thermometry_point(centered_density_matrix(ground_state(m).state, 4), refs, 0.0);
  EXPECT_EQ(p.best_beta_overlap, refs.betas().back());
  EXPECT_TRUE(p.overlap_edge);
}

TEST(Thermometry, GridMustSpanDecade) {
  ThermalReference r;
  r.n_thermal = 8;
  r.beta_grid = {1.0, 2.0, 4.0};
  EXPECT_THROW(ThermalReferenceSet(r, model(8)), ArgumentError);
}

TEST(Thermometry, ObservableBetaInterpolates) {
  const double betas[] = {1.0, 2.0, 3.0};
  const double values[] = {-1.0, -2.0, -2.5};
  EXPECT_NEAR(*observable_beta(-1.5, betas, values), 1.5, 1e-15);
  EXPECT_NEAR(*observable_beta(-2.25, betas, values), 2.5, 1e-15);
  EXPECT_FALSE(observable_beta(0.0, betas, values).has_value());
}

TEST(Thermometry, RefinedPeakOfParabola) {
  const std::vector<double> betas = {1.0, std::exp(1.0), std::exp(2.0)};
  // Metric -(x - 1.2)^2 in x = ln beta.
  std::vector<double> f;
  for (double b : betas) f.push_back(-std::pow(std::log(b) - 1.2, 2));
  EXPECT_NEAR(mel::schwinger::detail::refine_log_peak(betas, f, 1), std::exp(1.2), 1e-12);
  EXPECT_EQ(mel::schwinger::detail::refine_log_peak(betas, f, 0), 1.0);
}

TEST(LocalObservables, HeavyVacuumHasNoCharge) {
  const auto gs = ground_state(model(10, 1e6));
  const auto o = local_observables(gs.state, FluxProfile::zero(9));
  for (double q : o.charge_density) EXPECT_NEAR(q, 0.0, 1e-10);
}

TEST(LocalObservables, ChargeSumsToZeroAndEnergyMatches) {
  const LatticeModel m = model(10);
  const auto track = ExternalChargeTrack::static_pair(4);
  const auto gs = ground_state(m, track);
  const auto o = local_observables(gs.state, track, 0.0);
  EXPECT_NEAR(std::accumulate(o.charge_density.begin(), o.charge_density.end(), 0.0), 0.0, 1e-10);
  EXPECT_NEAR(o.total_charge, 0.0, 1e-10);
  EXPECT_NEAR(o.total_energy, gs.energy, 1e-9);
  const double summed = std::accumulate(o.energy_density.begin(), o.energy_density.end(), 0.0);
  EXPECT_NEAR(summed, o.total_energy, 1e-12);
}

TEST(LocalObservables, ThermalAverageMatchesSummary) {
  const ThermalEnsemble ens(model(8));
  const auto o = ens.observables(1.5);
  EXPECT_NEAR(o.total_energy, ens.summary(1.5).mean_energy, 1e-9);
}

TEST(MesonMass, PositiveGap) {
  const LatticeModel m = model(10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_hamiltonian(m, ExternalChargeTrack::none(), 0.0).dense());
  EXPECT_NEAR(meson_mass(m), es.eigenvalues()(1) - es.eigenvalues()(0), 1e-7);
}
