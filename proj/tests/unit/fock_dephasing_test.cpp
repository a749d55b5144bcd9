#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "generators.hpp"
#include "mel/fock_dephasing.hpp"

using namespace mel;
using mel::testing::Rng;

namespace {

FockDensityMatrix random_fock(Rng& rng, int cutoff, int rank = -1) {
  return FockDensityMatrix(mel::testing::random_density(rng, cutoff, rank).matrix());
}

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(PhaseGrid, PointsEquallySpaced) {
  const PhaseGrid g(5, 1.0);
  const auto p = g.points();
  ASSERT_EQ(p.size(), 6u);
  for (std::size_t m = 0; m < p.size(); ++m) {
    EXPECT_NEAR(p[m], 1.0 + 2 * std::numbers::pi * m / 6, 1e-15);
    EXPECT_GE(p[m], 1.0);
    EXPECT_LT(p[m], 1.0 + 2 * std::numbers::pi);
  }
  EXPECT_THROW(PhaseGrid(3, 2 * std::numbers::pi), ArgumentError);
  EXPECT_THROW(PhaseGrid(3, -0.1), ArgumentError);
}

TEST(PeggBarnett, TrivialTruncation) {
  const auto s = pegg_barnett_state(PhaseGrid(0), 0);
  ASSERT_EQ(s.dim(), 1u);
  EXPECT_NEAR(std::abs(s[0]), 1.0, 1e-15);
}

TEST(PeggBarnett, QubitStates) {
  const PhaseGrid g(1);
  const auto plus = pegg_barnett_state(g, 0), minus = pegg_barnett_state(g, 1);
  const double r = 1 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(plus[0] - r), 0, 1e-15);
  EXPECT_NEAR(std::abs(plus[1] - r), 0, 1e-15);
  EXPECT_NEAR(std::abs(minus[0] - r), 0, 1e-15);
  EXPECT_NEAR(std::abs(minus[1] + r), 0, 1e-15);
  EXPECT_THROW(pegg_barnett_state(g, 2), ArgumentError);
}

TEST(PeggBarnett, Orthonormal) {
  for (double phi0 : {0.0, 0.37}) {
    const PhaseGrid g(7, phi0);
    for (std::size_t a = 0; a < 8; ++a)
      for (std::size_t b = 0; b < 8; ++b) {
        const Complex ip = pegg_barnett_state(g, a).amplitudes().dot(pegg_barnett_state(g, b).amplitudes());
        EXPECT_NEAR(std::abs(ip - (a == b ? 1.0 : 0.0)), 0.0, 1e-12);
      }
  }
}

TEST(NumberToPhase, NumberEigenstateIsFlat) {
  const PhaseGrid g(6);
  ComplexVector psi = ComplexVector::Zero(7);
  psi(0) = 1;
  const auto phi = number_to_phase(psi, g);
  for (Eigen::Index m = 0; m < 7; ++m) EXPECT_NEAR(std::norm(phi(m)), 1.0 / 7, 1e-15);
}

TEST(NumberToPhase, RoundTripAndNorm) {
  Rng rng(3);
  for (std::size_t s : {0u, 1u, 4u, 11u}) {
    const PhaseGrid g(s, 0.9);
    const ComplexVector psi = mel::testing::random_state(rng, static_cast<Eigen::Index>(s + 1));
    const ComplexVector phi = number_to_phase(psi, g);
    EXPECT_NEAR(phi.norm(), 1.0, 1e-12);
    EXPECT_LT((phase_to_number(phi, g) - psi).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(NumberToPhase, PhaseStatePeaksOnOwnPoint) {
  const PhaseGrid g(5, 0.2);
  for (std::size_t m = 0; m < 6; ++m) {
    const auto phi = number_to_phase(pegg_barnett_state(g, m).amplitudes(), g);
    for (Eigen::Index k = 0; k < 6; ++k) EXPECT_NEAR(std::abs(phi(k)), k == static_cast<Eigen::Index>(m) ? 1.0 : 0.0, 1e-12);
  }
}

TEST(NumberToPhase, LengthMismatch) {
  EXPECT_THROW(number_to_phase(ComplexVector::Ones(3), PhaseGrid(3)), DimensionError);
  EXPECT_THROW(phase_to_number(ComplexVector::Ones(3), PhaseGrid(3)), DimensionError);
}

TEST(Dephase, DiagonalFixedPoint) {
  const double p[] = {0.1, 0.2, 0.3, 0.4};
  const FockDensityMatrix rho(DensityMatrix::diagonal(p).matrix());
  EXPECT_EQ(max_diff(dephase(rho).matrix(), rho.matrix()), 0.0);
}

TEST(Dephase, PlusState) {
  const auto plus = FockDensityMatrix::from_pure(pegg_barnett_state(PhaseGrid(1), 0).amplitudes());
  const auto d = dephase(plus);
  EXPECT_NEAR(d.matrix()(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(d.matrix()(1, 1).real(), 0.5, 1e-15);
  EXPECT_EQ(std::abs(d.matrix()(0, 1)), 0.0);
  const auto g = dephasing_entropy_gain(plus);
  EXPECT_NEAR(g.before, 0.0, 1e-12);
  EXPECT_NEAR(g.after, std::numbers::ln2, 1e-15);
}

TEST(Dephase, NumberStateHasNoGain) {
  ComplexVector v = ComplexVector::Zero(5);
  v(3) = 1;
  const auto g = dephasing_entropy_gain(FockDensityMatrix::from_pure(v));
  EXPECT_NEAR(g.before, 0.0, 1e-15);
  EXPECT_NEAR(g.after, 0.0, 1e-15);
}

TEST(Dephase, PureStateGivesAmplitudeShannon) {
  Rng rng(4);
  for (int k = 0; k < 10; ++k) {
    const ComplexVector psi = mel::testing::random_state(rng, 8);
    double h = 0;
    for (Eigen::Index n = 0; n < 8; ++n) h -= std::norm(psi(n)) * std::log(std::norm(psi(n)));
    const auto rho = FockDensityMatrix::from_pure(psi);
    EXPECT_NEAR(von_neumann_entropy(dephase(rho).density()), h, 1e-12);
    const auto g = dephasing_entropy_gain(rho);
    EXPECT_NEAR(g.after, h, 1e-12);
    EXPECT_GT(g.after, 0.0);
  }
}

TEST(Dephase, ExactlyDiagonalIdempotentTracePreserving) {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const int cutoff = mel::testing::uniform_int(rng, 1, 16);
    const auto rho = random_fock(rng, cutoff, mel::testing::uniform_int(rng, 1, cutoff));
    const auto d = dephase(rho);
    for (int i = 0; i < cutoff; ++i)
      for (int j = 0; j < cutoff; ++j) {
        if (i != j) EXPECT_EQ(d.matrix()(i, j), Complex(0.0));
        else EXPECT_EQ(d.matrix()(i, i).real(), rho.matrix()(i, i).real());
      }
    EXPECT_EQ(dephase(d).matrix(), d.matrix());
  }
}

TEST(Dephase, CommutesWithRelabeling) {
  Rng rng(6);
  const int cutoff = 6;
  const auto rho = random_fock(rng, cutoff);
  std::vector<int> perm(cutoff);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> p(cutoff);
  for (int i = 0; i < cutoff; ++i) p.indices()(i) = perm[i];
  const ComplexMatrix permuted = p * rho.matrix() * p.transpose();
  const ComplexMatrix a = dephase(FockDensityMatrix(permuted)).matrix();
  const ComplexMatrix b = p * dephase(rho).matrix() * p.transpose();
  EXPECT_EQ(max_diff(a, b), 0.0);
}

TEST(Dephase, EntropyNonDecreasing) {
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const int cutoff = mel::testing::uniform_int(rng, 1, 16);
    const auto rho = random_fock(rng, cutoff, mel::testing::uniform_int(rng, 1, cutoff));
    const auto g = dephasing_entropy_gain(rho);
    EXPECT_GE(g.after, g.before - 1e-10);
  }
}

TEST(DephaseQuadrature, AgreesWithZeroing) {
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    const int cutoff = mel::testing::uniform_int(rng, 1, 16);
    const auto rho = random_fock(rng, cutoff);
    EXPECT_LT(max_diff(dephase_quadrature(rho).matrix(), dephase(rho).matrix()), 1e-10);
    const auto shifted = uniform_phases(default_quadrature_points(rho.cutoff()), 1.3);
    EXPECT_LT(max_diff(dephase_quadrature(rho, shifted).matrix(), dephase(rho).matrix()), 1e-10);
  }
}

TEST(DephaseQuadrature, ExactOnceGridExceedsTwoS) {
  // Coherence rho_{n n'} survives K-point averaging iff K divides n - n'.
  Rng rng(9);
  const int s = 5;
  const auto rho = random_fock(rng, s + 1);
  const double below = max_diff(dephase_quadrature(rho, uniform_phases(s)).matrix(), dephase(rho).matrix());
  EXPECT_GT(below, 1e-3);
  for (std::size_t k = 2 * s + 1; k <= 4 * (s + 1); ++k)
    EXPECT_LT(max_diff(dephase_quadrature(rho, uniform_phases(k)).matrix(), dephase(rho).matrix()), 1e-12) << k;
}

TEST(DephaseQuadrature, RejectsNonUniformGrid) {
  const auto rho = FockDensityMatrix(DensityMatrix::maximally_mixed(3).matrix());
  const double bad[] = {0.0, 1.0, 2.5, 4.0};
  EXPECT_THROW(dephase_quadrature(rho, bad), ArgumentError);
}

TEST(NumberPhaseSpread, Descriptive) {
  const PhaseGrid g(15);
  ComplexVector number = ComplexVector::Zero(16);
  number(4) = 1;
  const auto a = number_phase_spread(number, g);
  EXPECT_NEAR(a.number_stddev, 0.0, 1e-15);
  EXPECT_GT(a.phase_circular_stddev, 3.0);  // uniform phase: R = 0
  const auto b = number_phase_spread(pegg_barnett_state(g, 3).amplitudes(), g);
  EXPECT_NEAR(b.phase_circular_stddev, 0.0, 1e-6);
  EXPECT_GT(b.number_stddev, 4.0);
}
