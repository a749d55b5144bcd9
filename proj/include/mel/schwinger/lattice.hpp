#pragma once

// Lattice massive Schwinger model with open boundaries, staggered fermions
// mapped onto a spin chain, and the Gauss law used to eliminate the gauge
// links:
//
//   H = 1/(4a) sum_n (X_n X_{n+1} + Y_n Y_{n+1})
//     + (m/2) sum_n (-1)^n Z_n
//     + (a g^2 / 2) sum_l L_l^2,
//
//   L_l = theta/(2 pi) + sum_{k <= l} q_k + eps_l,   q_k = (Z_k + (-1)^k) / 2,
//
// where eps_l is the flux of the external charges on link l (link l joins
// sites l and l+1). The left boundary field is zero. Basis states are spin
// configurations packed into an integer, bit n set when Z_n = +1.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mel/error.hpp"

namespace mel::schwinger {

using Config = std::uint32_t;

struct LatticeModel {
  int n_sites = 12;
  double spacing = 1.0;       ///< a
  double coupling = 0.5;      ///< g, in units of 1/a by default
  double fermion_mass = 0.25; ///< m
  double theta_background = 0.0;

  void validate() const {
    if (n_sites < 2 || n_sites % 2 != 0) throw ArgumentError("LatticeModel: n_sites must be even and >= 2");
    if (n_sites > 24) throw CapabilityError("LatticeModel: exact statevectors support at most 24 sites");
    if (!(spacing > 0.0)) throw ArgumentError("LatticeModel: spacing must be positive");
    if (!(coupling > 0.0)) throw ArgumentError("LatticeModel: coupling must be positive");
    if (!(fermion_mass >= 0.0)) throw ArgumentError("LatticeModel: fermion mass must be non-negative");
  }

  int n_links() const noexcept { return n_sites - 1; }
  /// Link joining the two central sites.
  int center_link() const noexcept { return n_sites / 2 - 1; }
  double hopping() const noexcept { return 1.0 / (2.0 * spacing); }  // amplitude of sigma+ sigma- + h.c.
  double electric_prefactor() const noexcept { return 0.5 * spacing * coupling * coupling; }
};

inline int site_charge(Config c, int n) {
  const int up = static_cast<int>((c >> n) & 1u);
  return up - (n % 2);
}

inline int config_charge(Config c, int n_sites) { return std::popcount(c) - n_sites / 2; }

/// External flux per link. `mean` is the time average of eps_l over a step and
/// `mean_sq` that of eps_l^2; for a frozen source both equal eps_l (resp. eps_l^2).
struct FluxProfile {
  std::vector<double> mean;
  std::vector<double> mean_sq;

  static FluxProfile zero(int n_links) {
    return {std::vector<double>(static_cast<std::size_t>(n_links), 0.0),
            std::vector<double>(static_cast<std::size_t>(n_links), 0.0)};
  }
  bool operator==(const FluxProfile&) const = default;
};

/// Where the external charges sit as a function of time.
class ExternalChargeTrack {
 public:
  /// Flux between the charges: the positive charge sits (or moves) to the
  /// right, so the field between the pair is -g.
  static constexpr double kStringFlux = -1.0;

  enum class Kind { none, jets, static_pair };

  /// How jet fronts at x = +-t are assigned to links.
  enum class Snapping {
    midpoint,  ///< link l carries flux once |x_l| <= t (front has reached the link midpoint)
    nearest,   ///< flux up to the link nearest to the front
  };

  static ExternalChargeTrack none() { return ExternalChargeTrack(Kind::none, 0); }
  static ExternalChargeTrack jets(Snapping s = Snapping::midpoint) {
    ExternalChargeTrack t(Kind::jets, 0);
    t.snapping_ = s;
    return t;
  }
  static ExternalChargeTrack static_pair(int separation) {
    if (separation < 0) throw ArgumentError("static track: separation must be non-negative");
    return ExternalChargeTrack(Kind::static_pair, separation);
  }

  Kind kind() const noexcept { return kind_; }
  int separation() const noexcept { return separation_; }
  Snapping snapping() const noexcept { return snapping_; }

  void validate(const LatticeModel& model) const {
    if (kind_ == Kind::static_pair && separation_ > model.n_sites - 1)
      throw ArgumentError("static track: separation " + std::to_string(separation_) + " exceeds n_sites - 1");
  }

  /// Time at which link l starts carrying jet flux (+infinity if never).
  double switch_on_time(const LatticeModel& model, int link) const {
    if (kind_ != Kind::jets) return std::numeric_limits<double>::infinity();
    const int k = std::abs(link - model.center_link());
    if (k == 0) return 0.0;
    const double off = snapping_ == Snapping::nearest ? 0.5 : 0.0;
    return (static_cast<double>(k) - off) * model.spacing;
  }

  /// Flux on every link at time t. Jets are off for t <= 0.
  FluxProfile flux_at(const LatticeModel& model, double t) const {
    validate(model);
    FluxProfile f = FluxProfile::zero(model.n_links());
    if (kind_ == Kind::static_pair) {
      if (separation_ == 0) return f;
      const int lo = model.center_link() - (separation_ - 1) / 2;
      for (int l = lo; l < lo + separation_; ++l) set(f, l, 1.0);
    } else if (kind_ == Kind::jets && t > 0.0) {
      for (int l = 0; l < model.n_links(); ++l)
        if (t >= switch_on_time(model, l)) set(f, l, 1.0);
    }
    return f;
  }

  /// Exact time average of the flux (and squared flux) over [t0, t1].
  FluxProfile flux_average(const LatticeModel& model, double t0, double t1) const {
    if (!(t1 > t0)) throw ArgumentError("flux_average: empty interval");
    if (kind_ != Kind::jets) return flux_at(model, t0);
    FluxProfile f = FluxProfile::zero(model.n_links());
    for (int l = 0; l < model.n_links(); ++l) {
      const double on = std::max({switch_on_time(model, l), t0, 0.0});
      const double frac = std::clamp((t1 - on) / (t1 - t0), 0.0, 1.0);
      set(f, l, frac);
    }
    return f;
  }

  /// Times in (t0, t1) at which the flux profile changes.
  std::vector<double> switch_times(const LatticeModel& model, double t0, double t1) const {
    std::vector<double> out;
    if (kind_ != Kind::jets) return out;
    for (int l = 0; l < model.n_links(); ++l) {
      const double s = switch_on_time(model, l);
      if (s > t0 && s < t1) out.push_back(s);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  ExternalChargeTrack(Kind k, int d) : kind_(k), separation_(d) {}
  // Fraction w of the interval during which link l carries the string.
  static void set(FluxProfile& f, int l, double w) {
    f.mean[static_cast<std::size_t>(l)] = kStringFlux * w;
    f.mean_sq[static_cast<std::size_t>(l)] = kStringFlux * kStringFlux * w;
  }

  Kind kind_;
  int separation_;
  Snapping snapping_ = Snapping::midpoint;
};

/// Spin configurations with a fixed total charge, sorted ascending.
class SectorBasis {
 public:
  SectorBasis(int n_sites, int total_charge) : n_sites_(n_sites), total_charge_(total_charge) {
    if (n_sites < 2 || n_sites % 2 != 0 || n_sites > 24) throw ArgumentError("SectorBasis: invalid site count");
    if (std::abs(total_charge) > n_sites / 2) throw ArgumentError("SectorBasis: total charge out of range");
    const int ups = n_sites / 2 + total_charge;
    const Config full = Config{1} << n_sites;
    for (Config c = 0; c < full; ++c)
      if (std::popcount(c) == ups) configs_.push_back(c);
  }

  int n_sites() const noexcept { return n_sites_; }
  int total_charge() const noexcept { return total_charge_; }
  std::size_t size() const noexcept { return configs_.size(); }
  Config config(std::size_t i) const { return configs_[i]; }
  const std::vector<Config>& configs() const noexcept { return configs_; }

  std::optional<std::size_t> index(Config c) const {
    auto it = std::lower_bound(configs_.begin(), configs_.end(), c);
    if (it == configs_.end() || *it != c) return std::nullopt;
    return static_cast<std::size_t>(it - configs_.begin());
  }

 private:
  int n_sites_;
  int total_charge_;
  std::vector<Config> configs_;
};

/// Nearest-neighbour spin-flip term in compressed-row form. It depends only
/// on the lattice size and spacing, so it is shared by every time step.
struct HoppingOperator {
  std::vector<std::size_t> row_start;
  std::vector<std::size_t> col;
  std::vector<int> bond;  ///< bond n of each stored element (sites n, n+1)
  double amplitude = 0.0;

  HoppingOperator(const SectorBasis& basis, double amp) : amplitude(amp) {
    const int n = basis.n_sites();
    row_start.reserve(basis.size() + 1);
    row_start.push_back(0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const Config c = basis.config(i);
      for (int b = 0; b + 1 < n; ++b) {
        if (((c >> b) & 1u) == ((c >> (b + 1)) & 1u)) continue;
        const Config flipped = c ^ (Config{3} << b);
        col.push_back(*basis.index(flipped));
        bond.push_back(b);
      }
      row_start.push_back(col.size());
    }
  }
};

/// Spin-chain Hamiltonian restricted to one charge sector: a shared hopping
/// operator plus a diagonal (mass + electric) part.
class SectorHamiltonian {
 public:
  SectorHamiltonian(std::shared_ptr<const SectorBasis> basis, std::shared_ptr<const HoppingOperator> hop,
                    Eigen::VectorXd diagonal)
      : basis_(std::move(basis)), hop_(std::move(hop)), diag_(std::move(diagonal)) {}

  std::size_t dim() const noexcept { return basis_->size(); }
  const SectorBasis& basis() const noexcept { return *basis_; }
  const std::shared_ptr<const SectorBasis>& basis_ptr() const noexcept { return basis_; }
  const HoppingOperator& hopping() const noexcept { return *hop_; }
  const Eigen::VectorXd& diagonal() const noexcept { return diag_; }

  /// y = H x.
  template <class Vec>
  void apply(const Vec& x, Vec& y) const {
    y.resize(x.size());
    const double amp = hop_->amplitude;
    for (std::size_t i = 0; i < dim(); ++i) {
      auto acc = diag_(static_cast<Eigen::Index>(i)) * x(static_cast<Eigen::Index>(i));
      for (std::size_t k = hop_->row_start[i]; k < hop_->row_start[i + 1]; ++k)
        acc += amp * x(static_cast<Eigen::Index>(hop_->col[k]));
      y(static_cast<Eigen::Index>(i)) = acc;
    }
  }

  Eigen::MatrixXd dense() const {
    const auto n = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < dim(); ++i) {
      h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag_(static_cast<Eigen::Index>(i));
      for (std::size_t k = hop_->row_start[i]; k < hop_->row_start[i + 1]; ++k)
        h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(hop_->col[k])) += hop_->amplitude;
    }
    return h;
  }

 private:
  std::shared_ptr<const SectorBasis> basis_;
  std::shared_ptr<const HoppingOperator> hop_;
  Eigen::VectorXd diag_;
};

/// Gauss-law field on every link for one configuration, without external flux.
inline std::vector<double> dynamical_field(const LatticeModel& model, Config c) {
  std::vector<double> field(static_cast<std::size_t>(model.n_links()));
  double acc = model.theta_background / (2.0 * std::numbers::pi);
  for (int l = 0; l < model.n_links(); ++l) {
    acc += site_charge(c, l);
    field[static_cast<std::size_t>(l)] = acc;
  }
  return field;
}

/// Mass plus electric energy of a configuration under a (step-averaged) flux.
inline double diagonal_energy(const LatticeModel& model, Config c, const FluxProfile& flux) {
  double e = 0.0;
  const double half_m = 0.5 * model.fermion_mass;
  for (int n = 0; n < model.n_sites; ++n) {
    const double z = ((c >> n) & 1u) ? 1.0 : -1.0;
    e += (n % 2 == 0 ? half_m : -half_m) * z;
  }
  const auto field = dynamical_field(model, c);
  double el = 0.0;
  for (std::size_t l = 0; l < field.size(); ++l)
    el += field[l] * field[l] + 2.0 * field[l] * flux.mean[l] + flux.mean_sq[l];
  return e + model.electric_prefactor() * el;
}

/// Builds sector Hamiltonians for one lattice; the hopping part is shared.
class HamiltonianBuilder {
 public:
  HamiltonianBuilder(LatticeModel model, int total_charge = 0)
      : model_((model.validate(), model)),
        basis_(std::make_shared<SectorBasis>(model.n_sites, total_charge)),
        hop_(std::make_shared<HoppingOperator>(*basis_, model.hopping())) {}

  const LatticeModel& model() const noexcept { return model_; }
  const std::shared_ptr<const SectorBasis>& basis() const noexcept { return basis_; }

  SectorHamiltonian build(const FluxProfile& flux) const {
    if (flux.mean.size() != static_cast<std::size_t>(model_.n_links()) || flux.mean_sq.size() != flux.mean.size())
      throw DimensionError("build_hamiltonian: flux profile", static_cast<std::size_t>(model_.n_links()),
                           flux.mean.size());
    Eigen::VectorXd d(static_cast<Eigen::Index>(basis_->size()));
    for (std::size_t i = 0; i < basis_->size(); ++i)
      d(static_cast<Eigen::Index>(i)) = diagonal_energy(model_, basis_->config(i), flux);
    return SectorHamiltonian(basis_, hop_, std::move(d));
  }

  SectorHamiltonian build(const ExternalChargeTrack& track, double t) const {
    if (t < 0.0) throw ArgumentError("build_hamiltonian: t must be non-negative");
    return build(track.flux_at(model_, t));
  }

 private:
  LatticeModel model_;
  std::shared_ptr<const SectorBasis> basis_;
  std::shared_ptr<const HoppingOperator> hop_;
};

/// Hamiltonian in the total-charge sector `total_charge` at time t.
inline SectorHamiltonian build_hamiltonian(const LatticeModel& model, const ExternalChargeTrack& track, double t,
                                           int total_charge = 0) {
  return HamiltonianBuilder(model, total_charge).build(track, t);
}

}  // namespace mel::schwinger
