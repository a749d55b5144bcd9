#pragma once

// Multiplicity statistics of the rapidity-ordered dipole branching process
// and the reference laws it is compared with.
//
// The splitting rate is a single parameter `lambda`: the same constant sets
// the birth rate in the evolution equation and the growth e^{lambda y} of
// the mean multiplicity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mel/error.hpp"
#include "mel/quantum_core.hpp"
#include "mel/stats.hpp"

namespace mel::cascade {

struct CascadeParams {
  double lambda = 1.0;
  double y = 0.0;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("CascadeParams: lambda must be positive");
    if (!(y >= 0.0) || !std::isfinite(y)) throw ArgumentError("CascadeParams: y must be non-negative");
  }
  /// a = e^{lambda y}.
  double mean_multiplicity() const {
    validate();
    return std::exp(lambda * y);
  }
};

/// P_n on n = support_start, support_start + 1, ... The probability not
/// listed is `tail_mass`.
struct MultiplicityDistribution {
  int support_start = 0;
  std::vector<double> probs;
  double tail_mass = 0.0;
  double mean = 0.0;      ///< analytic where known, else from the listed terms
  double variance = 0.0;  ///< analytic where known, else from the listed terms
  double entropy_nats = 0.0;

  int n_max() const noexcept { return support_start + static_cast<int>(probs.size()) - 1; }
  double prob(int n) const {
    const int i = n - support_start;
    return i >= 0 && i < static_cast<int>(probs.size()) ? probs[static_cast<std::size_t>(i)] : 0.0;
  }
  double total() const {
    double s = tail_mass;
    for (double p : probs) s += p;
    return s;
  }
  /// Raw moment sum over the listed terms.
  double moment(int order) const {
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
      s += probs[i] * std::pow(static_cast<double>(support_start) + static_cast<double>(i), order);
    return s;
  }
};

namespace detail {

inline MultiplicityDistribution finish(int start, std::vector<double> probs, double tail, double mean, double var) {
  MultiplicityDistribution d;
  d.support_start = start;
  d.probs = std::move(probs);
  d.tail_mass = tail;
  d.mean = mean;
  d.variance = var;
  d.entropy_nats = shannon_entropy(d.probs);
  return d;
}

inline void require_n_max(int n_max, int minimum) {
  if (n_max < minimum) throw ArgumentError("distribution: n_max too small");
}

}  // namespace detail

/// Z(y, u) = u / (u + (1 - u) e^{lambda y}).
inline double generating_function(const CascadeParams& p, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw ArgumentError("generating_function: u must lie in [0, 1]");
  const double a = p.mean_multiplicity();
  return u / (u + (1.0 - u) * a);
}

/// P_n = (1/a)(1 - 1/a)^{n-1}, n = 1..n_max.
inline MultiplicityDistribution geometric_distribution(const CascadeParams& params, int n_max) {
  detail::require_n_max(n_max, 1);
  const double a = params.mean_multiplicity();
  const double q = 1.0 - 1.0 / a;
  std::vector<double> p(static_cast<std::size_t>(n_max));
  double t = 1.0 / a;
  for (auto& v : p) {
    v = t;
    t *= q;
  }
  return detail::finish(1, std::move(p), std::pow(q, n_max), a, a * (a - 1.0));
}

inline constexpr int kMaxTerms = 1'000'000;

/// Smallest n_max with tail mass below `tail` (capped at kMaxTerms).
inline MultiplicityDistribution geometric_distribution_adaptive(const CascadeParams& params, double tail = 1e-12) {
  const double a = params.mean_multiplicity();
  if (a <= 1.0) return geometric_distribution(params, 1);
  // (1 - 1/a)^n < tail.
  const double n = std::ceil(std::log(tail) / std::log1p(-1.0 / a));
  if (!(n <= kMaxTerms))
    throw CapabilityError("geometric_distribution: tail below " + std::to_string(tail) + " needs more than " +
                          std::to_string(kMaxTerms) + " terms");
  return geometric_distribution(params, std::max(1, static_cast<int>(n)));
}

/// ln a + (a - 1) ln(a / (a - 1)).
inline double geometric_entropy(double a) {
  if (!(a >= 1.0)) throw ArgumentError("geometric_entropy: mean must be at least 1");
  if (a == 1.0) return 0.0;
  return std::log(a) + (a - 1.0) * std::log(a / (a - 1.0));
}

/// psi(z) = e^{-z}.
inline double kno_exponential(double z) {
  if (!(z >= 0.0)) throw ArgumentError("kno_exponential: z must be non-negative");
  return std::exp(-z);
}

/// a P_n / e^{-z} for the geometric law at n = round(z a).
inline double kno_ratio(double a, double z) {
  if (!(a >= 1.0)) throw ArgumentError("kno_ratio: mean must be at least 1");
  const double n = std::max(1.0, std::round(z * a));
  const double p = (1.0 / a) * std::pow(1.0 - 1.0 / a, n - 1.0);
  return a * p / kno_exponential(n / a);
}

/// Gamma(n+k)/(Gamma(k) n!) (nbar/(nbar+k))^n (k/(nbar+k))^k on n = 0..n_max.
inline MultiplicityDistribution negative_binomial(double k, double nbar, int n_max) {
  if (!(k > 0.0) || !(nbar > 0.0)) throw ArgumentError("negative_binomial: k and nbar must be positive");
  detail::require_n_max(n_max, 0);
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1);
  const double lq = std::log(nbar / (nbar + k)), lr = std::log(k / (nbar + k));
  double sum = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    const double lp = std::lgamma(n + k) - std::lgamma(k) - std::lgamma(n + 1.0) + n * lq + k * lr;
    p[static_cast<std::size_t>(n)] = std::exp(lp);
    sum += p[static_cast<std::size_t>(n)];
  }
  return detail::finish(0, std::move(p), std::max(0.0, 1.0 - sum), nbar, nbar + nbar * nbar / k);
}

inline MultiplicityDistribution poisson_distribution(double mean, int n_max) {
  if (!(mean > 0.0)) throw ArgumentError("poisson_distribution: mean must be positive");
  detail::require_n_max(n_max, 0);
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1);
  const double lm = std::log(mean);
  double sum = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    p[static_cast<std::size_t>(n)] = std::exp(-mean + n * lm - std::lgamma(n + 1.0));
    sum += p[static_cast<std::size_t>(n)];
  }
  return detail::finish(0, std::move(p), std::max(0.0, 1.0 - sum), mean, mean);
}

/// int_0^inf Poisson_n(l) (1/a) e^{-l/a} dl by adaptive Gauss-Kronrod.
inline double poisson_gamma_mixture(double a, int n, double tolerance = 1e-8) {
  if (!(a > 0.0)) throw ArgumentError("poisson_gamma_mixture: a must be positive");
  if (n < 0) throw ArgumentError("poisson_gamma_mixture: n must be non-negative");
  const double rate = 1.0 + 1.0 / a;
  const double lnorm = -std::lgamma(n + 1.0) - std::log(a);
  auto f = [&](double l) {
    if (l <= 0.0) return n == 0 ? std::exp(lnorm) : 0.0;
    return std::exp(lnorm - rate * l + n * std::log(l));
  };
  // The integrand peaks at n / rate with width ~ sqrt(n + 1) / rate.
  const double peak = n / rate, width = std::sqrt(n + 1.0) / rate;
  const double cuts[] = {0.0, peak, peak + 10.0 * width, peak + 40.0 * width};
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0, err_sum = 0.0;
  for (std::size_t i = 0; i + 1 < std::size(cuts); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    double err = 0.0;
    total += Quad::integrate(f, cuts[i], cuts[i + 1], 15, 1e-14, &err);
    err_sum += err;
  }
  double err = 0.0;
  total += Quad::integrate(f, cuts[std::size(cuts) - 1], std::numeric_limits<double>::infinity(), 15, 1e-14, &err);
  err_sum += err;
  if (!(err_sum <= tolerance)) throw ConvergenceError("poisson_gamma_mixture: quadrature error too large", err_sum);
  return total;
}

/// Splitting rapidities of one realization of the pure-birth process.
struct CascadeTrajectory {
  std::vector<double> event_times;
  int final_n = 1;
};

/// Exact (Gillespie) realization: waiting times are exponential with rate
/// lambda n.
template <class Rng>
CascadeTrajectory sample_trajectory(const CascadeParams& params, Rng& rng, bool record_events = true) {
  params.validate();
  CascadeTrajectory tr;
  double t = 0.0;
  std::exponential_distribution<double> wait(1.0);
  for (;;) {
    t += wait(rng) / (params.lambda * tr.final_n);
    if (t > params.y) break;
    if (record_events) tr.event_times.push_back(t);
    ++tr.final_n;
  }
  return tr;
}

struct YuleSimulation {
  MultiplicityDistribution empirical;  ///< support starts at 1, tail_mass 0
  std::vector<std::uint64_t> counts;   ///< counts[n - 1]
  std::uint64_t trials = 0;
  double mean = 0.0;
  double standard_error = 0.0;
  int max_n = 1;
  std::vector<CascadeTrajectory> sample_trajectories;  ///< first few, shard 0
};

inline constexpr int kYuleShards = 64;

/// Trials are split over kYuleShards shards; shard s draws from
/// mt19937_64(seed_seq{seed, s}), so results do not depend on `threads`.
inline YuleSimulation simulate_yule(const CascadeParams& params, std::uint64_t trials, std::uint64_t seed,
                                    unsigned threads = 1, std::size_t keep_trajectories = 4) {
  params.validate();
  if (trials < 1) throw ArgumentError("simulate_yule: need at least one trial");
  struct Shard {
    std::map<int, std::uint64_t> counts;
    double sum = 0.0, sum_sq = 0.0;
    std::vector<CascadeTrajectory> kept;
  };
  std::vector<Shard> shards(kYuleShards);
  auto run = [&](int s) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    const std::uint64_t begin = trials * static_cast<std::uint64_t>(s) / kYuleShards;
    const std::uint64_t end = trials * static_cast<std::uint64_t>(s + 1) / kYuleShards;
    Shard& sh = shards[static_cast<std::size_t>(s)];
    for (std::uint64_t i = begin; i < end; ++i) {
      const bool keep = s == 0 && sh.kept.size() < keep_trajectories;
      CascadeTrajectory tr = sample_trajectory(params, rng, keep);
      ++sh.counts[tr.final_n];
      sh.sum += tr.final_n;
      sh.sum_sq += static_cast<double>(tr.final_n) * tr.final_n;
      if (keep) sh.kept.push_back(std::move(tr));
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(threads, kYuleShards));
  if (nt == 1) {
    for (int s = 0; s < kYuleShards; ++s) run(s);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (int s = static_cast<int>(w); s < kYuleShards; s += static_cast<int>(nt)) run(s);
      });
    for (auto& th : pool) th.join();
  }
  YuleSimulation out;
  out.trials = trials;
  double sum = 0.0, sum_sq = 0.0;
  std::map<int, std::uint64_t> merged;
  for (const Shard& sh : shards) {
    for (const auto& [n, c] : sh.counts) merged[n] += c;
    sum += sh.sum;
    sum_sq += sh.sum_sq;
  }
  out.sample_trajectories = std::move(shards[0].kept);
  out.max_n = merged.rbegin()->first;
  out.counts.assign(static_cast<std::size_t>(out.max_n), 0);
  for (const auto& [n, c] : merged) out.counts[static_cast<std::size_t>(n - 1)] = c;
  const double nt_d = static_cast<double>(trials);
  out.mean = sum / nt_d;
  const double var = trials > 1 ? (sum_sq - nt_d * out.mean * out.mean) / (nt_d - 1.0) : 0.0;
  out.standard_error = std::sqrt(std::max(0.0, var) / nt_d);
  std::vector<double> p(out.counts.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(out.counts[i]) / nt_d;
  out.empirical = detail::finish(1, std::move(p), 0.0, out.mean, std::max(0.0, var));
  return out;
}

/// Pearson test of a simulation against the geometric law with the same
/// parameters.
inline stats::ChiSquareResult yule_chi_square(const YuleSimulation& sim, const CascadeParams& params) {
  const MultiplicityDistribution g = geometric_distribution(params, sim.max_n);
  std::vector<double> obs(sim.counts.begin(), sim.counts.end());
  return stats::chi_square_test(obs, g.probs, static_cast<double>(sim.trials));
}

inline double yule_ks_statistic(const YuleSimulation& sim, const CascadeParams& params) {
  const MultiplicityDistribution g = geometric_distribution(params, sim.max_n);
  return stats::ks_statistic(sim.empirical.probs, g.probs);
}

struct RapidityPoint {
  double y;
  double entropy;  ///< from the adaptive geometric distribution
  double log_mean;
};

struct RapidityScan {
  std::vector<RapidityPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double fit_min = 0.0;  ///< lambda y at the start of the fit window
  std::size_t fit_points = 0;
};

/// Entropy growth along a rapidity grid. The slope is fitted over the points
/// with lambda y >= fit_min (all points if fewer than two qualify).
inline RapidityScan entropy_vs_rapidity(double lambda, std::span<const double> ys, double fit_min = 3.0) {
  if (ys.size() < 3) throw ArgumentError("entropy_vs_rapidity: need at least three grid points");
  RapidityScan scan;
  scan.fit_min = fit_min;
  std::vector<double> fx, fy, ax, ay;
  for (double y : ys) {
    const CascadeParams p{lambda, y};
    const MultiplicityDistribution d = geometric_distribution_adaptive(p);
    scan.points.push_back({y, d.entropy_nats, lambda * y});
    ax.push_back(y);
    ay.push_back(d.entropy_nats);
    if (lambda * y >= fit_min) {
      fx.push_back(y);
      fy.push_back(d.entropy_nats);
    }
  }
  if (fx.size() < 2) fx = ax, fy = ay;
  const stats::LinearFit fit = stats::least_squares(fx, fy);
  scan.slope = fit.slope;
  scan.intercept = fit.intercept;
  scan.fit_points = fx.size();
  return scan;
}

/// Exponent c/3 of the small-x growth x^{-c/3}.
inline double mel_structure_exponent(double c) {
  if (!(c > 0.0)) throw ArgumentError("mel_structure_exponent: c must be positive");
  return c / 3.0;
}

/// (c/3) ln(1/x).
inline double cft_entropy(double c, double x) {
  if (!(x > 0.0 && x <= 1.0)) throw ArgumentError("cft_entropy: x must lie in (0, 1]");
  return mel_structure_exponent(c) * std::log(1.0 / x);
}

/// kappa_1..kappa_order from raw moments of the listed terms.
inline std::vector<double> cumulants(const MultiplicityDistribution& d, int order = 4, double max_tail = 1e-10) {
  if (order < 1 || order > 4) throw ArgumentError("cumulants: order must be 1..4");
  if (d.tail_mass > max_tail) throw ArgumentError("cumulants: tail mass too large; increase n_max");
  const double m1 = d.moment(1), m2 = d.moment(2), m3 = d.moment(3), m4 = d.moment(4);
  std::vector<double> k{m1, m2 - m1 * m1, m3 - 3 * m2 * m1 + 2 * m1 * m1 * m1,
                        m4 - 4 * m3 * m1 - 3 * m2 * m2 + 12 * m2 * m1 * m1 - 6 * m1 * m1 * m1 * m1};
  k.resize(static_cast<std::size_t>(order));
  return k;
}

}  // namespace mel::cascade
