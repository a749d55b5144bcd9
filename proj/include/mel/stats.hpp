#pragma once

// Goodness-of-fit helpers for discrete samples.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "mel/error.hpp"

namespace mel::stats {

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  int bins = 0;  ///< after pooling
};

/// Pearson chi-square of observed counts against model probabilities.
/// Adjacent bins are pooled left to right until each expects at least
/// `min_expected` counts; the probability mass outside `expected` is added
/// as one more bin against `outside_count`.
inline ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected_probs,
                                       double total, double outside_count = 0.0, double min_expected = 5.0) {
  if (observed.size() != expected_probs.size())
    throw DimensionError("chi_square_test: bins", expected_probs.size(), observed.size());
  if (!(total > 0.0)) throw ArgumentError("chi_square_test: total must be positive");
  std::vector<double> obs, exp;
  double o = 0.0, e = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o += observed[i];
    e += total * expected_probs[i];
    mass += expected_probs[i];
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  o += outside_count;
  e += total * std::max(0.0, 1.0 - mass);
  if (e > 0.0 || o > 0.0) {
    if (e >= min_expected || obs.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  ChiSquareResult r;
  r.bins = static_cast<int>(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (exp[i] > 0.0) r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  r.dof = r.bins - 1;
  if (r.dof < 1) throw ArgumentError("chi_square_test: fewer than two bins after pooling");
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

/// sup_n |F_emp(n) - F_model(n)| over the listed support points.
inline double ks_statistic(std::span<const double> empirical_probs, std::span<const double> model_probs) {
  if (empirical_probs.size() != model_probs.size())
    throw DimensionError("ks_statistic: bins", model_probs.size(), empirical_probs.size());
  double fe = 0.0, fm = 0.0, d = 0.0;
  for (std::size_t i = 0; i < model_probs.size(); ++i) {
    fe += empirical_probs[i];
    fm += model_probs[i];
    d = std::max(d, std::abs(fe - fm));
  }
  return d;
}

/// Asymptotic one-sample critical value sqrt(-ln(alpha/2)/2) / sqrt(n).
inline double ks_critical_value(double alpha, double n) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(n > 0.0)) throw ArgumentError("ks_critical_value: bad arguments");
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("least_squares: sizes", x.size(), y.size());
  if (x.size() < 2) throw ArgumentError("least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ArgumentError("least_squares: abscissae are all equal");
  const double b = sxy / sxx;
  return {b, my - b * mx};
}

}  // namespace mel::stats
