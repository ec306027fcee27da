#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <unsupported/Eigen/SpecialFunctions>

#include "grwlim/errors.hpp"

namespace grwlim::stats {

/// P(X >= statistic) for X ~ chi-square(dof).
inline double chi_square_survival(double statistic, double dof) {
  if (dof <= 0) throw Error(Errc::invalid_argument, "chi-square needs dof > 0");
  if (statistic <= 0) return 1.0;
  return Eigen::numext::igammac(0.5 * dof, 0.5 * statistic);
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::size_t bins = 0;

  bool passes(double significance) const { return p_value >= significance; }
};

/// Pearson goodness of fit. Adjacent bins are merged (in order) until each
/// carries at least `min_expected` expected counts; a short tail folds into
/// the last merged bin.
inline ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected,
                                      double min_expected = 5.0) {
  if (observed.size() != expected.size() || observed.empty()) {
    throw Error(Errc::invalid_argument, "chi-square: observed and expected must be non-empty and equal length");
  }
  std::vector<double> obs, exp;
  double o_acc = 0, e_acc = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += expected[i];
    if (e_acc >= min_expected) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0;
    }
  }
  if (e_acc > 0 || o_acc > 0) {
    if (exp.empty()) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
    } else {
      obs.back() += o_acc;
      exp.back() += e_acc;
    }
  }
  ChiSquareResult r;
  r.bins = exp.size();
  for (std::size_t i = 0; i < exp.size(); ++i) {
    if (exp[i] <= 0) throw Error(Errc::invalid_argument, "chi-square: zero expected count");
    const double d = obs[i] - exp[i];
    r.statistic += d * d / exp[i];
  }
  r.dof = static_cast<int>(exp.size()) - 1;
  r.p_value = r.dof > 0 ? chi_square_survival(r.statistic, r.dof) : 1.0;
  return r;
}

/// Poisson probabilities P(K = 0..kmax-1) and the tail P(K >= kmax) in the last slot.
inline std::vector<double> poisson_pmf_with_tail(double mean, std::size_t kmax) {
  std::vector<double> pmf(kmax + 1);
  double term = std::exp(-mean), acc = 0;
  for (std::size_t k = 0; k < kmax; ++k) {
    pmf[k] = term;
    acc += term;
    term *= mean / static_cast<double>(k + 1);
  }
  pmf[kmax] = std::max(0.0, 1.0 - acc);
  return pmf;
}

/// Tests that the given per-run counts are Poisson(mean).
inline ChiSquareResult poisson_gof(const std::vector<std::size_t>& counts, double mean) {
  if (counts.empty()) throw Error(Errc::invalid_argument, "poisson_gof: no runs");
  std::size_t kmax = static_cast<std::size_t>(mean + 10.0 * std::sqrt(mean + 1.0) + 10.0);
  for (const auto c : counts) kmax = std::max(kmax, c + 1);
  const auto pmf = poisson_pmf_with_tail(mean, kmax);
  std::vector<double> observed(kmax + 1, 0.0), expected(kmax + 1, 0.0);
  for (const auto c : counts) observed[c] += 1.0;
  const double runs = static_cast<double>(counts.size());
  for (std::size_t k = 0; k <= kmax; ++k) expected[k] = pmf[k] * runs;
  return chi_square_gof(observed, expected);
}

/// Tests that categorical counts follow the given probabilities.
inline ChiSquareResult categorical_gof(const std::vector<double>& counts, const std::vector<double>& probabilities) {
  double total = 0;
  for (const double c : counts) total += c;
  std::vector<double> expected(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) expected[i] = probabilities[i] * total;
  return chi_square_gof(counts, expected);
}

/// Sample moments of a scalar stream.
class Moments {
public:
  void add(double x) {
    xs_.push_back(x);
  }
  std::size_t count() const { return xs_.size(); }
  double mean() const {
    double s = 0;
    for (const double x : xs_) s += x;
    return xs_.empty() ? 0.0 : s / static_cast<double>(xs_.size());
  }
  /// Central moment of order k (biased, 1/n).
  double central(int k) const {
    const double m = mean();
    double s = 0;
    for (const double x : xs_) s += std::pow(x - m, k);
    return xs_.empty() ? 0.0 : s / static_cast<double>(xs_.size());
  }
  double std_error_of_mean() const {
    const double n = static_cast<double>(xs_.size());
    return n > 1 ? std::sqrt(central(2) * n / (n - 1) / n) : 0.0;
  }

private:
  std::vector<double> xs_;
};

struct RatioEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Sample standard deviation over mean, with a delta-method standard error
/// built from the first four sample moments.
inline RatioEstimate std_over_mean(const Moments& m) {
  const double n = static_cast<double>(m.count());
  const double mu = m.mean();
  const double v = m.central(2);
  if (n < 2 || mu == 0.0) throw Error(Errc::undefined_ratio, "std/mean needs >= 2 samples and nonzero mean");
  const double sd = std::sqrt(v);
  const double mu3 = m.central(3), mu4 = m.central(4);
  const double var_mean = v / n;
  const double var_var = std::max(0.0, (mu4 - v * v) / n);
  const double cov = mu3 / n;
  double g_mean = -sd / (mu * mu);
  double g_var = sd > 0 ? 1.0 / (2.0 * sd * mu) : 0.0;
  const double var_ratio = g_mean * g_mean * var_mean + g_var * g_var * var_var + 2.0 * g_mean * g_var * cov;
  return {sd / mu, std::sqrt(std::max(0.0, var_ratio))};
}

}  // namespace grwlim::stats
