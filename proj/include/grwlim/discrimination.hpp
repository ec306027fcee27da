#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grwlim/collapse.hpp"
#include "grwlim/quantum.hpp"
#include "grwlim/random.hpp"

namespace grwlim {

/// Amplitudes with |<b_k|psi>|^2 at or below this weight count as zero.
inline constexpr double kSupportWeight = 1e-28;
/// Within this distance of p = n/(n+1) the E = I branch is taken.
inline constexpr double kBranchSlack = 1e-12;
/// Numerical margin for "strictly better than blind guessing".
inline constexpr double kSuccessMargin = 1e-12;

/// Two-outcome experiment; "yes" means a collapse occurred.
template <typename Real = double>
class YesNoExperiment {
public:
  explicit YesNoExperiment(Effect<Real> yes) : yes_(std::move(yes)) {}

  const Effect<Real>& effect_yes() const noexcept { return yes_; }
  Effect<Real> effect_no() const { return yes_.complement(); }
  Povm<Real> povm() const { return Povm<Real>::yes_no(yes_); }
  Eigen::Index dim() const noexcept { return yes_.dim(); }

private:
  Effect<Real> yes_;
};

template <typename Real>
void require_probability(Real p, const char* what) {
  if (!(p >= Real(0) && p <= Real(1))) {
    throw Error(Errc::invalid_argument, std::string(what) + ": p must lie in [0, 1]");
  }
}

/// A = p diag E + (1-p)(I - E); the reliability for psi is <psi|A|psi>.
template <typename Real>
HermitianOperator<Real> reliability_operator(const YesNoExperiment<Real>& exp, const OrthonormalBasis<Real>& basis,
                                             Real p) {
  require_probability(p, "reliability_operator");
  require_same_dim(exp.dim(), basis.dim(), "reliability_operator");
  const auto diag_e = diag_part(exp.effect_yes().op(), basis);
  return HermitianOperator<Real>(p * diag_e.matrix() + (Real(1) - p) * exp.effect_no().matrix());
}

template <typename Real>
Real reliability_pure(const StateVector<Real>& psi, const YesNoExperiment<Real>& exp,
                      const OrthonormalBasis<Real>& basis, Real p) {
  require_same_dim(psi.dim(), exp.dim(), "reliability_pure");
  const auto a = reliability_operator(exp, basis, p);
  return sandwich(psi.amplitudes(), a.matrix(), psi.amplitudes()).real();
}

/// tr(rho A) for a mixed prior over the pre-collapse state.
template <typename Real>
Real reliability_mixed(const DensityMatrix<Real>& rho, const YesNoExperiment<Real>& exp,
                       const OrthonormalBasis<Real>& basis, Real p) {
  require_same_dim(rho.dim(), exp.dim(), "reliability_mixed");
  const auto a = reliability_operator(exp, basis, p);
  return rho.matrix().cwiseProduct(a.matrix().transpose()).sum().real();
}

/// p tr(E rho1) + (1-p) tr((I-E) rho2), with p the prior of rho1.
template <typename Real>
Real reliability_two_hypothesis(const DensityMatrix<Real>& rho1, const DensityMatrix<Real>& rho2,
                                const Effect<Real>& effect, Real p) {
  require_probability(p, "reliability_two_hypothesis");
  require_same_dim(rho1.dim(), rho2.dim(), "reliability_two_hypothesis");
  require_same_dim(rho1.dim(), effect.dim(), "reliability_two_hypothesis");
  const Real yes1 = rho1.matrix().cwiseProduct(effect.matrix().transpose()).sum().real();
  const Real yes2 = rho2.matrix().cwiseProduct(effect.matrix().transpose()).sum().real();
  return p * yes1 + (Real(1) - p) * (Real(1) - yes2);
}

template <typename Real = double>
struct BlindGuess {
  Effect<Real> effect;
  Real reliability;
};

/// Answer "no" (E = 0) when p <= 1/2, otherwise "yes" (E = I).
template <typename Real>
BlindGuess<Real> blind_guess(Eigen::Index n, Real p) {
  require_probability(p, "blind_guess");
  if (p <= Real(0.5)) return {Effect<Real>::zero(n), Real(1) - p};
  return {Effect<Real>::identity(n), p};
}

template <typename Real = double>
struct HelstromResult {
  Effect<Real> effect;
  Real max_reliability;
  RVector<Real> eigenvalues;  // spectrum of p rho1 - (1-p) rho2, ascending
  Real zero_tolerance;
};

/// Minimum-error discrimination of rho1 (prior p) against rho2: E = P+(p rho1 - (1-p) rho2).
template <typename Real>
HelstromResult<Real> helstrom(const DensityMatrix<Real>& rho1, const DensityMatrix<Real>& rho2, Real p,
                              Real zero_tol = Real(-1)) {
  require_probability(p, "helstrom");
  require_same_dim(rho1.dim(), rho2.dim(), "helstrom");
  if (p == Real(0) || p == Real(1)) {
    auto g = blind_guess(rho1.dim(), p);
    return {g.effect, g.reliability, RVector<Real>(), Real(0)};
  }
  const HermitianOperator<Real> a(p * rho1.matrix() - (Real(1) - p) * rho2.matrix());
  auto split = positive_part_projector(a, zero_tol);
  return {std::move(split.plus), Real(1) - p + split.positive_eigenvalue_sum, std::move(split.eigenvalues),
          split.tolerance};
}

/// Born weights restricted to the support (weights above kSupportWeight).
template <typename Real>
std::vector<Real> support_weights(const StateVector<Real>& psi, const OrthonormalBasis<Real>& basis) {
  const RVector<Real> w = branch_weights(psi, basis);
  std::vector<Real> out;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (w(k) > Real(kSupportWeight)) out.push_back(w(k));
  }
  return out;
}

template <typename Real>
Real f_weights(const std::vector<Real>& w, Real z) {
  Real f = 0;
  for (const Real x : w) f += x / (z + x);
  return f;
}

/// f_psi(z) = sum_k |psi_k|^2 / (z + |psi_k|^2) over the support of psi.
template <typename Real>
Real f_psi(const StateVector<Real>& psi, Real z, const OrthonormalBasis<Real>& basis) {
  if (!(z >= Real(0))) throw Error(Errc::invalid_argument, "f_psi: z must be >= 0");
  return f_weights(support_weights(psi, basis), z);
}

template <typename Real>
Real f_psi(const StateVector<Real>& psi, Real z) {
  return f_psi(psi, z, OrthonormalBasis<Real>::standard(psi.dim()));
}

/// Solves f(z) = ratio for z >= 0 by bisection. `ratio` must not exceed
/// f(0) = support size.
template <typename Real>
Real invert_f_weights(const std::vector<Real>& w, Real ratio, Real tol = Real(1e-12)) {
  if (!(ratio > Real(0))) throw Error(Errc::invalid_argument, "invert_f_psi: ratio must be > 0");
  const Real f0 = static_cast<Real>(w.size());
  if (ratio > f0 + tol) {
    throw Error(Errc::out_of_branch, "invert_f_psi: ratio exceeds f_psi(0); the E = I branch applies");
  }
  if (ratio >= f0 - tol) return Real(0);

  Real lo = 0, hi = 1;
  while (f_weights(w, hi) >= ratio) {
    hi *= 2;
    if (!std::isfinite(static_cast<double>(hi))) throw Error(Errc::numerical, "invert_f_psi: no upper bracket");
  }
  // Bisect to full resolution; the tolerance is a postcondition, not a stopping rule.
  for (int it = 0; it < 2000; ++it) {
    const Real mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    if (f_weights(w, mid) >= ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const Real err_lo = std::abs(f_weights(w, lo) - ratio);
  const Real err_hi = std::abs(f_weights(w, hi) - ratio);
  const Real z = err_lo <= err_hi ? lo : hi;
  if (std::min(err_lo, err_hi) > tol) throw Error(Errc::numerical, "invert_f_psi: tolerance not reached");
  return z;
}

template <typename Real>
Real invert_f_psi(const StateVector<Real>& psi, Real ratio, const OrthonormalBasis<Real>& basis,
                  Real tol = Real(1e-12)) {
  return invert_f_weights(support_weights(psi, basis), ratio, tol);
}

template <typename Real>
Real invert_f_psi(const StateVector<Real>& psi, Real ratio, Real tol = Real(1e-12)) {
  return invert_f_psi(psi, ratio, OrthonormalBasis<Real>::standard(psi.dim()), tol);
}

template <typename Real = double>
struct OptimalDetector {
  Effect<Real> effect;
  std::optional<Real> z_value;  // absent on the E = I branch
  Real reliability;
};

/// Closed-form optimal collapse detector for a known pre-collapse state.
/// Below p = n/(n+1) (n = support size) it is I - |psi~><psi~| with
/// psi~ proportional to (z I + diag|psi><psi|)^{-1} psi and reliability p(1+z);
/// at and above it, E = I with reliability p.
template <typename Real>
OptimalDetector<Real> optimal_collapse_detector(const StateVector<Real>& psi, const OrthonormalBasis<Real>& basis,
                                                Real p) {
  require_same_dim(psi.dim(), basis.dim(), "optimal_collapse_detector");
  require_probability(p, "optimal_collapse_detector");
  if (p == Real(0) || p == Real(1)) {
    throw Error(Errc::degenerate_prior, "optimal_collapse_detector: p in {0, 1}; use blind_guess");
  }
  const Eigen::Index n = psi.dim();
  const CVector<Real> coeff = basis.coefficients(psi.amplitudes());
  const RVector<Real> w = coeff.cwiseAbs2();
  std::vector<Real> support;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (w(k) > Real(kSupportWeight)) support.push_back(w(k));
  }
  const Real n_eff = static_cast<Real>(support.size());
  const Real branch = n_eff / (n_eff + Real(1));
  if (p >= branch - Real(kBranchSlack)) return {Effect<Real>::identity(n), std::nullopt, p};

  const Real z = invert_f_weights(support, p / (Real(1) - p));
  CVector<Real> tilde = CVector<Real>::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (w(k) > Real(kSupportWeight)) tilde(k) = coeff(k) / (z + w(k));
  }
  const StateVector<Real> psi_tilde(basis.is_standard() ? tilde : CVector<Real>(basis.matrix() * tilde));
  return {Effect<Real>::projector(psi_tilde).complement(), z, p * (Real(1) + z)};
}

template <typename Real>
OptimalDetector<Real> optimal_collapse_detector(const StateVector<Real>& psi, Real p) {
  return optimal_collapse_detector(psi, OrthonormalBasis<Real>::standard(psi.dim()), p);
}

/// Upper bound on any experiment's reliability: 1 - p/n up to p = n/(n+1), p beyond.
template <typename Real>
Real reliability_bound(Eigen::Index n, Real p) {
  if (n < 1) throw Error(Errc::invalid_dimension, "reliability_bound needs n >= 1");
  require_probability(p, "reliability_bound");
  const Real nn = static_cast<Real>(n);
  return p <= nn / (nn + Real(1)) ? Real(1) - p / nn : p;
}

/// P(C=1 | Z=z) = p tr(rho1 E_z) / (p tr(rho1 E_z) + (1-p) tr(rho2 E_z)).
template <typename Real>
Real bayes_posterior(const DensityMatrix<Real>& rho1, const DensityMatrix<Real>& rho2, const Effect<Real>& outcome,
                     Real p) {
  require_probability(p, "bayes_posterior");
  const Real joint1 = p * born_probability(rho1, outcome);
  const Real joint0 = (Real(1) - p) * born_probability(rho2, outcome);
  const Real total = joint1 + joint0;
  if (!(total > Real(1e-14))) throw Error(Errc::conditioning, "bayes_posterior: outcome has zero probability");
  return joint1 / total;
}

/// Posterior for a known pre-collapse state and a labelled POVM outcome.
template <typename Real>
Real bayes_posterior(const StateVector<Real>& psi, const Povm<Real>& povm, const OrthonormalBasis<Real>& basis,
                     Real p, const std::string& outcome) {
  const auto idx = povm.find(outcome);
  if (!idx) throw Error(Errc::invalid_argument, "bayes_posterior: unknown outcome label '" + outcome + "'");
  const auto pair = rho_pair(psi, basis);
  return bayes_posterior(pair.rho1, pair.rho2, povm.effect(*idx), p);
}

template <typename Real>
Real bayes_posterior(const StateVector<Real>& psi, const YesNoExperiment<Real>& exp,
                     const OrthonormalBasis<Real>& basis, Real p, bool answered_yes) {
  return bayes_posterior(psi, exp.povm(), basis, p, answered_yes ? "yes" : "no");
}

/// Posterior when the pre-collapse state is random with density matrix rho:
/// the collapsed hypothesis has density diag(rho), the uncollapsed one rho.
template <typename Real>
Real bayes_posterior_mixed(const DensityMatrix<Real>& rho, const Povm<Real>& povm,
                           const OrthonormalBasis<Real>& basis, Real p, const std::string& outcome) {
  const auto idx = povm.find(outcome);
  if (!idx) throw Error(Errc::invalid_argument, "bayes_posterior: unknown outcome label '" + outcome + "'");
  const auto rho1 = DensityMatrix<Real>::assume_valid(diag_part(rho.op(), basis));
  return bayes_posterior(rho1, rho, povm.effect(*idx), p);
}

/// Haar-averaged reliability 1 - p - (1-2p) tr(E)/n.
template <typename Real>
Real haar_average_reliability(const YesNoExperiment<Real>& exp, Real p) {
  require_probability(p, "haar_average_reliability");
  const Real n = static_cast<Real>(exp.dim());
  return Real(1) - p - (Real(1) - Real(2) * p) * exp.effect_yes().op().trace() / n;
}

/// Monte Carlo mean of reliability_pure over Haar-random pre-collapse states.
template <typename Real>
MeanEstimate haar_average_reliability_mc(const YesNoExperiment<Real>& exp, const OrthonormalBasis<Real>& basis,
                                         Real p, std::size_t samples, const StreamKey& key, unsigned workers = 1) {
  const auto a = reliability_operator(exp, basis, p);
  const Eigen::Index n = exp.dim();
  return monte_carlo_mean(key, samples, workers, [&](RandomStream& rng, std::size_t) {
    const auto psi = haar_state<Real>(n, rng);
    return static_cast<double>(sandwich(psi.amplitudes(), a.matrix(), psi.amplitudes()).real());
  });
}

/// Simulates collapse channel + measurement and scores whether the answer
/// matches the hidden collapse flag.
template <typename Real>
MeanEstimate reliability_monte_carlo(const StateVector<Real>& psi, const YesNoExperiment<Real>& exp,
                                     const CollapseChannel<Real>& channel, std::size_t trials, const StreamKey& key,
                                     unsigned workers = 1) {
  require_same_dim(psi.dim(), exp.dim(), "reliability_monte_carlo");
  const auto povm = exp.povm();
  return monte_carlo_mean(key, trials, workers, [&](RandomStream& rng, std::size_t) {
    const auto out = apply_collapse(channel, psi, rng);
    const bool said_yes = sample_outcome_index(out.post_state, povm, rng) == 0;
    return said_yes == out.collapsed ? 1.0 : 0.0;
  });
}

template <typename Real = double>
struct ReliabilityReport {
  Real p;
  Real analytic;
  Real monte_carlo;
  Real std_error;
  Real bound;
  std::size_t trials;

  /// |analytic - monte_carlo| <= sigmas * stderr (floored at 1e-12 for exact cases)
  bool consistent(Real sigmas = Real(4)) const {
    return std::abs(analytic - monte_carlo) <= std::max(sigmas * std_error, Real(1e-12));
  }
  bool within_bound(Real slack = Real(1e-10)) const { return analytic <= bound + slack; }
};

template <typename Real>
ReliabilityReport<Real> reliability_report(const StateVector<Real>& psi, const YesNoExperiment<Real>& exp,
                                           const CollapseChannel<Real>& channel, std::size_t trials,
                                           const StreamKey& key, unsigned workers = 1) {
  const Real p = channel.p();
  const auto mc = reliability_monte_carlo(psi, exp, channel, trials, key, workers);
  return {p,
          reliability_pure(psi, exp, channel.basis(), p),
          static_cast<Real>(mc.mean),
          static_cast<Real>(mc.std_error),
          reliability_bound(psi.dim(), p),
          trials};
}

template <typename Real = double>
struct SuccessEstimate {
  Real estimate;
  Real std_error;
  std::size_t samples;
};

/// Haar measure of {psi : R_psi(E) > max(p, 1-p)}, by sampling.
template <typename Real, typename Rng>
SuccessEstimate<Real> success_set_measure(const YesNoExperiment<Real>& exp, const OrthonormalBasis<Real>& basis,
                                          Real p, std::size_t samples, Rng& rng) {
  if (samples < 1000) throw Error(Errc::invalid_argument, "success_set_measure needs at least 1000 samples");
  const auto a = reliability_operator(exp, basis, p);
  const Real threshold = std::max(p, Real(1) - p) + Real(kSuccessMargin);
  const Eigen::Index n = exp.dim();
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto psi = haar_state<Real>(n, rng);
    if (sandwich(psi.amplitudes(), a.matrix(), psi.amplitudes()).real() > threshold) ++hits;
  }
  const Real m = static_cast<Real>(samples);
  const Real est = static_cast<Real>(hits) / m;
  return {est, std::sqrt(est * (Real(1) - est) / m), samples};
}

/// U diag(u_1..u_rank, 0, ...) U^dagger with Haar U and u_k uniform in [0, 1].
template <typename Real = double, typename Rng>
Effect<Real> random_effect(Eigen::Index n, Rng& rng, Eigen::Index rank = -1) {
  if (rank < 0) rank = n;
  if (rank > n) throw Error(Errc::invalid_argument, "random_effect: rank exceeds dimension");
  const CMatrix<Real> u = haar_unitary<Real>(n, rng);
  RVector<Real> d = RVector<Real>::Zero(n);
  for (Eigen::Index k = 0; k < rank; ++k) d(k) = static_cast<Real>(uniform01(rng));
  return Effect<Real>::assume_valid(HermitianOperator<Real>(u * d.asDiagonal() * u.adjoint()));
}

/// I - |phi><phi|
template <typename Real>
Effect<Real> detector_effect(const StateVector<Real>& phi) {
  return Effect<Real>::projector(phi).complement();
}

template <typename Real = double>
struct SuccessScanRow {
  std::size_t id;
  Real estimate;
  Real std_error;
  bool exceeds_half;           // estimate > 1/2 + 4 stderr
  bool conjecture_violation;   // estimate > 1 - 1/e + 4 stderr
};

template <typename Real = double>
struct SuccessScan {
  std::vector<SuccessScanRow<Real>> rows;
  std::size_t max_id = 0;
  Real max_estimate = 0;
  std::size_t conjecture_violations = 0;
};

inline constexpr double kConjecturedSuccessBound = 0.63212055882855767;  // 1 - 1/e

/// Success-set measure for every effect of a family. Effect i draws its
/// states from stream i of `key`, so the table is independent of `workers`.
template <typename Real>
SuccessScan<Real> scan_success_sets(Eigen::Index n, Real p, const std::vector<Effect<Real>>& family,
                                    std::size_t samples, const StreamKey& key, unsigned workers = 1,
                                    Real sigmas = Real(4)) {
  if (family.empty()) throw Error(Errc::invalid_argument, "scan_success_sets: empty detector family");
  const auto basis = OrthonormalBasis<Real>::standard(n);
  SuccessScan<Real> scan;
  scan.rows.resize(family.size());
  parallel_for(family.size(), workers, [&](std::size_t i) {
    require_same_dim(family[i].dim(), n, "scan_success_sets");
    RandomStream rng(key, i);
    const auto est = success_set_measure(YesNoExperiment<Real>(family[i]), basis, p, samples, rng);
    scan.rows[i] = {i, est.estimate, est.std_error, est.estimate > Real(0.5) + sigmas * est.std_error,
                    est.estimate > Real(kConjecturedSuccessBound) + sigmas * est.std_error};
  });
  scan.max_estimate = scan.rows.front().estimate;
  for (const auto& r : scan.rows) {
    if (r.estimate > scan.max_estimate) {
      scan.max_estimate = r.estimate;
      scan.max_id = r.id;
    }
    if (r.conjecture_violation) ++scan.conjecture_violations;
  }
  return scan;
}

/// Outcome-string counts of repeated Lueders measurements, one map per
/// prepared state. Strings use 'Y' for the E outcome and 'N' for I - E.
struct RepeatedMeasurementTable {
  std::vector<std::map<std::string, std::size_t>> counts;
  std::size_t trials = 0;

  double frequency(std::size_t state, const std::string& outcomes) const {
    const auto& m = counts.at(state);
    const auto it = m.find(outcomes);
    return it == m.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(trials);
  }
};

template <typename Real>
bool is_projector(const Effect<Real>& e, Real tolerance = Real(tol::projector)) {
  return max_abs((e.matrix() * e.matrix() - e.matrix()).eval()) <= tolerance;
}

/// True when E psi = psi or E psi = 0 for every member of the family.
template <typename Real>
bool leaves_family_invariant(const std::vector<StateVector<Real>>& family, const Effect<Real>& e,
                             Real tolerance = Real(1e-10)) {
  for (const auto& psi : family) {
    const CVector<Real> ep = e.matrix() * psi.amplitudes();
    if ((ep - psi.amplitudes()).norm() > tolerance && ep.norm() > tolerance) return false;
  }
  return true;
}

/// Applies the projective instrument {E, I - E} `reps` times in a row to each
/// prepared state, replacing the state by its normalized projection after
/// every outcome.
template <typename Real, typename Rng>
RepeatedMeasurementTable repeated_measurement_experiment(const std::vector<StateVector<Real>>& family,
                                                         const Effect<Real>& projective_effect, std::size_t reps,
                                                         std::size_t trials, Rng& rng) {
  if (!is_projector(projective_effect)) {
    throw Error(Errc::unsupported_instrument, "repeated measurement needs a projective effect");
  }
  if (reps < 1) throw Error(Errc::invalid_argument, "repeated measurement needs reps >= 1");
  const auto& e = projective_effect.matrix();
  RepeatedMeasurementTable table;
  table.trials = trials;
  table.counts.resize(family.size());
  std::string outcomes(reps, 'N');
  for (std::size_t s = 0; s < family.size(); ++s) {
    require_same_dim(family[s].dim(), projective_effect.dim(), "repeated_measurement_experiment");
    for (std::size_t t = 0; t < trials; ++t) {
      CVector<Real> psi = family[s].amplitudes();
      for (std::size_t r = 0; r < reps; ++r) {
        const CVector<Real> yes_part = e * psi;
        const Real p_yes = clamp_probability(psi.dot(yes_part).real());
        const bool yes = static_cast<Real>(uniform01(rng)) < p_yes;
        outcomes[r] = yes ? 'Y' : 'N';
        psi = yes ? yes_part : CVector<Real>(psi - yes_part);
        psi /= psi.norm();
      }
      ++table.counts[s][outcomes];
    }
  }
  return table;
}

}  // namespace grwlim
