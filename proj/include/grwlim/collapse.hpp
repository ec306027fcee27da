#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "grwlim/quantum.hpp"

namespace grwlim {

/// One-shot random collapse: with probability p the state jumps to a basis
/// vector b_k (Born weight |<b_k|psi>|^2, phase kept), otherwise it is left alone.
template <typename Real = double>
class CollapseChannel {
public:
  CollapseChannel(OrthonormalBasis<Real> basis, Real p) : basis_(std::move(basis)), p_(p) {
    if (!(p >= Real(0) && p <= Real(1))) throw Error(Errc::invalid_argument, "collapse probability must lie in [0, 1]");
  }
  static CollapseChannel standard(Eigen::Index n, Real p) { return {OrthonormalBasis<Real>::standard(n), p}; }

  const OrthonormalBasis<Real>& basis() const noexcept { return basis_; }
  Real p() const noexcept { return p_; }
  Eigen::Index dim() const noexcept { return basis_.dim(); }

private:
  OrthonormalBasis<Real> basis_;
  Real p_;
};

template <typename Real = double>
struct CollapseOutcome {
  StateVector<Real> post_state;
  bool collapsed = false;
  std::optional<Eigen::Index> branch;  // set iff collapsed
};

/// Born weights |<b_k|psi>|^2 in the channel basis.
template <typename Real>
RVector<Real> branch_weights(const StateVector<Real>& psi, const OrthonormalBasis<Real>& basis) {
  require_same_dim(psi.dim(), basis.dim(), "branch_weights");
  return basis.coefficients(psi.amplitudes()).cwiseAbs2();
}

template <typename Real, typename Rng>
CollapseOutcome<Real> apply_collapse(const CollapseChannel<Real>& channel, const StateVector<Real>& psi, Rng& rng) {
  require_same_dim(psi.dim(), channel.dim(), "apply_collapse");
  if (!(static_cast<Real>(uniform01(rng)) < channel.p())) return {psi, false, std::nullopt};

  const CVector<Real> coeff = channel.basis().coefficients(psi.amplitudes());
  const RVector<Real> w = coeff.cwiseAbs2();
  const Real u = static_cast<Real>(uniform01(rng)) * w.sum();
  Real acc = 0;
  Eigen::Index k = -1;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) <= Real(0)) continue;  // zero-amplitude branches are never selected
    k = i;
    acc += w(i);
    if (u < acc) break;
  }
  if (k < 0) throw Error(Errc::numerical, "state has no support in the collapse basis");
  const Complex<Real> phase = coeff(k) / std::abs(coeff(k));
  return {StateVector<Real>(phase * channel.basis().vector(k)), true, k};
}

template <typename Real = double>
struct DensityPair {
  DensityMatrix<Real> rho1;  // collapsed hypothesis: diag |psi><psi|
  DensityMatrix<Real> rho2;  // uncollapsed: |psi><psi|
};

template <typename Real>
DensityPair<Real> rho_pair(const StateVector<Real>& psi, const OrthonormalBasis<Real>& basis) {
  require_same_dim(psi.dim(), basis.dim(), "rho_pair");
  const auto pure = HermitianOperator<Real>::projector(psi);
  return {DensityMatrix<Real>::assume_valid(diag_part(pure, basis)), DensityMatrix<Real>::assume_valid(pure)};
}

template <typename Real>
DensityPair<Real> rho_pair(const StateVector<Real>& psi) {
  return rho_pair(psi, OrthonormalBasis<Real>::standard(psi.dim()));
}

/// p rho1 + (1-p) rho2: the exact average of |psi'><psi'| under the channel.
template <typename Real>
DensityMatrix<Real> post_collapse_density(const CollapseChannel<Real>& channel, const StateVector<Real>& psi) {
  const auto pair = rho_pair(psi, channel.basis());
  const Real p = channel.p();
  return DensityMatrix<Real>::assume_valid(
      HermitianOperator<Real>(p * pair.rho1.matrix() + (Real(1) - p) * pair.rho2.matrix()));
}

/// Distribution over unit vectors: either finitely many weighted states or the
/// Haar measure on C^n (sampled).
template <typename Real = double>
class Ensemble {
public:
  struct Entry {
    Real weight;
    StateVector<Real> state;
  };
  struct Haar {
    Eigen::Index dim;
  };

  explicit Ensemble(std::vector<Entry> entries) : source_(std::move(entries)) {
    const auto& e = std::get<std::vector<Entry>>(source_);
    if (e.empty()) throw Error(Errc::invalid_argument, "ensemble has no entries");
    Real total = 0;
    for (const auto& x : e) {
      if (x.weight < Real(0)) throw Error(Errc::invalid_argument, "ensemble weight is negative");
      require_same_dim(x.state.dim(), e.front().state.dim(), "ensemble entry");
      total += x.weight;
    }
    if (std::abs(total - Real(1)) > Real(1e-12)) throw Error(Errc::invalid_argument, "ensemble weights do not sum to 1");
  }
  explicit Ensemble(Haar haar) : source_(haar) {
    if (haar.dim < 1) throw Error(Errc::invalid_dimension, "Haar ensemble needs dimension >= 1");
  }

  static Ensemble delta(const StateVector<Real>& psi) { return Ensemble({Entry{Real(1), psi}}); }
  /// Equal weights over the basis vectors.
  static Ensemble uniform_over(const OrthonormalBasis<Real>& basis) {
    std::vector<Entry> e;
    const Real w = Real(1) / static_cast<Real>(basis.dim());
    for (Eigen::Index k = 0; k < basis.dim(); ++k) e.push_back({w, StateVector<Real>(basis.vector(k))});
    return Ensemble(std::move(e));
  }

  bool is_finite() const noexcept { return std::holds_alternative<std::vector<Entry>>(source_); }
  const std::vector<Entry>& entries() const { return std::get<std::vector<Entry>>(source_); }
  Eigen::Index dim() const {
    return is_finite() ? entries().front().state.dim() : std::get<Haar>(source_).dim;
  }

private:
  std::variant<std::vector<Entry>, Haar> source_;
};

template <typename Real = double>
struct SampledDensity {
  DensityMatrix<Real> rho;
  std::size_t samples;  // 0 for exact finite sums
};

/// rho_mu = sum_j w_j |psi_j><psi_j| (finite ensembles only).
template <typename Real>
DensityMatrix<Real> ensemble_density(const Ensemble<Real>& mu) {
  if (!mu.is_finite()) throw Error(Errc::invalid_argument, "sampled ensemble needs a sample count and stream");
  const Eigen::Index n = mu.dim();
  CMatrix<Real> rho = CMatrix<Real>::Zero(n, n);
  for (const auto& e : mu.entries()) rho.noalias() += e.weight * projector(e.state.amplitudes());
  return DensityMatrix<Real>(HermitianOperator<Real>(std::move(rho)));
}

/// Exact for finite ensembles; Monte Carlo average of `samples` draws otherwise.
template <typename Real, typename Rng>
SampledDensity<Real> ensemble_density(const Ensemble<Real>& mu, std::size_t samples, Rng& rng) {
  if (mu.is_finite()) return {ensemble_density(mu), 0};
  if (samples == 0) throw Error(Errc::invalid_argument, "sampled ensemble needs at least one sample");
  const Eigen::Index n = mu.dim();
  CMatrix<Real> rho = CMatrix<Real>::Zero(n, n);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto psi = haar_state<Real>(n, rng);
    rho.noalias() += projector(psi.amplitudes());
  }
  rho /= static_cast<Real>(samples);
  return {DensityMatrix<Real>::assume_valid(HermitianOperator<Real>(std::move(rho))), samples};
}

template <typename Real = double>
struct EnsemblePair {
  Ensemble<Real> mu1;
  Ensemble<Real> mu2;
};

/// Two ensembles with disjoint supports and the same density matrix I/n:
/// uniform over the standard basis and uniform over the Fourier basis.
template <typename Real = double>
EnsemblePair<Real> twin_ensembles(Eigen::Index n) {
  if (n < 2) throw Error(Errc::invalid_dimension, "twin ensembles need dimension >= 2");
  return {Ensemble<Real>::uniform_over(OrthonormalBasis<Real>::standard(n)),
          Ensemble<Real>::uniform_over(OrthonormalBasis<Real>::fourier(n))};
}

}  // namespace grwlim
