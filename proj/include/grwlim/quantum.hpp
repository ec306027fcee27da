#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "grwlim/linalg.hpp"
#include "grwlim/random.hpp"

namespace grwlim {

namespace tol {
inline constexpr double norm = 1e-12;
inline constexpr double hermitian = 1e-12;
inline constexpr double effect_slack = 1e-10;
inline constexpr double density_slack = 1e-10;
inline constexpr double povm_sum = 1e-10;
inline constexpr double orthonormal = 1e-10;
inline constexpr double outcome_sum = 1e-8;
inline constexpr double projector = 1e-10;
}  // namespace tol

/// Unit vector in C^n. Every constructor normalizes.
template <typename Real = double>
class StateVector {
public:
  using Vector = CVector<Real>;

  explicit StateVector(Vector amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() < 1) throw Error(Errc::invalid_dimension, "state vector needs dimension >= 1");
    const Real norm = amps_.norm();
    if (!(norm > Real(0)) || !std::isfinite(static_cast<double>(norm))) {
      throw Error(Errc::numerical, "state vector has zero or non-finite norm");
    }
    amps_ /= norm;
  }

  static StateVector basis_vector(Eigen::Index n, Eigen::Index k) {
    if (n < 1) throw Error(Errc::invalid_dimension, "basis vector needs dimension >= 1");
    if (k < 0 || k >= n) throw Error(Errc::invalid_argument, "basis index out of range");
    return StateVector(Vector::Unit(n, k));
  }

  /// sum_k n^{-1/2} b_k
  static StateVector uniform(Eigen::Index n) {
    if (n < 1) throw Error(Errc::invalid_dimension, "uniform state needs dimension >= 1");
    return StateVector(Vector::Constant(n, Complex<Real>(1)));
  }

  const Vector& amplitudes() const noexcept { return amps_; }
  Eigen::Index dim() const noexcept { return amps_.size(); }
  Complex<Real> operator[](Eigen::Index k) const { return amps_(k); }

private:
  Vector amps_;
};

/// Orthonormal basis stored as the columns of a unitary matrix.
template <typename Real = double>
class OrthonormalBasis {
public:
  using Matrix = CMatrix<Real>;

  explicit OrthonormalBasis(Matrix columns) : u_(std::move(columns)) {
    if (u_.rows() < 1) throw Error(Errc::invalid_dimension, "basis needs dimension >= 1");
    if (u_.rows() != u_.cols()) throw Error(Errc::non_orthonormal_basis, "basis matrix must be square");
    const Matrix gram = u_.adjoint() * u_;
    if (max_abs((gram - Matrix::Identity(dim(), dim())).eval()) > Real(tol::orthonormal)) {
      throw Error(Errc::non_orthonormal_basis, "basis vectors are not orthonormal within 1e-10");
    }
    standard_ = max_abs((u_ - Matrix::Identity(dim(), dim())).eval()) == Real(0);
  }

  static OrthonormalBasis standard(Eigen::Index n) {
    if (n < 1) throw Error(Errc::invalid_dimension, "basis needs dimension >= 1");
    return OrthonormalBasis(Matrix::Identity(n, n));
  }
  static OrthonormalBasis fourier(Eigen::Index n) {
    if (n < 1) throw Error(Errc::invalid_dimension, "basis needs dimension >= 1");
    return OrthonormalBasis(fourier_matrix<Real>(n));
  }

  const Matrix& matrix() const noexcept { return u_; }
  Eigen::Index dim() const noexcept { return u_.rows(); }
  bool is_standard() const noexcept { return standard_; }
  auto vector(Eigen::Index k) const { return u_.col(k); }

  /// <b_k|v> for all k.
  template <typename Derived>
  CVector<Real> coefficients(const Eigen::MatrixBase<Derived>& v) const {
    if (standard_) return v;
    return u_.adjoint() * v;
  }

private:
  Matrix u_;
  bool standard_ = false;
};

template <typename Real = double>
class HermitianOperator {
public:
  using Matrix = CMatrix<Real>;

  explicit HermitianOperator(Matrix entries) : a_(std::move(entries)) {
    if (a_.rows() < 1) throw Error(Errc::invalid_dimension, "operator needs dimension >= 1");
    if (a_.rows() != a_.cols()) throw Error(Errc::not_hermitian, "operator matrix must be square");
    const Real scale = std::max(Real(1), max_abs(a_));
    if (!is_hermitian(a_, Real(tol::hermitian) * scale)) {
      throw Error(Errc::not_hermitian, "operator is not self-adjoint within 1e-12");
    }
    // Remove the anti-Hermitian rounding residue so spectral routines see an exact A = A^dagger.
    a_ = (Real(0.5) * (a_ + a_.adjoint())).eval();
  }

  static HermitianOperator identity(Eigen::Index n) { return HermitianOperator(Matrix::Identity(n, n)); }
  static HermitianOperator zero(Eigen::Index n) { return HermitianOperator(Matrix::Zero(n, n)); }
  static HermitianOperator projector(const StateVector<Real>& psi) {
    return HermitianOperator(grwlim::projector(psi.amplitudes()));
  }

  const Matrix& matrix() const noexcept { return a_; }
  Eigen::Index dim() const noexcept { return a_.rows(); }
  Real trace() const { return a_.trace().real(); }

  friend HermitianOperator operator+(const HermitianOperator& x, const HermitianOperator& y) {
    require_same_dim(x.dim(), y.dim(), "operator sum");
    return HermitianOperator(x.a_ + y.a_);
  }
  friend HermitianOperator operator-(const HermitianOperator& x, const HermitianOperator& y) {
    require_same_dim(x.dim(), y.dim(), "operator difference");
    return HermitianOperator(x.a_ - y.a_);
  }
  friend HermitianOperator operator*(Real s, const HermitianOperator& x) { return HermitianOperator(s * x.a_); }

private:
  Matrix a_;
};

/// Self-adjoint E with 0 <= E <= I. Construction accepts eigenvalues in
/// [-1e-10, 1 + 1e-10] and clamps them into [0, 1].
template <typename Real = double>
class Effect {
public:
  using Matrix = CMatrix<Real>;

  explicit Effect(const HermitianOperator<Real>& op) : op_(op) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(op_.matrix());
    if (es.info() != Eigen::Success) throw Error(Errc::numerical, "eigen-decomposition of effect failed");
    const auto& ev = es.eigenvalues();
    const Real lo = ev.minCoeff(), hi = ev.maxCoeff();
    if (lo < -Real(tol::effect_slack) || hi > Real(1) + Real(tol::effect_slack)) {
      throw Error(Errc::invalid_effect, "effect eigenvalues outside [0, 1]");
    }
    if (lo < Real(0) || hi > Real(1)) {
      const RVector<Real> clamped = ev.cwiseMax(Real(0)).cwiseMin(Real(1));
      op_ = HermitianOperator<Real>(es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint());
    }
  }
  explicit Effect(Matrix entries) : Effect(HermitianOperator<Real>(std::move(entries))) {}

  static Effect identity(Eigen::Index n) { return assume_valid(HermitianOperator<Real>::identity(n)); }
  static Effect zero(Eigen::Index n) { return assume_valid(HermitianOperator<Real>::zero(n)); }
  static Effect projector(const StateVector<Real>& psi) {
    return assume_valid(HermitianOperator<Real>::projector(psi));
  }

  /// Skips the spectral check; the caller guarantees 0 <= E <= I.
  static Effect assume_valid(HermitianOperator<Real> op) { return Effect(std::move(op), Trusted{}); }

  /// I - E
  Effect complement() const {
    return assume_valid(HermitianOperator<Real>(Matrix::Identity(dim(), dim()) - op_.matrix()));
  }

  const HermitianOperator<Real>& op() const noexcept { return op_; }
  const Matrix& matrix() const noexcept { return op_.matrix(); }
  Eigen::Index dim() const noexcept { return op_.dim(); }

private:
  struct Trusted {};
  Effect(HermitianOperator<Real> op, Trusted) : op_(std::move(op)) {}

  HermitianOperator<Real> op_;
};

/// Positive semi-definite, unit trace.
template <typename Real = double>
class DensityMatrix {
public:
  using Matrix = CMatrix<Real>;

  explicit DensityMatrix(const HermitianOperator<Real>& op) : op_(op) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(op_.matrix(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(Errc::numerical, "eigen-decomposition of density matrix failed");
    if (es.eigenvalues().minCoeff() < -Real(tol::density_slack)) {
      throw Error(Errc::invalid_density_matrix, "density matrix has a negative eigenvalue");
    }
    if (std::abs(op_.trace() - Real(1)) > Real(tol::density_slack)) {
      throw Error(Errc::invalid_density_matrix, "density matrix trace differs from 1");
    }
  }
  explicit DensityMatrix(Matrix entries) : DensityMatrix(HermitianOperator<Real>(std::move(entries))) {}

  static DensityMatrix pure(const StateVector<Real>& psi) {
    return DensityMatrix(HermitianOperator<Real>::projector(psi), Trusted{});
  }
  static DensityMatrix maximally_mixed(Eigen::Index n) {
    if (n < 1) throw Error(Errc::invalid_dimension, "density matrix needs dimension >= 1");
    return DensityMatrix(HermitianOperator<Real>(Matrix::Identity(n, n) / static_cast<Real>(n)), Trusted{});
  }
  /// Skips the spectral check; the caller guarantees positivity and unit trace.
  static DensityMatrix assume_valid(HermitianOperator<Real> op) { return DensityMatrix(std::move(op), Trusted{}); }

  const HermitianOperator<Real>& op() const noexcept { return op_; }
  const Matrix& matrix() const noexcept { return op_.matrix(); }
  Eigen::Index dim() const noexcept { return op_.dim(); }

private:
  struct Trusted {};
  DensityMatrix(HermitianOperator<Real> op, Trusted) : op_(std::move(op)) {}

  HermitianOperator<Real> op_;
};

/// Labelled effects summing to the identity.
template <typename Real = double>
class Povm {
public:
  struct Element {
    std::string label;
    Effect<Real> effect;
  };

  explicit Povm(std::vector<Element> elements) : elements_(std::move(elements)) {
    if (elements_.empty()) throw Error(Errc::invalid_povm, "POVM needs at least one effect");
    const Eigen::Index n = elements_.front().effect.dim();
    CMatrix<Real> sum = CMatrix<Real>::Zero(n, n);
    for (const auto& e : elements_) {
      require_same_dim(e.effect.dim(), n, "POVM element");
      sum += e.effect.matrix();
    }
    if (max_abs((sum - CMatrix<Real>::Identity(n, n)).eval()) > Real(tol::povm_sum)) {
      throw Error(Errc::invalid_povm, "POVM effects do not sum to the identity within 1e-10");
    }
  }

  /// {yes: E, no: I - E}
  static Povm yes_no(const Effect<Real>& yes) {
    return Povm({Element{"yes", yes}, Element{"no", yes.complement()}});
  }

  std::size_t size() const noexcept { return elements_.size(); }
  Eigen::Index dim() const noexcept { return elements_.front().effect.dim(); }
  const std::string& label(std::size_t i) const { return elements_.at(i).label; }
  const Effect<Real>& effect(std::size_t i) const { return elements_.at(i).effect; }
  const std::vector<Element>& elements() const noexcept { return elements_; }

  std::optional<std::size_t> find(const std::string& label) const {
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      if (elements_[i].label == label) return i;
    }
    return std::nullopt;
  }

private:
  std::vector<Element> elements_;
};

// ---------------------------------------------------------------------------
// Operations

/// Haar-uniform unit vector: n independent standard complex Gaussians, normalized.
template <typename Real = double, typename Rng>
StateVector<Real> haar_state(Eigen::Index n, Rng& rng) {
  if (n < 1) throw Error(Errc::invalid_dimension, "haar_state needs dimension >= 1");
  std::normal_distribution<Real> gauss;
  CVector<Real> v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Real re = gauss(rng);
    const Real im = gauss(rng);
    v(k) = Complex<Real>(re, im);
  }
  return StateVector<Real>(std::move(v));
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// R's diagonal divided out.
template <typename Real = double, typename Rng>
CMatrix<Real> haar_unitary(Eigen::Index n, Rng& rng) {
  if (n < 1) throw Error(Errc::invalid_dimension, "haar_unitary needs dimension >= 1");
  std::normal_distribution<Real> gauss;
  CMatrix<Real> z(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Real re = gauss(rng);
      const Real im = gauss(rng);
      z(i, j) = Complex<Real>(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix<Real>> qr(z);
  CMatrix<Real> q = qr.householderQ();
  const CMatrix<Real>& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Real mag = std::abs(r(k, k));
    if (mag > Real(0)) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

template <typename Real>
Real clamp_probability(Real x) {
  return std::clamp(x, Real(0), Real(1));
}

/// <psi|E|psi>, clamped to [0, 1].
template <typename Real>
Real born_probability(const StateVector<Real>& psi, const Effect<Real>& effect) {
  require_same_dim(psi.dim(), effect.dim(), "born_probability");
  return clamp_probability(sandwich(psi.amplitudes(), effect.matrix(), psi.amplitudes()).real());
}

/// tr(rho E), clamped to [0, 1].
template <typename Real>
Real born_probability(const DensityMatrix<Real>& rho, const Effect<Real>& effect) {
  require_same_dim(rho.dim(), effect.dim(), "born_probability");
  return clamp_probability(rho.matrix().cwiseProduct(effect.matrix().transpose()).sum().real());
}

/// Draws an outcome index with probability born_probability(state, E_z), by
/// cumulative inversion over the POVM's label order.
template <typename State, typename Real, typename Rng>
std::size_t sample_outcome_index(const State& state, const Povm<Real>& povm, Rng& rng) {
  thread_local std::vector<Real> probs;
  probs.resize(povm.size());
  Real total = 0;
  for (std::size_t i = 0; i < povm.size(); ++i) {
    probs[i] = born_probability(state, povm.effect(i));
    total += probs[i];
  }
  if (std::abs(total - Real(1)) > Real(tol::outcome_sum)) {
    throw Error(Errc::internal_consistency, "outcome probabilities do not sum to 1 within 1e-8");
  }
  const Real u = static_cast<Real>(uniform01(rng)) * total;
  Real acc = 0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= Real(0)) continue;
    last_nonzero = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_nonzero;
}

template <typename State, typename Real, typename Rng>
std::string sample_outcome(const State& state, const Povm<Real>& povm, Rng& rng) {
  return povm.label(sample_outcome_index(state, povm, rng));
}

/// sum_k |b_k><b_k| A |b_k><b_k|
template <typename Real>
HermitianOperator<Real> diag_part(const HermitianOperator<Real>& a, const OrthonormalBasis<Real>& basis) {
  require_same_dim(a.dim(), basis.dim(), "diag_part");
  if (basis.is_standard()) return HermitianOperator<Real>(standard_diag_part(a.matrix()));
  const auto& u = basis.matrix();
  const CVector<Real> d = (u.adjoint() * a.matrix() * u).diagonal();
  return HermitianOperator<Real>(u * d.asDiagonal() * u.adjoint());
}

template <typename Real>
HermitianOperator<Real> diag_part(const HermitianOperator<Real>& a) {
  return HermitianOperator<Real>(standard_diag_part(a.matrix()));
}

template <typename Real>
struct SpectralSplit {
  Effect<Real> plus;           // projector onto eigenvalues > tol
  Effect<Real> zero;           // projector onto |eigenvalue| <= tol
  Real positive_eigenvalue_sum;
  RVector<Real> eigenvalues;   // ascending
  Real tolerance;
};

/// Zero-eigenvalue threshold 1e-10 * max(1, ||A||_op).
template <typename Real>
Real default_zero_tolerance(const RVector<Real>& eigenvalues) {
  const Real op_norm = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : Real(0);
  return Real(1e-10) * std::max(Real(1), op_norm);
}

/// Spectral projectors of A onto its positive and (numerically) zero
/// eigenspaces. A negative `zero_tol` selects default_zero_tolerance.
template <typename Real>
SpectralSplit<Real> positive_part_projector(const HermitianOperator<Real>& a, Real zero_tol = Real(-1)) {
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(a.matrix());
  if (es.info() != Eigen::Success) throw Error(Errc::numerical, "eigen-decomposition did not converge");
  const RVector<Real>& ev = es.eigenvalues();
  const auto& vecs = es.eigenvectors();
  const Real t = zero_tol < Real(0) ? default_zero_tolerance(ev) : zero_tol;

  const Eigen::Index n = a.dim();
  CMatrix<Real> plus = CMatrix<Real>::Zero(n, n);
  CMatrix<Real> zero = CMatrix<Real>::Zero(n, n);
  Real sum = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (ev(k) > t) {
      plus.noalias() += vecs.col(k) * vecs.col(k).adjoint();
      sum += ev(k);
    } else if (std::abs(ev(k)) <= t) {
      zero.noalias() += vecs.col(k) * vecs.col(k).adjoint();
    }
  }
  return {Effect<Real>::assume_valid(HermitianOperator<Real>(std::move(plus))),
          Effect<Real>::assume_valid(HermitianOperator<Real>(std::move(zero))), sum, ev, t};
}


/// POVM with `outcomes` elements E_k = S^{-1/2} G_k S^{-1/2}, G_k = A_k A_k^dagger
/// for complex Gaussian A_k and S = sum_k G_k. Labels are "z0", "z1", ...
template <typename Real = double, typename Rng>
Povm<Real> random_povm(Eigen::Index n, std::size_t outcomes, Rng& rng) {
  if (n < 1) throw Error(Errc::invalid_dimension, "random_povm needs n >= 1");
  if (outcomes < 1) throw Error(Errc::invalid_argument, "random_povm needs at least one outcome");
  std::normal_distribution<Real> normal(Real(0), Real(1));
  std::vector<CMatrix<Real>> g;
  CMatrix<Real> sum = CMatrix<Real>::Zero(n, n);
  for (std::size_t k = 0; k < outcomes; ++k) {
    CMatrix<Real> a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex<Real>(normal(rng), normal(rng));
    }
    g.push_back(a * a.adjoint());
    sum += g.back();
  }
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(sum);
  if (es.info() != Eigen::Success) throw Error(Errc::numerical, "eigen-decomposition did not converge");
  const CMatrix<Real> inv_sqrt = es.operatorInverseSqrt();
  std::vector<typename Povm<Real>::Element> elements;
  CMatrix<Real> acc = CMatrix<Real>::Zero(n, n);
  for (std::size_t k = 0; k < outcomes; ++k) {
    CMatrix<Real> e = inv_sqrt * g[k] * inv_sqrt;
    if (k + 1 == outcomes) e = CMatrix<Real>::Identity(n, n) - acc;
    acc += e;
    elements.push_back({"z" + std::to_string(k), Effect<Real>(HermitianOperator<Real>(std::move(e)))});
  }
  return Povm<Real>(std::move(elements));
}

}  // namespace grwlim
