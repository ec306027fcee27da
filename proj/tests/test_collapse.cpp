#include <doctest.h>

#include <cmath>

#include "grwlim/collapse.hpp"
#include "grwlim/stats.hpp"
#include "support.hpp"

using namespace grwlim;

TEST_CASE("collapse channel construction") {
  CHECK_ERRC(CollapseChannel<double>::standard(2, -0.1), Errc::invalid_argument);
  CHECK_ERRC(CollapseChannel<double>::standard(2, 1.1), Errc::invalid_argument);
  CHECK_NOTHROW(CollapseChannel<double>::standard(2, 0.0));
  CHECK_NOTHROW(CollapseChannel<double>::standard(2, 1.0));
}

TEST_CASE("apply_collapse examples") {
  RandomStream rng(1);
  const auto plus = StateVector<double>::uniform(2);
  const auto never = CollapseChannel<double>::standard(2, 0.0);
  for (int i = 0; i < 100; ++i) {
    const auto out = apply_collapse(never, plus, rng);
    CHECK_FALSE(out.collapsed);
    CHECK_FALSE(out.branch.has_value());
    CHECK((out.post_state.amplitudes() - plus.amplitudes()).norm() == 0.0);
  }

  // A basis vector is a fixed point whether or not the channel fires.
  const auto b2 = StateVector<double>::basis_vector(3, 1);
  const auto always = CollapseChannel<double>::standard(3, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto out = apply_collapse(always, b2, rng);
    CHECK(out.collapsed);
    CHECK(*out.branch == 1);
    CHECK((out.post_state.amplitudes() - b2.amplitudes()).norm() < 1e-15);
  }

  // Phase of the selected amplitude is kept.
  CVector<double> v(2);
  v << std::complex<double>(0, 1), 0.0;
  const auto out = apply_collapse(CollapseChannel<double>::standard(2, 1.0), StateVector<double>(v), rng);
  CHECK(std::abs(out.post_state[0] - std::complex<double>(0, 1)) < 1e-15);

  CHECK_ERRC(apply_collapse(always, plus, rng), Errc::dimension_mismatch);
}

TEST_CASE("collapse at p=1 picks branches with Born frequencies") {
  RandomStream rng(2);
  CVector<double> v(3);
  v << 1.0, std::sqrt(2.0), std::sqrt(3.0);
  const StateVector<double> psi(v);
  const auto ch = CollapseChannel<double>::standard(3, 1.0);
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < 60000; ++i) counts[static_cast<std::size_t>(*apply_collapse(ch, psi, rng).branch)] += 1;
  const auto gof = stats::categorical_gof(counts, {1 / 6.0, 2 / 6.0, 3 / 6.0});
  CHECK(gof.p_value >= 1e-3);
}

TEST_CASE("empirical post-collapse density matches p rho1 + (1-p) rho2") {
  RandomStream rng(3);
  const auto psi = haar_state<double>(3, rng);
  const OrthonormalBasis<double> basis(haar_unitary<double>(3, rng));
  const CollapseChannel<double> ch(basis, 0.35);
  const int trials = 100000;
  CMatrix<double> sum = CMatrix<double>::Zero(3, 3);
  CMatrix<double> sum_sq = CMatrix<double>::Zero(3, 3);
  for (int i = 0; i < trials; ++i) {
    const auto out = apply_collapse(ch, psi, rng);
    const CMatrix<double> pr = projector(out.post_state.amplitudes());
    sum += pr;
    sum_sq += pr.cwiseAbs2();
  }
  const CMatrix<double> mean = sum / trials;
  const auto exact = post_collapse_density(ch, psi).matrix();
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double var = sum_sq(i, j).real() / trials - std::norm(mean(i, j));
      CHECK(std::abs(mean(i, j) - exact(i, j)) <= 4 * std::sqrt(std::max(var, 1e-30) / trials) + 1e-12);
    }
  }
}

TEST_CASE("density pair") {
  const auto plus = StateVector<double>::uniform(2);
  const auto pair = rho_pair(plus);
  CHECK(max_abs((pair.rho1.matrix() - CMatrix<double>::Identity(2, 2) / 2.0).eval()) < 1e-15);
  CHECK(max_abs((pair.rho2.matrix() - CMatrix<double>::Constant(2, 2, 0.5)).eval()) < 1e-15);

  const auto b1 = StateVector<double>::basis_vector(2, 0);
  const auto same = rho_pair(b1);
  CHECK(max_abs((same.rho1.matrix() - same.rho2.matrix()).eval()) < 1e-15);

  RandomStream rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto psi = haar_state<double>(4, rng);
    const auto pr = rho_pair(psi);
    CHECK(std::abs(pr.rho1.op().trace() - 1) < 1e-12);
    CHECK(max_abs((pr.rho1.matrix() - pr.rho1.matrix().diagonal().asDiagonal().toDenseMatrix()).eval()) == 0.0);
  }
}

TEST_CASE("post-collapse density at the endpoints") {
  const auto plus = StateVector<double>::uniform(2);
  const auto pair = rho_pair(plus);
  CHECK(max_abs((post_collapse_density(CollapseChannel<double>::standard(2, 0), plus).matrix() - pair.rho2.matrix())
                    .eval()) < 1e-15);
  CHECK(max_abs((post_collapse_density(CollapseChannel<double>::standard(2, 1), plus).matrix() - pair.rho1.matrix())
                    .eval()) < 1e-15);
}

TEST_CASE("ensembles") {
  const auto b1 = StateVector<double>::basis_vector(2, 0);
  const auto b2 = StateVector<double>::basis_vector(2, 1);
  const auto rho = ensemble_density(Ensemble<double>({{0.5, b1}, {0.5, b2}}));
  CHECK(max_abs((rho.matrix() - CMatrix<double>::Identity(2, 2) / 2.0).eval()) < 1e-15);
  CHECK(max_abs((ensemble_density(Ensemble<double>::delta(b1)).matrix() - projector(b1.amplitudes())).eval()) < 1e-15);

  RandomStream rng(5);
  const auto haar = ensemble_density(Ensemble<double>(Ensemble<double>::Haar{2}), 100000, rng);
  CHECK(haar.samples == 100000);
  CHECK(max_abs((haar.rho.matrix() - CMatrix<double>::Identity(2, 2) / 2.0).eval()) < 0.01);

  CHECK_ERRC(Ensemble<double>(std::vector<Ensemble<double>::Entry>{}), Errc::invalid_argument);
  CHECK_ERRC(Ensemble<double>({{0.5, b1}, {0.4, b2}}), Errc::invalid_argument);
  CHECK_ERRC(Ensemble<double>({{1.5, b1}, {-0.5, b2}}), Errc::invalid_argument);
  CHECK_ERRC(Ensemble<double>(Ensemble<double>::Haar{0}), Errc::invalid_dimension);
  CHECK_ERRC(ensemble_density(Ensemble<double>(Ensemble<double>::Haar{2})), Errc::invalid_argument);
}

TEST_CASE("twin ensembles share I/n and have disjoint supports") {
  for (Eigen::Index n = 2; n <= 6; ++n) {
    const auto twins = twin_ensembles<double>(n);
    const CMatrix<double> mixed = CMatrix<double>::Identity(n, n) / static_cast<double>(n);
    CHECK(max_abs((ensemble_density(twins.mu1).matrix() - mixed).eval()) < 1e-12);
    CHECK(max_abs((ensemble_density(twins.mu2).matrix() - mixed).eval()) < 1e-12);
    for (const auto& a : twins.mu1.entries()) {
      for (const auto& b : twins.mu2.entries()) {
        CHECK(std::abs(std::abs(a.state.amplitudes().dot(b.state.amplitudes())) - 1) > 1e-6);
      }
    }
  }
  CHECK_ERRC(twin_ensembles<double>(1), Errc::invalid_dimension);
}
