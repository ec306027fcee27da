#include <doctest.h>

#include <cmath>

#include "grwlim/discrimination.hpp"
#include "grwlim/stats.hpp"
#include "support.hpp"

using namespace grwlim;
using cd = std::complex<double>;

namespace {


CMatrix<double> mat2(cd a, cd b, cd c, cd d) {
  CMatrix<double> m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("state vectors normalize and reject the zero vector") {
  CVector<double> v(2);
  v << 3.0, cd(0, 4.0);
  const StateVector<double> psi(v);
  CHECK(psi.amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(psi[1].imag() == doctest::Approx(0.8));
  CHECK_ERRC(StateVector<double>(CVector<double>::Zero(3)), Errc::numerical);
  CHECK_ERRC(StateVector<double>(CVector<double>()), Errc::invalid_dimension);
}

TEST_CASE("operator validation") {
  CHECK_ERRC(HermitianOperator<double>(mat2(1, 1, 0, 1)), Errc::not_hermitian);
  CHECK_ERRC(Effect<double>(mat2(1.5, 0, 0, 0)), Errc::invalid_effect);
  CHECK_ERRC(Effect<double>(mat2(-0.1, 0, 0, 0.5)), Errc::invalid_effect);
  // Round-off just outside [0, 1] is clamped rather than rejected.
  const Effect<double> e(mat2(1 + 1e-12, 0, 0, -1e-12));
  CHECK(e.matrix()(0, 0).real() <= 1.0);
  CHECK(e.matrix()(1, 1).real() >= 0.0);
  CHECK_ERRC(DensityMatrix<double>(mat2(0.5, 0, 0, 0.4)), Errc::invalid_density_matrix);
  CHECK_ERRC(DensityMatrix<double>(mat2(1.2, 0, 0, -0.2)), Errc::invalid_density_matrix);
  CHECK_ERRC(OrthonormalBasis<double>(mat2(1, 1, 0, 1)), Errc::non_orthonormal_basis);
  CHECK_ERRC(Povm<double>({{"a", Effect<double>::projector(StateVector<double>::basis_vector(2, 0))}}),
             Errc::invalid_povm);
  CHECK_ERRC(Povm<double>({}), Errc::invalid_povm);
}

TEST_CASE("Born probabilities") {
  const auto b1 = StateVector<double>::basis_vector(2, 0);
  const auto plus = StateVector<double>::uniform(2);
  CHECK(born_probability(b1, Effect<double>::identity(2)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(born_probability(plus, Effect<double>::projector(b1)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(born_probability(DensityMatrix<double>::maximally_mixed(2), Effect<double>::projector(b1)) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK_ERRC(born_probability(StateVector<double>::uniform(3), Effect<double>::identity(2)),
             Errc::dimension_mismatch);
}

TEST_CASE("outcome probabilities of a random POVM sum to one") {
  RandomStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const auto povm = random_povm<double>(n, 3 + trial % 3, rng);
    const auto psi = haar_state<double>(n, rng);
    double total = 0;
    for (std::size_t z = 0; z < povm.size(); ++z) {
      const double q = born_probability(psi, povm.effect(z));
      CHECK(q >= 0.0);
      CHECK(q <= 1.0);
      total += q;
    }
    CHECK(std::abs(total - 1) < 1e-12);
  }
}

TEST_CASE("sampling outcomes") {
  RandomStream rng(3);
  const auto b1 = StateVector<double>::basis_vector(2, 0);
  const auto plus = StateVector<double>::uniform(2);
  const Povm<double> trivial({{"all", Effect<double>::identity(2)}});
  for (int i = 0; i < 100; ++i) CHECK(sample_outcome(plus, trivial, rng) == "all");
  const auto pb = Povm<double>::yes_no(Effect<double>::projector(b1));
  for (int i = 0; i < 100; ++i) CHECK(sample_outcome(b1, pb, rng) == "yes");

  const int trials = 100000;
  int yes = 0;
  for (int i = 0; i < trials; ++i) yes += sample_outcome(plus, pb, rng) == "yes";
  const double freq = static_cast<double>(yes) / trials;
  CHECK(std::abs(freq - 0.5) <= 4 * std::sqrt(0.25 / trials));

  // An unnormalized state trips the outcome-sum check.
  const auto bogus = DensityMatrix<double>::assume_valid(HermitianOperator<double>::identity(2));
  CHECK_ERRC(sample_outcome(bogus, pb, rng), Errc::internal_consistency);
}

TEST_CASE("Haar states") {
  RandomStream rng(5);
  const auto one = haar_state<double>(1, rng);
  CHECK(std::abs(std::abs(one[0]) - 1) < 1e-15);
  CHECK_ERRC(haar_state<double>(0, rng), Errc::invalid_dimension);

  // E|psi><psi| = I/n and Var |psi_k|^2 = (n-1)/(n^2 (n+1)).
  const Eigen::Index n = 4;
  const int samples = 100000;
  CMatrix<double> mean = CMatrix<double>::Zero(n, n);
  stats::Moments w0;
  for (int s = 0; s < samples; ++s) {
    const auto psi = haar_state<double>(n, rng);
    CHECK(std::abs(psi.amplitudes().norm() - 1) < 1e-12);
    mean += projector(psi.amplitudes());
    w0.add(std::norm(psi[0]));
  }
  mean /= samples;
  const double sd = std::sqrt((n - 1.0) / (n * n * (n + 1.0)) / samples);
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(std::abs(mean(i, i).real() - 0.25) <= 4 * sd);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) CHECK(std::abs(mean(i, j)) <= 0.01);
    }
  }
  CHECK(std::abs(w0.central(2) - (n - 1.0) / (n * n * (n + 1.0))) < 0.002);
}

TEST_CASE("diagonal part") {
  const auto plus = HermitianOperator<double>::projector(StateVector<double>::uniform(2));
  const auto d = diag_part(plus);
  CHECK(max_abs((d.matrix() - CMatrix<double>::Identity(2, 2) / 2.0).eval()) < 1e-15);

  const auto b1 = HermitianOperator<double>::projector(StateVector<double>::basis_vector(2, 0));
  CHECK(max_abs((diag_part(b1).matrix() - b1.matrix()).eval()) < 1e-15);

  // Trace preservation, idempotence and linearity on random operators, in a rotated basis too.
  RandomStream rng(8);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 2 + t % 4;
    const OrthonormalBasis<double> basis(haar_unitary<double>(n, rng));
    const auto a = random_effect<double>(n, rng).op();
    const auto b = random_effect<double>(n, rng).op();
    const auto da = diag_part(a, basis);
    CHECK(std::abs(da.trace() - a.trace()) < 1e-12);
    CHECK(max_abs((diag_part(da, basis).matrix() - da.matrix()).eval()) < 1e-12);
    const auto lin = diag_part(0.3 * a + b, basis);
    CHECK(max_abs((lin.matrix() - (0.3 * da + diag_part(b, basis)).matrix()).eval()) < 1e-12);
    // A density matrix stays a density matrix.
    const auto rho = DensityMatrix<double>::pure(haar_state<double>(n, rng));
    CHECK_NOTHROW(DensityMatrix<double>(diag_part(rho.op(), basis)));
  }
  CHECK_ERRC(diag_part(plus, OrthonormalBasis<double>::standard(3)), Errc::dimension_mismatch);
}

TEST_CASE("positive part projector") {
  const auto split = positive_part_projector(HermitianOperator<double>(mat2(1, 0, 0, -1)));
  CHECK(max_abs((split.plus.matrix() - mat2(1, 0, 0, 0)).eval()) < 1e-15);
  CHECK(split.positive_eigenvalue_sum == doctest::Approx(1.0));

  const auto none = positive_part_projector(HermitianOperator<double>(-1.0 * HermitianOperator<double>::identity(3)));
  CHECK(max_abs(none.plus.matrix()) == 0.0);

  const auto zero = positive_part_projector(HermitianOperator<double>::zero(2));
  CHECK(max_abs(zero.plus.matrix()) == 0.0);
  CHECK(max_abs((zero.zero.matrix() - CMatrix<double>::Identity(2, 2)).eval()) < 1e-15);

  RandomStream rng(21);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index n = 2 + t % 3;
    const auto a = random_effect<double>(n, rng).op() - random_effect<double>(n, rng).op();
    const auto s = positive_part_projector(a);
    const auto& p = s.plus.matrix();
    CHECK(max_abs((p * p - p).eval()) < 1e-10);
    CHECK(max_abs((p * s.zero.matrix()).eval()) < 1e-10);
    // tr(P+ A) equals the positive eigenvalue sum and dominates tr(E A) for every effect E.
    const double best = (p * a.matrix()).trace().real();
    CHECK(std::abs(best - s.positive_eigenvalue_sum) < 1e-12);
    for (int k = 0; k < 1000 / 30; ++k) {
      const auto e = random_effect<double>(n, rng);
      CHECK((e.matrix() * a.matrix()).trace().real() <= best + 1e-10);
    }
  }
}

TEST_CASE("random streams are reproducible and independent of worker count") {
  const StreamKey key{42, 7};
  RandomStream a(key, 3), b(key, 3), c(key, 4);
  CHECK(a() == b());
  CHECK(a() != c());
  CHECK(key.child(1).tag != key.child(2).tag);

  const auto trial = [](RandomStream& rng, std::size_t) { return rng.uniform(); };
  const auto one = monte_carlo_mean(key, 50000, 1, trial);
  const auto four = monte_carlo_mean(key, 50000, 4, trial);
  CHECK(one.mean == four.mean);
  CHECK(one.std_error == four.std_error);
  CHECK(std::abs(one.mean - 0.5) < 4 * one.std_error);
}

TEST_CASE("chi-square helpers") {
  CHECK(stats::chi_square_survival(0.0, 3) == doctest::Approx(1.0));
  // Known quantiles: P(chi2_1 > 3.841) = 0.05, P(chi2_10 > 23.209) = 0.01.
  CHECK(stats::chi_square_survival(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(stats::chi_square_survival(23.209251158954356, 10) == doctest::Approx(0.01).epsilon(1e-9));
  const auto perfect = stats::categorical_gof({250, 250, 500}, {0.25, 0.25, 0.5});
  CHECK(perfect.statistic == doctest::Approx(0.0));
  CHECK(perfect.p_value == doctest::Approx(1.0));
  const auto skewed = stats::categorical_gof({900, 100}, {0.5, 0.5});
  CHECK(skewed.p_value < 1e-10);
}

TEST_CASE("std/mean estimate") {
  stats::Moments m;
  for (int i = 0; i < 1000; ++i) m.add(i % 2 ? 3.0 : 1.0);
  const auto r = stats::std_over_mean(m);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(r.std_error > 0);
  CHECK(r.std_error < 0.05);
}

TEST_CASE("float instantiation compiles and agrees coarsely") {
  const auto psi = StateVector<float>::uniform(2);
  const auto e = Effect<float>::projector(StateVector<float>::basis_vector(2, 1));
  CHECK(born_probability(psi, e) == doctest::Approx(0.5f).epsilon(1e-6));
}
