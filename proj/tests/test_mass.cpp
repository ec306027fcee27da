#include <doctest.h>

#include <cmath>

#include "grwlim/mass.hpp"
#include "grwlim/stats.hpp"
#include "support.hpp"

using namespace grwlim;
using namespace grwlim::mass;
using cd = std::complex<double>;

namespace {

GridWaveFunction uniform_product(int n, std::size_t points, double box) {
  const Grid g(n, points, box);
  return GridWaveFunction(g, Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(g.size())));
}

GridWaveFunction spike(std::size_t points, double box, std::size_t at) {
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(points));
  a(static_cast<Eigen::Index>(at)) = 1;
  return GridWaveFunction(Grid(1, points, box), a);
}

/// Two box branches with weights p and 1-p in [0, w) and [L/2, L/2 + w).
GridWaveFunction two_branch(std::size_t points, std::size_t w, double p) {
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(points));
  for (std::size_t j = 0; j < w; ++j) {
    a(static_cast<Eigen::Index>(j)) = std::sqrt(p / static_cast<double>(w));
    a(static_cast<Eigen::Index>(points / 2 + j)) = std::sqrt((1 - p) / static_cast<double>(w));
  }
  return GridWaveFunction(Grid(1, points, static_cast<double>(points)), a);
}

GridWaveFunction random_state(int n, std::size_t points, double box, RandomStream& rng) {
  const Grid g(n, points, box);
  Eigen::VectorXcd a(static_cast<Eigen::Index>(g.size()));
  for (auto& x : a) x = cd(uniform01(rng) - 0.5, uniform01(rng) - 0.5);
  return GridWaveFunction(g, a);
}

}  // namespace

TEST_CASE("cell partitions") {
  CHECK(cell_width(32, 0.5, CoarseGrainSpec::cell(4)) == 8);
  const auto cells = cell_partition(32, 0.5, CoarseGrainSpec::cell(4, 1.0));
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].first == 2);
  CHECK(cells[3].contains(1, 32));
  CHECK_FALSE(cells[3].contains(2, 32));
  CHECK_ERRC(cell_width(32, 0.5, CoarseGrainSpec::cell(0.25)), Errc::resolution);
  CHECK_ERRC(cell_width(32, 0.5, CoarseGrainSpec::cell(1.25)), Errc::resolution);
  CHECK_ERRC(cell_width(32, 0.5, CoarseGrainSpec::cell(3)), Errc::resolution);  // 6 does not tile 32
  CHECK_ERRC(cell_width(32, 0.5, CoarseGrainSpec::cell(-1)), Errc::invalid_argument);
}

TEST_CASE("coarse graining") {
  const auto psi = spike(64, 32, 20);
  const std::vector<double> m{2.0};
  const auto field = grw::mass_density(psi, m);

  SUBCASE("a spike spreads into the kernel") {
    const auto k = coarse_kernel(64, 0.5, 1.5);
    CHECK(k.sum() * 0.5 == doctest::Approx(1.0).epsilon(1e-14));
    const auto smooth = coarse_grain(field, CoarseGrainSpec::gaussian(1.5));
    for (std::size_t j = 0; j < 64; ++j) {
      const std::size_t d = (j + 64 - 20) % 64;
      CHECK(smooth.values(static_cast<Eigen::Index>(j)) == doctest::Approx(2.0 * k(static_cast<Eigen::Index>(d))));
    }
    CHECK(smooth.total() == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("cell averaging") {
    const auto avg = coarse_grain(field, CoarseGrainSpec::cell(4));
    for (Eigen::Index j = 0; j < 64; ++j) {
      CHECK(avg.values(j) == doctest::Approx(j >= 16 && j < 24 ? 2.0 / 4 : 0.0));
    }
  }
  SUBCASE("total mass is conserved for random states") {
    RandomStream rng(3);
    for (int t = 0; t < 5; ++t) {
      const auto s = random_state(2, 32, 16, rng);
      const std::vector<double> masses{1.0, 2.5};
      for (const double l : {0.5, 1.0, 2.0, 4.0}) {
        CHECK(std::abs(coarse_grain(s, masses, CoarseGrainSpec::gaussian(l)).total() - 3.5) < 1e-9);
        CHECK(std::abs(coarse_grain(s, masses, CoarseGrainSpec::cell(l)).total() - 3.5) < 1e-9);
      }
    }
  }
  CHECK_ERRC(coarse_grain(field, CoarseGrainSpec::gaussian(0.1)), Errc::resolution);
}

TEST_CASE("configuration sampling") {
  SUBCASE("a spike is always found where it is") {
    const auto psi = spike(16, 8, 5);
    RandomStream rng(1);
    for (int i = 0; i < 50; ++i) {
      const auto q = sample_position_config(psi, rng);
      CHECK(q.cells == std::vector<std::size_t>{5});
      CHECK(q.positions[0] == doctest::Approx(2.5));
    }
  }
  SUBCASE("frequencies follow |psi|^2") {
    RandomStream rng(2);
    const auto psi = random_state(2, 4, 4, rng);
    const ConfigurationSampler sampler(psi);
    const auto prob = psi.probabilities();
    std::vector<double> counts(16, 0.0), expected(16, 0.0);
    for (int i = 0; i < 50000; ++i) {
      const auto q = sampler(rng);
      counts[q.cells[0] + 4 * q.cells[1]] += 1;
    }
    for (int k = 0; k < 16; ++k) expected[static_cast<std::size_t>(k)] = prob(k);
    CHECK(stats::categorical_gof(counts, expected).p_value >= 1e-3);
  }
}

TEST_CASE("the single-configuration estimator is unbiased") {
  RandomStream rng(4);
  const auto psi = random_state(2, 16, 16, rng);
  const std::vector<double> masses{1.0, 2.0};
  for (const auto spec : {CoarseGrainSpec::gaussian(2.0), CoarseGrainSpec::cell(4.0)}) {
    const auto exact = coarse_grain(psi, masses, spec);
    const ConfigurationSampler sampler(psi);
    const int samples = 20000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(16), sum_sq = Eigen::VectorXd::Zero(16);
    for (int i = 0; i < samples; ++i) {
      const auto est = estimator_field(sampler(rng), masses, spec, psi.grid());
      sum += est;
      sum_sq += est.cwiseAbs2();
    }
    for (Eigen::Index j = 0; j < 16; ++j) {
      const double mean = sum(j) / samples;
      const double se = std::sqrt(std::max(sum_sq(j) / samples - mean * mean, 0.0) / samples);
      CHECK(std::abs(mean - exact.values(j)) <= 4 * se + 1e-12);
    }
  }
}

TEST_CASE("Ghirardi ratio") {
  SUBCASE("eigenstate of the cell mass") {
    const auto psi = spike(32, 32, 10);
    CHECK(ghirardi_ratio(psi, Cell{8, 4}, {1.0}) == 0.0);
    CHECK_ERRC(ghirardi_ratio(psi, Cell{16, 4}, {1.0}), Errc::undefined_ratio);
  }
  SUBCASE("two branches give sqrt(q/p)") {
    for (const double p : {0.5, 0.9, 0.99, 0.2}) {
      const auto psi = two_branch(64, 8, p);
      CHECK(std::abs(ghirardi_ratio(psi, Cell{0, 8}, {1.0}) - std::sqrt((1 - p) / p)) < 1e-12);
    }
  }
  SUBCASE("uniform product of N particles gives sqrt((1-f)/(N f))") {
    for (const int n : {1, 2, 3}) {
      const auto psi = uniform_product(n, 16, 16);
      std::vector<double> masses(static_cast<std::size_t>(n), 1.0);
      for (const std::size_t w : {1u, 2u, 4u, 8u}) {
        const double f = static_cast<double>(w) / 16;
        CHECK(std::abs(ghirardi_ratio(psi, Cell{3, w}, masses) - std::sqrt((1 - f) / (n * f))) < 1e-12);
      }
    }
  }
  SUBCASE("moments agree with sampling") {
    RandomStream rng(5);
    const auto psi = random_state(2, 8, 8, rng);
    const std::vector<double> masses{1.0, 1.0};
    const Cell cell{2, 2};
    const auto mom = cell_mass_moments(psi, cell, masses);
    stats::Moments m;
    const ConfigurationSampler sampler(psi);
    for (int i = 0; i < 40000; ++i) {
      const auto q = sampler(rng);
      double mass = 0;
      for (int k = 0; k < 2; ++k) mass += cell.contains(q.cells[static_cast<std::size_t>(k)], 8) ? 1.0 : 0.0;
      m.add(mass / 2.0);
    }
    CHECK(std::abs(m.mean() - mom.mean) <= 4 * m.std_error_of_mean());
    const auto r = stats::std_over_mean(m);
    CHECK(std::abs(r.value - ghirardi_ratio(psi, cell, masses)) <= 4 * r.std_error);
  }
}

TEST_CASE("measurability report") {
  SUBCASE("an eigenstate passes at every scale") {
    const auto rep = measurability_report(spike(32, 32, 10), {1.0}, {1, 2, 4, 8});
    for (const auto& r : rep.rows) CHECK(r.ratio == 0.0);
    REQUIRE(rep.smallest_passing_scale.has_value());
    CHECK(*rep.smallest_passing_scale == 1.0);
  }
  SUBCASE("two equal branches never pass") {
    const auto rep = measurability_report(two_branch(64, 8, 0.5), {1.0}, {1, 2, 4, 8, 16});
    CHECK_FALSE(rep.smallest_passing_scale.has_value());
    for (const auto& s : rep.scales) CHECK(s.max_ratio >= 1.0 - 1e-12);
  }
  SUBCASE("many uniform particles pass once cells are large enough") {
    const auto psi = uniform_product(3, 16, 16);
    const auto rep = measurability_report(psi, {1, 1, 1}, {1, 2, 4, 8}, 0.6);
    // f = w/16: ratios sqrt((1-f)/(3f)) are 2.24, 1.53, 1.0, 0.58.
    REQUIRE(rep.smallest_passing_scale.has_value());
    CHECK(*rep.smallest_passing_scale == 8.0);
    CHECK(rep.scales.size() == 4);
  }
}
