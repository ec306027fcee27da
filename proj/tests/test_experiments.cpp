#include <doctest.h>

#include <cmath>
#include <sstream>

#include "grwlim/experiments.hpp"
#include "support.hpp"

using namespace grwlim;
namespace ex = grwlim::experiments;

namespace {

template <typename Write>
std::string capture(Write&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("number formatting round-trips") {
  CHECK(ex::format_number(0.1) == "0.1");
  CHECK(ex::format_number(1.0) == "1");
  CHECK(std::stod(ex::format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(ex::header_comment(5, "abc") == std::string("# tool=grwlim version=") + GRWLIM_VERSION + " seed=5 config_hash=abc");
}

TEST_CASE("figure1 rows") {
  ex::Figure1Options opt;
  opt.p_grid = {0.0, 0.5, 0.8, 1.0};
  opt.trials = 20000;
  opt.workers = 2;
  const auto rows = ex::figure1(opt);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].blind == 0.5);
  CHECK(rows[1].e1_analytic == doctest::Approx(0.75));
  CHECK(rows[1].optimal_analytic == doctest::Approx(0.75));
  CHECK(rows[2].blind == 0.8);
  CHECK(rows[2].optimal_analytic == doctest::Approx(0.8));
  CHECK(rows[3].e1_analytic == doctest::Approx(0.5));
  for (const auto& r : rows) {
    CHECK(std::abs(r.e1_mc - r.e1_analytic) <= std::max(4 * r.e1_std_error, 1e-12));
    CHECK(std::abs(r.optimal_mc - r.optimal_analytic) <= std::max(4 * r.optimal_std_error, 1e-12));
  }
  const auto csv = capture([&](std::ostream& os) { ex::write_figure1_csv(os, opt, rows); });
  CHECK(first_line(csv).rfind("# tool=grwlim", 0) == 0);
  opt.workers = 1;
  CHECK(capture([&](std::ostream& os) { ex::write_figure1_csv(os, opt, ex::figure1(opt)); }) == csv);

  opt.p_grid = {1.5};
  CHECK_ERRC(ex::figure1(opt), Errc::config);
}

TEST_CASE("verification suite") {
  ex::VerifyOptions opt;
  opt.seed = 3;
  opt.trials = 4000;
  opt.workers = 1;
  const auto a = ex::run_verification(opt);
  CHECK(ex::all_pass(a));
  opt.workers = 4;
  const auto b = ex::run_verification(opt);
  const auto csv_a = capture([&](std::ostream& os) { ex::write_verification_csv(os, opt, a); });
  const auto csv_b = capture([&](std::ostream& os) { ex::write_verification_csv(os, opt, b); });
  CHECK(csv_a == csv_b);

  opt.tolerance = 0.0;
  const auto strict = ex::run_verification(opt);
  CHECK_FALSE(ex::all_pass(strict));
  for (const auto& r : strict) CHECK(r.tolerance == 0.0);

  ex::VerificationRecord r{"x", "y", 1.0, 1.5, 0.1, ex::Comparison::at_most};
  CHECK_FALSE(r.pass());
  r.comparison = ex::Comparison::at_least;
  CHECK(r.pass());
}

TEST_CASE("scan") {
  ex::ScanOptions opt;
  opt.n = 2;
  opt.p = 0.3;
  opt.family_size = 12;
  opt.samples = 2000;
  const auto a = ex::run_scan(opt);
  CHECK(a.labels.size() == 12);
  for (const auto& row : a.scan.rows) CHECK(row.estimate <= 0.5 + 4 * row.std_error);
  const auto csv = capture([&](std::ostream& os) { ex::write_scan_csv(os, opt, a); });
  CHECK(capture([&](std::ostream& os) { ex::write_scan_csv(os, opt, ex::run_scan(opt)); }) == csv);
  opt.samples = 10;
  CHECK_ERRC(ex::run_scan(opt), Errc::config);
}

TEST_CASE("mass-density demos") {
  SUBCASE("two-branch at p = 1/2 has ratio one") {
    ex::MassOptions opt;
    const auto r = ex::run_massdensity(opt);
    REQUIRE(r.demo.branch_ratio.has_value());
    CHECK(*r.demo.branch_ratio == doctest::Approx(1.0));
    CHECK_FALSE(r.report.smallest_passing_scale.has_value());
    const auto csv = capture([&](std::ostream& os) { ex::write_massdensity_csv(os, opt, r); });
    CHECK(csv.find("analytic") != std::string::npos);
  }
  SUBCASE("eigenstate rows are zero") {
    ex::MassOptions opt;
    opt.demo = "eigenstate";
    const auto r = ex::run_massdensity(opt);
    for (const auto& row : r.report.rows) CHECK(row.ratio == 0.0);
  }
  SUBCASE("uniform solid passes at the lattice scale") {
    ex::MassOptions opt;
    opt.demo = "uniform-solid";
    const auto r = ex::run_massdensity(opt);
    REQUIRE(r.report.smallest_passing_scale.has_value());
    CHECK(*r.report.smallest_passing_scale == 4.0);
  }
  SUBCASE("errors") {
    ex::MassOptions opt;
    opt.demo = "nope";
    CHECK_ERRC(ex::run_massdensity(opt), Errc::config);
    opt.demo = "two-branch";
    opt.scales = {3.0};
    CHECK_ERRC(ex::run_massdensity(opt), Errc::config);
  }
}

TEST_CASE("density matrices from JSON") {
  const auto rho = ex::density_from_json(nlohmann::json{{"re", {{0.5, 0.0}, {0.0, 0.5}}}}, "rho");
  CHECK(rho.dim() == 2);
  const auto field = [](const nlohmann::json& j) -> std::string {
    try {
      ex::density_from_json(j, "rho");
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "";
  };
  CHECK(field(nlohmann::json{{"re", {{0.5, 0.0}, {0.0}}}}) == "rho.re[1]");
  CHECK(field(nlohmann::json{{"re", {{0.5, "x"}, {0.0, 0.5}}}}) == "rho.re[0][1]");
  CHECK(field(nlohmann::json{{"re", {{0.6, 0.0}, {0.0, 0.6}}}}) == "rho");
  CHECK(field(nlohmann::json{{"im", {{0.0}}}}) == "rho.re");
}

TEST_CASE("GRW batch output") {
  auto config = ex::two_packet_config(0.7, 11);
  config.t_end = 2.0;
  config.snapshot_interval = 1.0;

  SUBCASE("lambda = 0 writes a header-only flash file") {
    config.lambda_rate = 0.0;
    const auto batch = ex::run_grw_batch(config, 3, 2);
    const auto jsonl = capture([&](std::ostream& os) { ex::write_flashes_jsonl(os, config, batch); });
    CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 1);
    CHECK(jsonl.find("\"config_hash\"") != std::string::npos);
    const auto csv = capture([&](std::ostream& os) { ex::write_density_csv(os, config, batch); });
    // header comment + column row + 3 runs x 3 snapshots x 128 points
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 3 * 3 * 128);
  }
  SUBCASE("reruns and worker counts give identical bytes") {
    config.lambda_rate = 1.0;
    const auto a = ex::run_grw_batch(config, 4, 1);
    const auto b = ex::run_grw_batch(config, 4, 4);
    CHECK(capture([&](std::ostream& os) { ex::write_flashes_jsonl(os, config, a); }) ==
          capture([&](std::ostream& os) { ex::write_flashes_jsonl(os, config, b); }));
    CHECK(capture([&](std::ostream& os) { ex::write_density_csv(os, config, a); }) ==
          capture([&](std::ostream& os) { ex::write_density_csv(os, config, b); }));
  }
  CHECK_ERRC(ex::run_grw_batch(config, 0, 1), Errc::config);
}

TEST_CASE("GRW statistics") {
  const auto g = ex::grw_statistics(5, 2000, 2000, 0);
  CHECK(g.flash_counts.p_value >= ex::kChiSquareSignificance);
  CHECK(g.max_norm_error < 1e-12);
  CHECK(std::abs(g.branch_frequency - g.branch_probability) <= 4 * g.branch_std_error);
}
