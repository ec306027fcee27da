#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "grwlim/experiments.hpp"

namespace ex = grwlim::experiments;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

/// Runs `write` against the file at `path`, or stdout when the path is empty.
template <typename Write>
void emit(const std::string& path, Write&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw grwlim::ConfigError("out", "cannot write " + path);
  write(out);
}

ex::FamilyKind family_kind(const std::string& s) {
  if (s == "random") return ex::FamilyKind::random;
  if (s == "detector") return ex::FamilyKind::detector;
  if (s == "mixed") return ex::FamilyKind::mixed;
  throw grwlim::ConfigError("family", "expected random, detector or mixed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collapse-detection limits and GRW simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(GRWLIM_VERSION));
  int status = kExitOk;

  ex::Figure1Options fig;
  std::string fig_out;
  auto* figure1 = app.add_subcommand("figure1", "Reliability vs p for n=2 (CSV)");
  figure1->add_option("--p-grid", fig.p_grid, "collapse probabilities")->delimiter(',');
  figure1->add_option("--trials", fig.trials, "Monte Carlo trials per point");
  figure1->add_option("--seed", fig.seed);
  figure1->add_option("--workers", fig.workers, "0 = all cores");
  figure1->add_option("--out", fig_out, "CSV path (default stdout)");
  figure1->callback([&] {
    const auto rows = ex::figure1(fig);
    emit(fig_out, [&](std::ostream& os) { ex::write_figure1_csv(os, fig, rows); });
  });

  ex::VerifyOptions ver;
  std::string ver_out;
  double ver_tol = -1;
  auto* verify = app.add_subcommand("verify", "Run the proposition suite; exit 1 on any failure");
  verify->add_option("--seed", ver.seed);
  verify->add_option("--trials", ver.trials, "Monte Carlo trials per record");
  verify->add_option("--workers", ver.workers, "0 = all cores");
  verify->add_option("--sigmas", ver.sigmas, "Monte Carlo tolerance in standard errors");
  verify->add_option("--tolerance", ver_tol, "replace every record's tolerance");
  verify->add_option("--out", ver_out, "CSV path (default stdout)");
  verify->callback([&] {
    if (verify->count("--tolerance")) ver.tolerance = ver_tol;
    const auto records = ex::run_verification(ver);
    emit(ver_out, [&](std::ostream& os) { ex::write_verification_csv(os, ver, records); });
    std::size_t failed = 0;
    for (const auto& r : records) {
      if (!r.pass()) {
        ++failed;
        std::cerr << "FAIL " << r.id << " [" << r.label << "] analytic=" << ex::format_number(r.analytic)
                  << " measured=" << ex::format_number(r.measured) << " tolerance=" << ex::format_number(r.tolerance)
                  << '\n';
      }
    }
    std::cerr << records.size() - failed << "/" << records.size() << " records pass\n";
    if (failed) status = kExitFailure;
  });

  std::string grw_config, grw_out = ".";
  double grw_t_end = -1;
  std::size_t grw_runs = 1;
  unsigned grw_workers = 0;
  std::uint64_t grw_seed = 0;
  auto* grw_run = app.add_subcommand("grw-run", "Simulate the GRW process; writes flashes.jsonl and density.csv");
  grw_run->add_option("--config", grw_config, "JSON config")->required();
  grw_run->add_option("--t-end", grw_t_end, "override t_end (time)");
  grw_run->add_option("--runs", grw_runs, "independent runs");
  grw_run->add_option("--seed", grw_seed, "override the config seed");
  grw_run->add_option("--workers", grw_workers, "0 = all cores");
  grw_run->add_option("--out", grw_out, "output directory");
  grw_run->callback([&] {
    auto config = grwlim::grw::load_config(grw_config);
    if (grw_run->count("--t-end")) config.t_end = grw_t_end;
    if (grw_run->count("--seed")) config.seed = grw_seed;
    config.validate();
    const auto batch = ex::run_grw_batch(config, grw_runs, grw_workers);
    std::filesystem::create_directories(grw_out);
    emit((std::filesystem::path(grw_out) / "flashes.jsonl").string(),
         [&](std::ostream& os) { ex::write_flashes_jsonl(os, config, batch); });
    emit((std::filesystem::path(grw_out) / "density.csv").string(),
         [&](std::ostream& os) { ex::write_density_csv(os, config, batch); });
    std::size_t flashes = 0;
    for (const auto& r : batch.runs) flashes += r.flashes.size();
    std::cout << "runs=" << batch.runs.size() << " flashes=" << flashes
              << " expected=" << ex::format_number(batch.expected_flashes_per_run * static_cast<double>(batch.runs.size()))
              << '\n';
  });

  ex::ScanOptions sc;
  std::string sc_out, sc_family = "mixed";
  auto* scan = app.add_subcommand("scan", "Success-set measures over a detector family (CSV)");
  scan->add_option("--n", sc.n, "Hilbert-space dimension");
  scan->add_option("--p", sc.p, "collapse probability");
  scan->add_option("--family-size", sc.family_size);
  scan->add_option("--samples", sc.samples, "Haar samples per effect");
  scan->add_option("--family", sc_family, "random, detector or mixed");
  scan->add_option("--rank", sc.rank, "rank of random effects (-1 = full)");
  scan->add_option("--seed", sc.seed);
  scan->add_option("--workers", sc.workers, "0 = all cores");
  scan->add_option("--sigmas", sc.sigmas);
  scan->add_option("--out", sc_out, "CSV path (default stdout)");
  scan->callback([&] {
    sc.family = family_kind(sc_family);
    const auto result = ex::run_scan(sc);
    emit(sc_out, [&](std::ostream& os) { ex::write_scan_csv(os, sc, result); });
    std::cerr << "max estimate " << ex::format_number(result.scan.max_estimate) << " (effect " << result.scan.max_id
              << "), conjecture violations " << result.scan.conjecture_violations << '\n';
  });

  ex::MassOptions md;
  std::string md_out;
  auto* massdensity = app.add_subcommand("massdensity", "Measurability of the coarse-grained mass density (CSV)");
  massdensity->add_option("--demo", md.demo, "two-branch, eigenstate, uniform-solid or spread-particle");
  massdensity->add_option("--branch-p", md.branch_p, "weight of the present branch (two-branch)");
  massdensity->add_option("--scales", md.scales, "cell lengths")->delimiter(',');
  massdensity->add_option("--threshold", md.threshold, "target ratio");
  massdensity->add_option("--seed", md.seed);
  massdensity->add_option("--out", md_out, "CSV path (default stdout)");
  massdensity->callback([&] {
    const auto result = ex::run_massdensity(md);
    const auto& rep = result.report;
    emit(md_out, [&](std::ostream& os) { ex::write_massdensity_csv(os, md, result); });
    std::cerr << "smallest passing scale: "
              << (rep.smallest_passing_scale ? ex::format_number(*rep.smallest_passing_scale) : std::string("none"))
              << '\n';
  });

  std::string h_rho1, h_rho2, h_out;
  double h_p = 0.5, h_tol = -1;
  auto* helstrom = app.add_subcommand("helstrom", "Optimal discrimination of two density matrices from JSON files");
  helstrom->add_option("--rho1", h_rho1, "collapsed hypothesis {\"re\":[[..]],\"im\":[[..]]}")->required();
  helstrom->add_option("--rho2", h_rho2, "uncollapsed hypothesis")->required();
  helstrom->add_option("--p", h_p, "prior of rho1");
  helstrom->add_option("--tolerance", h_tol, "eigenvalue zero threshold (default 1e-10 max(1, |A|))");
  helstrom->add_option("--out", h_out, "JSON path (default stdout)");
  helstrom->callback([&] {
    if (!(h_p >= 0 && h_p <= 1)) throw grwlim::ConfigError("p", "must lie in [0, 1]");
    const auto r1 = ex::load_density(h_rho1);
    const auto r2 = ex::load_density(h_rho2);
    if (r1.dim() != r2.dim()) throw grwlim::ConfigError("rho2", "dimension differs from rho1");
    const auto h = grwlim::helstrom(r1, r2, h_p, h_tol);
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index r = 0; r < h.effect.dim(); ++r) {
      std::vector<double> rr, ii;
      for (Eigen::Index c = 0; c < h.effect.dim(); ++c) {
        rr.push_back(h.effect.matrix()(r, c).real());
        ii.push_back(h.effect.matrix()(r, c).imag());
      }
      re.push_back(rr);
      im.push_back(ii);
    }
    std::vector<double> ev(h.eigenvalues.data(), h.eigenvalues.data() + h.eigenvalues.size());
    const nlohmann::json j = {{"p", h_p},
                              {"max_reliability", h.max_reliability},
                              {"blind", std::max(h_p, 1 - h_p)},
                              {"eigenvalues", ev},
                              {"effect", {{"re", re}, {"im", im}}}};
    emit(h_out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const grwlim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const grwlim::Error& e) {
    std::cerr << "error (" << grwlim::to_string(e.code()) << "): " << e.what() << '\n';
    switch (e.code()) {
      case grwlim::Errc::memory_budget:
      case grwlim::Errc::invalid_argument:
      case grwlim::Errc::invalid_dimension:
      case grwlim::Errc::resolution:
        return kExitConfig;
      default:
        return kExitFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return status;
}
