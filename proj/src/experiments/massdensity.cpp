#include <cmath>
#include <ostream>

#include "grwlim/experiments.hpp"

namespace grwlim::experiments {

namespace {

using grw::Grid;
using grw::GridWaveFunction;
using grw::Packet;
using grw::ParticleState;

Packet block(double center, double width, std::complex<double> amplitude = 1.0) {
  return {Packet::Shape::box, center, width, 0.0, amplitude};
}

GridWaveFunction product(const Grid& grid, const std::vector<ParticleState>& parts) {
  std::vector<Eigen::VectorXcd> f;
  for (const auto& p : parts) f.push_back(p.on_grid(grid));
  return GridWaveFunction::product(grid, f);
}

}  // namespace

std::vector<std::string> mass_demo_names() { return {"two-branch", "eigenstate", "uniform-solid", "spread-particle"}; }

MassDemo make_mass_demo(const std::string& name, double branch_p) {
  if (name == "two-branch") {
    if (!(branch_p > 0 && branch_p <= 1)) throw ConfigError("branch_p", "must lie in (0, 1]");
    // object of width 8 either in [8, 16) or in [40, 48)
    const Grid grid(1, 64, 64.0);
    const ParticleState s{{block(12, 8, std::sqrt(branch_p)), block(44, 8, std::sqrt(1 - branch_p))}};
    MassDemo d{name, product(grid, {s}), {1.0}, {1, 2, 4, 8, 16, 32}, std::sqrt((1 - branch_p) / branch_p), 8, 8};
    return d;
  }
  if (name == "eigenstate") {
    const Grid grid(1, 64, 64.0);
    return {name, product(grid, {ParticleState{{block(20, 1)}}}), {1.0}, {1, 2, 4, 8, 16, 32, 64}, {}, {}, {}};
  }
  if (name == "uniform-solid") {
    // three atoms, each spread uniformly over its own lattice site of width 4
    const Grid grid(3, 32, 32.0);
    return {name,
            product(grid, {ParticleState{{block(6, 4)}}, ParticleState{{block(14, 4)}}, ParticleState{{block(22, 4)}}}),
            {1.0, 1.0, 1.0},
            {1, 2, 4, 8, 16, 32},
            {},
            {},
            {}};
  }
  if (name == "spread-particle") {
    const Grid grid(1, 64, 64.0);
    const ParticleState s{{Packet{Packet::Shape::gaussian, 24.0, 8.0, 0.0, 1.0}}};
    return {name, product(grid, {s}), {1.0}, {1, 2, 4, 8, 16}, {}, {}, {}};
  }
  throw ConfigError("demo", "unknown demo '" + name + "'");
}

nlohmann::json to_json(const MassOptions& opt) {
  return {{"command", "massdensity"}, {"demo", opt.demo},           {"branch_p", opt.branch_p},
          {"scales", opt.scales},     {"threshold", opt.threshold}, {"seed", opt.seed}};
}

MassResult run_massdensity(const MassOptions& opt) {
  if (!(opt.threshold > 0)) throw ConfigError("threshold", "must be positive");
  MassDemo demo = make_mass_demo(opt.demo, opt.branch_p);
  if (!opt.scales.empty()) demo.scales = opt.scales;
  mass::MeasurabilityReport rep;
  try {
    rep = mass::measurability_report(demo.psi, demo.masses, demo.scales, opt.threshold);
  } catch (const Error& e) {
    if (e.code() == Errc::resolution) throw ConfigError("scales", e.what());
    throw;
  }
  return {std::move(demo), std::move(rep)};
}

void write_massdensity_csv(std::ostream& out, const MassOptions& opt, const MassResult& result) {
  const auto& demo = result.demo;
  const auto& rep = result.report;
  out << header_comment(opt.seed, config_hash(to_json(opt))) << '\n';
  out << "kind,scale,cell,ratio,analytic\n";
  const Grid& grid = demo.psi.grid();
  for (const auto& row : rep.rows) {
    std::string analytic;
    if (demo.branch_ratio) {
      const auto cells =
          mass::cell_partition(grid.points(), grid.spacing(), mass::CoarseGrainSpec::cell(row.scale));
      const auto& c = cells[row.cell];
      bool whole = true;
      for (std::size_t j = *demo.branch_first; j < *demo.branch_first + *demo.branch_width; ++j) {
        whole = whole && c.contains(j, grid.points());
      }
      if (whole && c.count <= grid.points() / 2) analytic = format_number(*demo.branch_ratio);
    }
    out << "cell," << format_number(row.scale) << ',' << row.cell << ',' << format_number(row.ratio) << ','
        << analytic << '\n';
  }
  for (const auto& s : rep.scales) {
    out << "max," << format_number(s.scale) << ",," << format_number(s.max_ratio) << ",\n";
  }
  out << "smallest_passing,"
      << (rep.smallest_passing_scale ? format_number(*rep.smallest_passing_scale) : std::string("none")) << ",,"
      << format_number(rep.threshold) << ",\n";
}

}  // namespace grwlim::experiments
