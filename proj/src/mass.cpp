#include "grwlim/mass.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace grwlim::mass {

namespace {

std::size_t whole_steps(double length, double spacing, const char* what) {
  const double steps = length / spacing;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
    throw Error(Errc::resolution, std::string(what) + " must be a whole number of grid steps");
  }
  return static_cast<std::size_t>(rounded);
}

void check_scale(double scale, double spacing) {
  if (!(scale > 0) || !std::isfinite(scale)) throw Error(Errc::invalid_argument, "coarse-graining scale must be positive");
  if (scale < spacing * (1 - 1e-12)) throw Error(Errc::resolution, "coarse-graining scale is below the grid spacing");
}

std::size_t origin_index(std::size_t points, double spacing, const CoarseGrainSpec& spec) {
  const double box = spacing * static_cast<double>(points);
  double o = std::fmod(spec.origin, box);
  if (o < 0) o += box;
  return whole_steps(o, spacing, "cell origin") % points;
}

}  // namespace

Eigen::VectorXd coarse_kernel(std::size_t points, double spacing, double scale) {
  check_scale(scale, spacing);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(points));
  for (std::size_t d = 0; d < points; ++d) {
    const double r = static_cast<double>(std::min(d, points - d)) * spacing;
    if (r > kKernelCutoff * scale) continue;
    g(static_cast<Eigen::Index>(d)) = std::exp(-r * r / (2 * scale * scale)) / (std::sqrt(2 * std::numbers::pi) * scale);
  }
  g /= g.sum() * spacing;
  return g;
}

std::size_t cell_width(std::size_t points, double spacing, const CoarseGrainSpec& spec) {
  check_scale(spec.scale, spacing);
  const std::size_t w = whole_steps(spec.scale, spacing, "cell scale");
  if (w == 0 || points % w != 0) throw Error(Errc::resolution, "cell scale must tile the periodic box");
  return w;
}

std::vector<Cell> cell_partition(std::size_t points, double spacing, const CoarseGrainSpec& spec) {
  const std::size_t w = cell_width(points, spacing, spec);
  const std::size_t o = origin_index(points, spacing, spec);
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < points / w; ++k) cells.push_back({(o + k * w) % points, w});
  return cells;
}

MassDensityField coarse_grain(const MassDensityField& m, const CoarseGrainSpec& spec) {
  const auto L = static_cast<std::size_t>(m.values.size());
  const double dx = m.spacing;
  MassDensityField out{Eigen::VectorXd::Zero(m.values.size()), dx, m.time};
  if (spec.kind == CoarseGrainSpec::Kind::gaussian) {
    const Eigen::VectorXd g = coarse_kernel(L, dx, spec.scale);
    for (std::size_t x = 0; x < L; ++x) {
      double s = 0;
      for (std::size_t y = 0; y < L; ++y) {
        const double gv = g(static_cast<Eigen::Index>((x + L - y) % L));
        if (gv != 0) s += gv * m.values(static_cast<Eigen::Index>(y));
      }
      out.values(static_cast<Eigen::Index>(x)) = s * dx;
    }
  } else {
    for (const auto& c : cell_partition(L, dx, spec)) {
      double s = 0;
      for (std::size_t r = 0; r < c.count; ++r) s += m.values(static_cast<Eigen::Index>((c.first + r) % L));
      const double avg = s / static_cast<double>(c.count);
      for (std::size_t r = 0; r < c.count; ++r) out.values(static_cast<Eigen::Index>((c.first + r) % L)) = avg;
    }
  }
  return out;
}

MassDensityField coarse_grain(const GridWaveFunction& psi, const std::vector<double>& masses,
                              const CoarseGrainSpec& spec) {
  return coarse_grain(grw::mass_density(psi, masses), spec);
}

ConfigurationSampler::ConfigurationSampler(const GridWaveFunction& psi) : grid_(psi.grid()) {
  const Eigen::VectorXd p = psi.probabilities();
  cdf_.resize(static_cast<std::size_t>(p.size()));
  double acc = 0;
  for (Eigen::Index q = 0; q < p.size(); ++q) {
    acc += p(q);
    cdf_[static_cast<std::size_t>(q)] = acc;
  }
  if (!(acc > 0)) throw Error(Errc::numerical, "wave function has no weight to sample");
}

Configuration ConfigurationSampler::operator()(RandomStream& rng) const {
  const double u = uniform01(rng) * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  const auto q = static_cast<std::size_t>(it - cdf_.begin());
  Configuration c;
  for (int i = 0; i < grid_.particles(); ++i) {
    const std::size_t j = grid_.coordinate(q, i);
    c.cells.push_back(j);
    c.positions.push_back(grid_.position(j));
  }
  return c;
}

Configuration sample_position_config(const GridWaveFunction& psi, RandomStream& rng) {
  return ConfigurationSampler(psi)(rng);
}

Eigen::VectorXd estimator_field(const Configuration& q, const std::vector<double>& masses, const CoarseGrainSpec& spec,
                                const Grid& grid) {
  if (q.cells.size() != masses.size()) throw Error(Errc::dimension_mismatch, "need one mass per sampled position");
  const std::size_t L = grid.points();
  const double dx = grid.spacing();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L));
  if (spec.kind == CoarseGrainSpec::Kind::gaussian) {
    const Eigen::VectorXd g = coarse_kernel(L, dx, spec.scale);
    for (std::size_t i = 0; i < masses.size(); ++i) {
      for (std::size_t x = 0; x < L; ++x) f(static_cast<Eigen::Index>(x)) += masses[i] * g(static_cast<Eigen::Index>((x + L - q.cells[i]) % L));
    }
  } else {
    const auto cells = cell_partition(L, dx, spec);
    const double len = static_cast<double>(cells.front().count) * dx;
    for (const auto& c : cells) {
      double m = 0;
      for (std::size_t i = 0; i < masses.size(); ++i) {
        if (c.contains(q.cells[i], L)) m += masses[i];
      }
      for (std::size_t r = 0; r < c.count; ++r) f(static_cast<Eigen::Index>((c.first + r) % L)) = m / len;
    }
  }
  return f;
}

CellMassMoments cell_mass_moments(const GridWaveFunction& psi, const Cell& cell, const std::vector<double>& masses) {
  const Grid& grid = psi.grid();
  if (masses.size() != static_cast<std::size_t>(grid.particles())) {
    throw Error(Errc::dimension_mismatch, "need one mass per particle");
  }
  if (cell.count == 0 || cell.count > grid.points()) throw Error(Errc::invalid_argument, "cell is empty or too long");
  const double len = static_cast<double>(cell.count) * grid.spacing();
  const Eigen::VectorXd p = psi.probabilities();
  Eigen::VectorXd cell_mass(p.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double m = 0;
    for (int i = 0; i < grid.particles(); ++i) {
      if (cell.contains(grid.coordinate(q, i), grid.points())) m += masses[static_cast<std::size_t>(i)];
    }
    cell_mass(static_cast<Eigen::Index>(q)) = m / len;
  }
  const double mean = p.dot(cell_mass);
  const double var = p.dot((cell_mass.array() - mean).square().matrix());
  return {mean, var};
}

double ghirardi_ratio(const GridWaveFunction& psi, const Cell& cell, const std::vector<double>& masses) {
  const auto mom = cell_mass_moments(psi, cell, masses);
  if (!(mom.mean > 0)) throw Error(Errc::undefined_ratio, "cell carries no mean mass");
  return std::sqrt(mom.variance) / mom.mean;
}

MeasurabilityReport measurability_report(const GridWaveFunction& psi, const std::vector<double>& masses,
                                         const std::vector<double>& scales, double threshold, double origin) {
  const Grid& grid = psi.grid();
  MeasurabilityReport rep;
  rep.threshold = threshold;
  for (const double scale : scales) {
    const auto cells = cell_partition(grid.points(), grid.spacing(), CoarseGrainSpec::cell(scale, origin));
    ScaleSummary s{scale, 0.0, 0};
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto mom = cell_mass_moments(psi, cells[k], masses);
      if (!(mom.mean > 1e-300)) continue;
      const double r = std::sqrt(mom.variance) / mom.mean;
      rep.rows.push_back({scale, k, r});
      s.max_ratio = std::max(s.max_ratio, r);
      ++s.cells_evaluated;
    }
    rep.scales.push_back(s);
    if (s.cells_evaluated > 0 && s.max_ratio < threshold &&
        (!rep.smallest_passing_scale || scale < *rep.smallest_passing_scale)) {
      rep.smallest_passing_scale = scale;
    }
  }
  return rep;
}

}  // namespace grwlim::mass
