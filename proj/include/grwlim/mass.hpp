#pragma once

#include <optional>
#include <vector>

#include "grwlim/grw.hpp"

namespace grwlim::mass {

using grw::Grid;
using grw::GridWaveFunction;
using grw::MassDensityField;

/// Length scale and kind of spatial averaging applied to a mass density.
struct CoarseGrainSpec {
  enum class Kind { gaussian, cell };
  double scale = 1.0;  // length
  Kind kind = Kind::cell;
  double origin = 0.0;  // length; cell partition offset

  static CoarseGrainSpec gaussian(double scale) { return {scale, Kind::gaussian, 0.0}; }
  static CoarseGrainSpec cell(double scale, double origin = 0.0) { return {scale, Kind::cell, origin}; }
};

/// Contiguous run of grid cells, indices first .. first+count-1 (mod L).
struct Cell {
  std::size_t first = 0;
  std::size_t count = 1;

  bool contains(std::size_t j, std::size_t points) const noexcept { return (j + points - first) % points < count; }
};

inline constexpr double kKernelCutoff = 8.0;  // gaussian support, in units of the scale

/// Truncated, grid-normalized kernel g_l(d) for offsets d = 0..L-1; sum g dx = 1.
Eigen::VectorXd coarse_kernel(std::size_t points, double spacing, double scale);

/// Grid points per cell; throws resolution error unless the scale is a whole
/// number of grid steps that tiles the periodic box.
std::size_t cell_width(std::size_t points, double spacing, const CoarseGrainSpec& spec);

/// The cell partition induced by `spec` (cell kind only).
std::vector<Cell> cell_partition(std::size_t points, double spacing, const CoarseGrainSpec& spec);

/// Coarse-grained density: circular convolution with the kernel (gaussian)
/// or the average over the containing cell (cell).
MassDensityField coarse_grain(const MassDensityField& m, const CoarseGrainSpec& spec);
MassDensityField coarse_grain(const GridWaveFunction& psi, const std::vector<double>& masses,
                              const CoarseGrainSpec& spec);

/// One position measurement outcome: a grid index per particle.
struct Configuration {
  std::vector<std::size_t> cells;
  std::vector<double> positions;  // length
};

/// Exact cumulative sampler for |psi(q)|^2 on the configuration grid.
class ConfigurationSampler {
public:
  explicit ConfigurationSampler(const GridWaveFunction& psi);
  Configuration operator()(RandomStream& rng) const;

private:
  Grid grid_;
  std::vector<double> cdf_;
};

Configuration sample_position_config(const GridWaveFunction& psi, RandomStream& rng);

/// Estimator field built from a single configuration: sum_i m_i g_l(Q_i - x)
/// (gaussian) or the cell mass divided by the cell length (cell).
Eigen::VectorXd estimator_field(const Configuration& q, const std::vector<double>& masses, const CoarseGrainSpec& spec,
                                const Grid& grid);

struct CellMassMoments {
  double mean = 0.0;      // mass per length
  double variance = 0.0;  // (mass per length)^2
};

/// Exact mean and variance of the cell mass operator divided by the cell length.
CellMassMoments cell_mass_moments(const GridWaveFunction& psi, const Cell& cell, const std::vector<double>& masses);

/// Relative standard deviation of the cell-averaged mass operator; throws
/// undefined_ratio when the cell carries no mean mass.
double ghirardi_ratio(const GridWaveFunction& psi, const Cell& cell, const std::vector<double>& masses);

struct MeasurabilityRow {
  double scale;
  std::size_t cell;
  double ratio;
};

struct ScaleSummary {
  double scale;
  double max_ratio;
  std::size_t cells_evaluated;
};

struct MeasurabilityReport {
  std::vector<MeasurabilityRow> rows;
  std::vector<ScaleSummary> scales;
  double threshold = 0.10;
  std::optional<double> smallest_passing_scale;
};

/// Evaluates the ratio on every massive cell for each scale; empty cells are skipped.
MeasurabilityReport measurability_report(const GridWaveFunction& psi, const std::vector<double>& masses,
                                         const std::vector<double>& scales, double threshold = 0.10,
                                         double origin = 0.0);

}  // namespace grwlim::mass
