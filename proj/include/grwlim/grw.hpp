#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "grwlim/errors.hpp"
#include "grwlim/random.hpp"

namespace grwlim::grw {

/// Periodic 1-D grid x_j = j * dx (j = 0..L-1) shared by N particles; the
/// configuration grid is its N-fold product with particle 1 varying fastest.
class Grid {
public:
  Grid(int n_particles, std::size_t points, double box_length);

  int particles() const noexcept { return particles_; }
  std::size_t points() const noexcept { return points_; }
  double box_length() const noexcept { return box_; }
  double spacing() const noexcept { return box_ / static_cast<double>(points_); }
  /// Number of configuration-grid points, L^N.
  std::size_t size() const noexcept { return size_; }
  /// Volume element dx^N of the configuration grid.
  double cell_volume() const noexcept { return cell_volume_; }

  double position(std::size_t j) const noexcept { return static_cast<double>(j) * spacing(); }
  /// Stride of particle `i` (0-based) in the flat configuration index.
  std::size_t stride(int i) const noexcept { return strides_[static_cast<std::size_t>(i)]; }
  /// Grid index of particle `i` (0-based) at flat configuration index `q`.
  std::size_t coordinate(std::size_t q, int i) const noexcept { return (q / stride(i)) % points_; }
  /// Minimum-image separation between grid indices, in grid steps.
  std::size_t index_distance(std::size_t a, std::size_t b) const noexcept {
    const std::size_t d = a > b ? a - b : b - a;
    return std::min(d, points_ - d);
  }
  /// Signed minimum-image displacement x - center.
  double displacement(double x, double center) const noexcept;

  bool operator==(const Grid& o) const noexcept {
    return particles_ == o.particles_ && points_ == o.points_ && box_ == o.box_;
  }

private:
  int particles_;
  std::size_t points_;
  double box_;
  std::size_t size_;
  double cell_volume_;
  std::vector<std::size_t> strides_;
};

/// Wave function on the configuration grid, normalized so that
/// sum_q |psi(q)|^2 dx^N = 1.
class GridWaveFunction {
public:
  GridWaveFunction(Grid grid, Eigen::VectorXcd amplitudes);

  /// Keeps the amplitudes as given; used by propagators so norm drift stays observable.
  static GridWaveFunction assume_normalized(Grid grid, Eigen::VectorXcd amplitudes);
  /// Product state from one 1-D factor per particle.
  static GridWaveFunction product(const Grid& grid, const std::vector<Eigen::VectorXcd>& factors);

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amps_; }
  double norm() const;
  /// |psi(q)|^2 dx^N for every configuration (sums to 1).
  Eigen::VectorXd probabilities() const;
  /// Probability that particle `i` (0-based) sits in each cell.
  Eigen::VectorXd marginal(int i) const;
  /// <this|other> with the dx^N measure.
  std::complex<double> inner(const GridWaveFunction& other) const;

private:
  struct Raw {};
  GridWaveFunction(Grid grid, Eigen::VectorXcd amplitudes, Raw);

  Grid grid_;
  Eigen::VectorXcd amps_;
};

struct Potential {
  enum class Kind { none, harmonic, values };
  Kind kind = Kind::none;
  double omega = 0.0;   // 1/time (harmonic)
  double center = 0.0;  // length (harmonic)
  std::vector<double> values;  // energy, one per configuration point (values)

  bool is_zero() const noexcept { return kind == Kind::none; }
  /// V(q) on the configuration grid.
  Eigen::VectorXd on_grid(const Grid& grid, const std::vector<double>& masses) const;
};

struct Packet {
  enum class Shape { gaussian, box };
  Shape shape = Shape::gaussian;
  double center = 0.0;    // length
  double width = 1.0;     // length: position std (gaussian) or full width (box)
  double momentum = 0.0;  // 1/length
  std::complex<double> amplitude{1.0, 0.0};
};

/// One-particle factor: a coherent sum of packets.
struct ParticleState {
  std::vector<Packet> packets;
  Eigen::VectorXcd on_grid(const Grid& grid) const;
};

struct GrwConfig {
  int n_particles = 1;
  std::size_t grid_points = 128;
  double box_length = 100.0;         // length
  std::vector<double> masses{1.0};   // mass
  double lambda_rate = 0.0;          // 1/time, per particle
  double sigma = 1.0;                // length
  Potential potential;
  std::vector<ParticleState> initial_state;  // product state, one entry per particle
  std::uint64_t seed = 0;
  double t_end = 1.0;                // time
  double max_step = 1.0;             // time; macro step of the split-step scheme
  double snapshot_interval = 0.0;    // time; 0 keeps only the first and last state
  std::size_t max_grid_size = std::size_t{256} * 256 * 256;

  /// Throws ConfigError naming the offending field, or Error(memory_budget).
  void validate() const;
  Grid grid() const;
  GridWaveFunction initial_wave_function() const;
};

/// Natural-unit (hbar = 1) reference values for the collapse constants in SI.
struct SiReference {
  static constexpr double lambda_per_second = 1e-16;
  static constexpr double lambda_per_second_alt = 1e-15;
  static constexpr double sigma_metres = 1e-7;
};

struct ScheduledHit {
  double time;
  int particle;  // 1..N
};

struct FlashEvent {
  double position;  // X
  double time;      // T
  int particle;     // I, 1..N
};

/// Poisson process of rate N * lambda on [0, t_end] with uniform particle labels.
std::vector<ScheduledHit> sample_flash_schedule(int n_particles, double lambda_rate, double t_end,
                                                RandomStream& rng);

/// N * lambda * duration.
double expected_flash_count(double n_particles, double lambda_rate, double duration);

/// Exact-on-grid Schroedinger propagation. Free motion is applied in momentum
/// space per particle axis; with a potential, a symmetric split-step scheme
/// doubles its substep count until halving changes the state by < 1e-8.
class Propagator {
public:
  explicit Propagator(const GrwConfig& config);

  GridWaveFunction step(const GridWaveFunction& psi, double dt) const;
  /// Substeps used by the most recent adaptive step (1 when V = 0).
  int last_substeps() const noexcept { return last_substeps_; }

private:
  void kinetic(Eigen::VectorXcd& amps, double dt) const;
  void potential_phase(Eigen::VectorXcd& amps, double dt) const;
  Eigen::VectorXcd strang(const Eigen::VectorXcd& amps, double dt, int substeps) const;

  Grid grid_;
  std::vector<double> masses_;
  Eigen::VectorXd wavenumber_sq_;
  Eigen::VectorXd potential_;
  bool has_potential_;
  mutable int last_substeps_ = 1;
};

GridWaveFunction evolve_schrodinger(const GridWaveFunction& psi, const GrwConfig& config, double dt);

/// Collapse kernel g(d) for offsets d = 0..L-1 (minimum image), normalized on
/// the grid so that sum_d g(d) dx = 1.
Eigen::VectorXd collapse_kernel(const Grid& grid, double sigma);

/// Density rho(X) = N(X)^2 of the collapse centre on the grid; sum rho dx = 1.
Eigen::VectorXd collapse_center_density(const GridWaveFunction& psi, int particle, double sigma);

struct HitResult {
  GridWaveFunction state;
  double position;
  std::size_t center_index;
};

/// One GRW collapse of particle `particle` (1..N).
HitResult apply_grw_hit(const GridWaveFunction& psi, int particle, const GrwConfig& config, RandomStream& rng);

struct Snapshot {
  double time;
  GridWaveFunction state;
};

struct GrwRun {
  std::vector<Snapshot> trajectory;
  std::vector<FlashEvent> flashes;
};

/// Stream family used by run `run_index` under `seed`.
StreamKey grw_stream_key(std::uint64_t seed, std::uint64_t run_index);

GrwRun run_grw(const GrwConfig& config, double t_end, std::uint64_t run_index = 0);
GrwRun run_grw(const GrwConfig& config, const GridWaveFunction& initial, double t_end, std::uint64_t run_index);

struct MassDensityField {
  Eigen::VectorXd values;  // mass per length
  double spacing = 1.0;
  double time = 0.0;

  double total() const { return values.sum() * spacing; }
};

/// sum_i m_i * (marginal of |psi|^2 in coordinate i), per unit length.
MassDensityField mass_density(const GridWaveFunction& psi, const std::vector<double>& masses, double t = 0.0);

/// <psi|M(x)|psi> with the discrete mass-density operator
/// M(x) = sum_i m_i delta(Q_i - x); independent cross-check of mass_density.
MassDensityField mass_density_operator_form(const GridWaveFunction& psi, const std::vector<double>& masses,
                                            double t = 0.0);

/// Diagonal of M(x_cell) on the configuration grid.
Eigen::VectorXd mass_density_operator(const Grid& grid, const std::vector<double>& masses, std::size_t cell);

}  // namespace grwlim::grw
