#include "grwlim/grw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace grwlim::grw {

namespace {

constexpr double kSplitStepTolerance = 1e-8;
constexpr int kMaxSubsteps = 1 << 16;

double weighted_norm(const Eigen::VectorXcd& a, double volume) { return std::sqrt(a.squaredNorm() * volume); }

}  // namespace

Grid::Grid(int n_particles, std::size_t points, double box_length)
    : particles_(n_particles), points_(points), box_(box_length) {
  if (n_particles < 1) throw Error(Errc::invalid_dimension, "grid needs at least one particle");
  if (points < 2) throw Error(Errc::invalid_dimension, "grid needs at least two points");
  if (!(box_length > 0) || !std::isfinite(box_length)) throw Error(Errc::invalid_argument, "box length must be positive");
  size_ = 1;
  for (int i = 0; i < n_particles; ++i) {
    strides_.push_back(size_);
    if (size_ > std::numeric_limits<std::size_t>::max() / points) throw Error(Errc::memory_budget, "grid size overflows");
    size_ *= points;
  }
  cell_volume_ = std::pow(spacing(), n_particles);
}

double Grid::displacement(double x, double center) const noexcept {
  double d = std::fmod(x - center, box_);
  if (d >= 0.5 * box_) d -= box_;
  if (d < -0.5 * box_) d += box_;
  return d;
}

GridWaveFunction::GridWaveFunction(Grid grid, Eigen::VectorXcd amplitudes, Raw)
    : grid_(std::move(grid)), amps_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amps_.size()) != grid_.size()) {
    throw Error(Errc::dimension_mismatch, "amplitude count does not match the configuration grid");
  }
}

GridWaveFunction::GridWaveFunction(Grid grid, Eigen::VectorXcd amplitudes)
    : GridWaveFunction(std::move(grid), std::move(amplitudes), Raw{}) {
  const double n = norm();
  if (!(n > 0) || !std::isfinite(n)) throw Error(Errc::invalid_argument, "wave function has zero or non-finite norm");
  amps_ /= n;
}

GridWaveFunction GridWaveFunction::assume_normalized(Grid grid, Eigen::VectorXcd amplitudes) {
  return GridWaveFunction(std::move(grid), std::move(amplitudes), Raw{});
}

GridWaveFunction GridWaveFunction::product(const Grid& grid, const std::vector<Eigen::VectorXcd>& factors) {
  if (static_cast<int>(factors.size()) != grid.particles()) {
    throw Error(Errc::dimension_mismatch, "need one factor per particle");
  }
  for (const auto& f : factors) {
    if (static_cast<std::size_t>(f.size()) != grid.points()) throw Error(Errc::dimension_mismatch, "factor length != L");
  }
  Eigen::VectorXcd amps(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t q = 0; q < grid.size(); ++q) {
    std::complex<double> a = 1.0;
    for (int i = 0; i < grid.particles(); ++i) a *= factors[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(grid.coordinate(q, i)));
    amps(static_cast<Eigen::Index>(q)) = a;
  }
  return GridWaveFunction(grid, std::move(amps));
}

double GridWaveFunction::norm() const { return weighted_norm(amps_, grid_.cell_volume()); }

Eigen::VectorXd GridWaveFunction::probabilities() const { return amps_.cwiseAbs2() * grid_.cell_volume(); }

Eigen::VectorXd GridWaveFunction::marginal(int i) const {
  if (i < 0 || i >= grid_.particles()) throw Error(Errc::invalid_argument, "particle index out of range");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid_.points()));
  const double vol = grid_.cell_volume();
  for (std::size_t q = 0; q < grid_.size(); ++q) {
    m(static_cast<Eigen::Index>(grid_.coordinate(q, i))) += std::norm(amps_(static_cast<Eigen::Index>(q))) * vol;
  }
  return m;
}

std::complex<double> GridWaveFunction::inner(const GridWaveFunction& other) const {
  if (!(grid_ == other.grid_)) throw Error(Errc::dimension_mismatch, "wave functions live on different grids");
  return amps_.dot(other.amps_) * grid_.cell_volume();
}

Eigen::VectorXd Potential::on_grid(const Grid& grid, const std::vector<double>& masses) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  switch (kind) {
    case Kind::none:
      break;
    case Kind::harmonic:
      for (std::size_t q = 0; q < grid.size(); ++q) {
        double e = 0;
        for (int i = 0; i < grid.particles(); ++i) {
          const double d = grid.position(grid.coordinate(q, i)) - center;
          e += 0.5 * masses[static_cast<std::size_t>(i)] * omega * omega * d * d;
        }
        v(static_cast<Eigen::Index>(q)) = e;
      }
      break;
    case Kind::values:
      if (values.size() != grid.size()) throw Error(Errc::dimension_mismatch, "potential values must cover L^N points");
      for (std::size_t q = 0; q < grid.size(); ++q) v(static_cast<Eigen::Index>(q)) = values[q];
      break;
  }
  return v;
}

Eigen::VectorXcd ParticleState::on_grid(const Grid& grid) const {
  const auto L = static_cast<Eigen::Index>(grid.points());
  Eigen::VectorXcd f = Eigen::VectorXcd::Zero(L);
  for (const auto& pk : packets) {
    Eigen::VectorXcd g(L);
    for (Eigen::Index j = 0; j < L; ++j) {
      const double d = grid.displacement(grid.position(static_cast<std::size_t>(j)), pk.center);
      double envelope = 0;
      if (pk.shape == Packet::Shape::gaussian) {
        envelope = std::exp(-d * d / (4.0 * pk.width * pk.width));
      } else {
        envelope = (d >= -0.5 * pk.width && d < 0.5 * pk.width) ? 1.0 : 0.0;
      }
      g(j) = envelope * std::polar(1.0, pk.momentum * d);
    }
    const double n = weighted_norm(g, grid.spacing());
    if (!(n > 0)) throw Error(Errc::invalid_argument, "packet has no support on the grid");
    f += pk.amplitude * g / n;
  }
  return f;
}

void GrwConfig::validate() const {
  if (n_particles < 1 || n_particles > 3) throw ConfigError("n_particles", "must be 1, 2 or 3");
  if (grid_points < 2) throw ConfigError("grid_points", "must be >= 2");
  if (!(box_length > 0) || !std::isfinite(box_length)) throw ConfigError("box_length", "must be positive");
  if (masses.size() != static_cast<std::size_t>(n_particles)) throw ConfigError("masses", "need one mass per particle");
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0) || !std::isfinite(masses[i])) throw ConfigError("masses[" + std::to_string(i) + "]", "must be positive");
  }
  if (!(lambda_rate >= 0) || !std::isfinite(lambda_rate)) throw ConfigError("lambda_rate", "must be >= 0");
  if (!(sigma > 0) || !std::isfinite(sigma)) throw ConfigError("sigma", "must be positive");
  if (!(t_end > 0)) throw ConfigError("t_end", "must be positive");
  if (!(max_step > 0)) throw ConfigError("max_step", "must be positive");
  if (!(snapshot_interval >= 0)) throw ConfigError("snapshot_interval", "must be >= 0");
  if (potential.kind == Potential::Kind::harmonic && !(potential.omega >= 0)) {
    throw ConfigError("potential.omega", "must be >= 0");
  }
  if (!initial_state.empty() && initial_state.size() != static_cast<std::size_t>(n_particles)) {
    throw ConfigError("initial_state", "need one entry per particle");
  }
  for (std::size_t i = 0; i < initial_state.size(); ++i) {
    const auto& ps = initial_state[i].packets;
    if (ps.empty()) throw ConfigError("initial_state[" + std::to_string(i) + "].packets", "must be non-empty");
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (!(ps[k].width > 0)) {
        throw ConfigError("initial_state[" + std::to_string(i) + "].packets[" + std::to_string(k) + "].width",
                          "must be positive");
      }
    }
  }
  double total = 1;
  for (int i = 0; i < n_particles; ++i) total *= static_cast<double>(grid_points);
  if (total > static_cast<double>(max_grid_size)) {
    throw Error(Errc::memory_budget, "grid_points^n_particles = " + std::to_string(static_cast<long long>(total)) +
                                         " exceeds max_grid_size " + std::to_string(max_grid_size));
  }
  if (potential.kind == Potential::Kind::values && potential.values.size() != static_cast<std::size_t>(total)) {
    throw ConfigError("potential.values", "must list grid_points^n_particles energies");
  }
}

Grid GrwConfig::grid() const { return Grid(n_particles, grid_points, box_length); }

GridWaveFunction GrwConfig::initial_wave_function() const {
  const Grid g = grid();
  std::vector<Eigen::VectorXcd> factors;
  for (int i = 0; i < n_particles; ++i) {
    if (initial_state.empty()) {
      ParticleState ps{{Packet{Packet::Shape::gaussian, 0.5 * box_length, box_length / 16.0, 0.0, {1.0, 0.0}}}};
      factors.push_back(ps.on_grid(g));
    } else {
      factors.push_back(initial_state[static_cast<std::size_t>(i)].on_grid(g));
    }
  }
  return GridWaveFunction::product(g, factors);
}

std::vector<ScheduledHit> sample_flash_schedule(int n_particles, double lambda_rate, double t_end, RandomStream& rng) {
  if (n_particles < 1) throw Error(Errc::invalid_argument, "need at least one particle");
  if (!(lambda_rate >= 0)) throw Error(Errc::invalid_argument, "collapse rate must be >= 0");
  if (!(t_end > 0)) throw Error(Errc::invalid_argument, "t_end must be positive");
  std::vector<ScheduledHit> out;
  const double rate = n_particles * lambda_rate;
  if (rate == 0) return out;
  double t = 0;
  for (;;) {
    t += -std::log1p(-uniform01(rng)) / rate;
    if (t > t_end) break;
    const int label = 1 + static_cast<int>(uniform01(rng) * n_particles);
    out.push_back({t, std::min(label, n_particles)});
  }
  return out;
}

double expected_flash_count(double n_particles, double lambda_rate, double duration) {
  return n_particles * lambda_rate * duration;
}

Propagator::Propagator(const GrwConfig& config)
    : grid_(config.grid()), masses_(config.masses), has_potential_(!config.potential.is_zero()) {
  if (grid_.size() > config.max_grid_size) throw Error(Errc::memory_budget, "grid exceeds max_grid_size");
  const std::size_t L = grid_.points();
  wavenumber_sq_.resize(static_cast<Eigen::Index>(L));
  const double dk = 2.0 * std::numbers::pi / grid_.box_length();
  for (std::size_t j = 0; j < L; ++j) {
    const double k = dk * (j <= L / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(L));
    wavenumber_sq_(static_cast<Eigen::Index>(j)) = k * k;
  }
  if (has_potential_) potential_ = config.potential.on_grid(grid_, masses_);
}

void Propagator::kinetic(Eigen::VectorXcd& amps, double dt) const {
  const std::size_t L = grid_.points();
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> line(L), spec(L), phase(L);
  for (int i = 0; i < grid_.particles(); ++i) {
    const double m = masses_[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < L; ++j) {
      phase[j] = std::polar(1.0, -wavenumber_sq_(static_cast<Eigen::Index>(j)) * dt / (2.0 * m));
    }
    const std::size_t s = grid_.stride(i);
    const std::size_t block = s * L;
    for (std::size_t outer = 0; outer < grid_.size(); outer += block) {
      for (std::size_t r = 0; r < s; ++r) {
        const std::size_t start = outer + r;
        for (std::size_t j = 0; j < L; ++j) line[j] = amps(static_cast<Eigen::Index>(start + j * s));
        fft.fwd(spec, line);
        for (std::size_t j = 0; j < L; ++j) spec[j] *= phase[j];
        fft.inv(line, spec);
        for (std::size_t j = 0; j < L; ++j) amps(static_cast<Eigen::Index>(start + j * s)) = line[j];
      }
    }
  }
}

void Propagator::potential_phase(Eigen::VectorXcd& amps, double dt) const {
  for (Eigen::Index q = 0; q < amps.size(); ++q) amps(q) *= std::polar(1.0, -potential_(q) * dt);
}

Eigen::VectorXcd Propagator::strang(const Eigen::VectorXcd& amps, double dt, int substeps) const {
  Eigen::VectorXcd a = amps;
  const double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    potential_phase(a, 0.5 * h);
    kinetic(a, h);
    potential_phase(a, 0.5 * h);
  }
  return a;
}

GridWaveFunction Propagator::step(const GridWaveFunction& psi, double dt) const {
  if (!(dt >= 0)) throw Error(Errc::invalid_argument, "dt must be >= 0");
  if (!(psi.grid() == grid_)) throw Error(Errc::dimension_mismatch, "state grid does not match the propagator");
  last_substeps_ = 1;
  if (dt == 0) return psi;
  if (!has_potential_) {
    Eigen::VectorXcd a = psi.amplitudes();
    kinetic(a, dt);
    return GridWaveFunction::assume_normalized(grid_, std::move(a));
  }
  int n = 1;
  Eigen::VectorXcd coarse = strang(psi.amplitudes(), dt, n);
  for (;;) {
    if (n >= kMaxSubsteps) throw Error(Errc::numerical, "split-step scheme did not converge");
    Eigen::VectorXcd fine = strang(psi.amplitudes(), dt, 2 * n);
    const double change = weighted_norm(fine - coarse, grid_.cell_volume());
    n *= 2;
    coarse = std::move(fine);
    if (change < kSplitStepTolerance) break;
  }
  last_substeps_ = n;
  return GridWaveFunction::assume_normalized(grid_, std::move(coarse));
}

GridWaveFunction evolve_schrodinger(const GridWaveFunction& psi, const GrwConfig& config, double dt) {
  return Propagator(config).step(psi, dt);
}

Eigen::VectorXd collapse_kernel(const Grid& grid, double sigma) {
  if (!(sigma > 0)) throw Error(Errc::invalid_argument, "collapse width must be positive");
  const std::size_t L = grid.points();
  Eigen::VectorXd g(static_cast<Eigen::Index>(L));
  for (std::size_t d = 0; d < L; ++d) {
    const double r = static_cast<double>(grid.index_distance(0, d)) * grid.spacing();
    g(static_cast<Eigen::Index>(d)) = std::exp(-r * r / (2.0 * sigma * sigma));
  }
  g /= g.sum() * grid.spacing();
  return g;
}

namespace {

Eigen::VectorXd center_density(const Eigen::VectorXd& marginal, const Eigen::VectorXd& kernel, const Grid& grid) {
  const std::size_t L = grid.points();
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L));
  for (std::size_t c = 0; c < L; ++c) {
    double s = 0;
    for (std::size_t j = 0; j < L; ++j) {
      s += kernel(static_cast<Eigen::Index>((j + L - c) % L)) * marginal(static_cast<Eigen::Index>(j));
    }
    rho(static_cast<Eigen::Index>(c)) = s;
  }
  return rho;
}

void check_label(int particle, const Grid& grid) {
  if (particle < 1 || particle > grid.particles()) throw Error(Errc::invalid_argument, "particle label must be in 1..N");
}

}  // namespace

Eigen::VectorXd collapse_center_density(const GridWaveFunction& psi, int particle, double sigma) {
  check_label(particle, psi.grid());
  return center_density(psi.marginal(particle - 1), collapse_kernel(psi.grid(), sigma), psi.grid());
}

HitResult apply_grw_hit(const GridWaveFunction& psi, int particle, const GrwConfig& config, RandomStream& rng) {
  const Grid& grid = psi.grid();
  check_label(particle, grid);
  const Eigen::VectorXd kernel = collapse_kernel(grid, config.sigma);
  const Eigen::VectorXd rho = center_density(psi.marginal(particle - 1), kernel, grid);
  const double dx = grid.spacing();
  const double total = rho.sum() * dx;
  if (!(total > 0) || !std::isfinite(total)) throw Error(Errc::numerical, "collapse-centre density vanishes");

  const double u = uniform01(rng) * total;
  const std::size_t L = grid.points();
  std::size_t c = L - 1;
  double acc = 0;
  for (std::size_t j = 0; j < L; ++j) {
    if (rho(static_cast<Eigen::Index>(j)) <= 0) continue;
    c = j;
    acc += rho(static_cast<Eigen::Index>(j)) * dx;
    if (u < acc) break;
  }

  const int axis = particle - 1;
  Eigen::VectorXcd a = psi.amplitudes();
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const std::size_t j = grid.coordinate(q, axis);
    a(static_cast<Eigen::Index>(q)) *= std::sqrt(kernel(static_cast<Eigen::Index>((j + L - c) % L)));
  }
  return {GridWaveFunction(grid, std::move(a)), grid.position(c), c};
}

StreamKey grw_stream_key(std::uint64_t seed, std::uint64_t run_index) {
  return StreamKey{seed, 0x67727721ULL}.child(run_index);
}

GrwRun run_grw(const GrwConfig& config, double t_end, std::uint64_t run_index) {
  config.validate();
  return run_grw(config, config.initial_wave_function(), t_end, run_index);
}

GrwRun run_grw(const GrwConfig& config, const GridWaveFunction& initial, double t_end, std::uint64_t run_index) {
  if (!(t_end > 0)) throw Error(Errc::invalid_argument, "t_end must be positive");
  const StreamKey key = grw_stream_key(config.seed, run_index);
  RandomStream schedule_rng(key, 0);
  RandomStream hit_rng(key, 1);
  const auto schedule = sample_flash_schedule(config.n_particles, config.lambda_rate, t_end, schedule_rng);

  std::vector<double> snapshot_times{0.0};
  if (config.snapshot_interval > 0) {
    for (std::size_t k = 1;; ++k) {
      const double t = static_cast<double>(k) * config.snapshot_interval;
      if (t >= t_end) break;
      snapshot_times.push_back(t);
    }
  }
  snapshot_times.push_back(t_end);

  const Propagator prop(config);
  const double chunk = config.potential.is_zero() ? std::numeric_limits<double>::infinity() : config.max_step;
  auto advance = [&](GridWaveFunction psi, double dt) {
    while (dt > 0) {
      const double h = std::min(dt, chunk);
      psi = prop.step(psi, h);
      dt -= h;
    }
    return psi;
  };

  GrwRun run;
  GridWaveFunction psi = initial;
  double now = 0;
  std::size_t next_hit = 0;
  for (const double ts : snapshot_times) {
    while (next_hit < schedule.size() && schedule[next_hit].time <= ts) {
      const auto& h = schedule[next_hit++];
      psi = advance(std::move(psi), h.time - now);
      now = h.time;
      auto hit = apply_grw_hit(psi, h.particle, config, hit_rng);
      psi = std::move(hit.state);
      run.flashes.push_back({hit.position, h.time, h.particle});
    }
    psi = advance(std::move(psi), ts - now);
    now = ts;
    run.trajectory.push_back({ts, psi});
  }
  return run;
}

MassDensityField mass_density(const GridWaveFunction& psi, const std::vector<double>& masses, double t) {
  const Grid& grid = psi.grid();
  if (masses.size() != static_cast<std::size_t>(grid.particles())) {
    throw Error(Errc::dimension_mismatch, "need one mass per particle");
  }
  MassDensityField f{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.points())), grid.spacing(), t};
  for (int i = 0; i < grid.particles(); ++i) f.values += masses[static_cast<std::size_t>(i)] * psi.marginal(i);
  f.values /= grid.spacing();
  return f;
}

Eigen::VectorXd mass_density_operator(const Grid& grid, const std::vector<double>& masses, std::size_t cell) {
  if (masses.size() != static_cast<std::size_t>(grid.particles())) {
    throw Error(Errc::dimension_mismatch, "need one mass per particle");
  }
  if (cell >= grid.points()) throw Error(Errc::invalid_argument, "cell index out of range");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double m = 0;
    for (int i = 0; i < grid.particles(); ++i) {
      if (grid.coordinate(q, i) == cell) m += masses[static_cast<std::size_t>(i)];
    }
    d(static_cast<Eigen::Index>(q)) = m / grid.spacing();
  }
  return d;
}

MassDensityField mass_density_operator_form(const GridWaveFunction& psi, const std::vector<double>& masses, double t) {
  const Grid& grid = psi.grid();
  MassDensityField f{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.points())), grid.spacing(), t};
  for (std::size_t c = 0; c < grid.points(); ++c) {
    const Eigen::VectorXd op = mass_density_operator(grid, masses, c);
    // <psi|M|psi> with the dx^N inner product
    f.values(static_cast<Eigen::Index>(c)) =
        (psi.amplitudes().conjugate().cwiseProduct(op.cast<std::complex<double>>().cwiseProduct(psi.amplitudes())))
            .sum()
            .real() *
        grid.cell_volume();
  }
  return f;
}

}  // namespace grwlim::grw
