#include <cmath>
#include <ostream>

#include "common.hpp"
#include "grwlim/experiments.hpp"

namespace grwlim::experiments {

grw::GrwConfig two_packet_config(double weight, std::uint64_t seed) {
  if (!(weight >= 0 && weight <= 1)) throw ConfigError("weight", "must lie in [0, 1]");
  grw::GrwConfig c;
  c.n_particles = 1;
  c.grid_points = 128;
  c.box_length = 128.0;
  c.masses = {1.0};
  c.sigma = 2.0;
  c.t_end = 10.0;
  c.lambda_rate = 0.1;
  c.seed = seed;
  c.initial_state = {grw::ParticleState{{
      grw::Packet{grw::Packet::Shape::gaussian, 32.0, 2.0, 0.0, std::sqrt(weight)},
      grw::Packet{grw::Packet::Shape::gaussian, 96.0, 2.0, 0.0, std::sqrt(1 - weight)},
  }}};
  c.validate();
  return c;
}

GrwBatch run_grw_batch(const grw::GrwConfig& config, std::size_t runs, unsigned workers) {
  config.validate();
  if (runs < 1) throw ConfigError("runs", "must be >= 1");
  GrwBatch b;
  b.runs.resize(runs);
  b.expected_flashes_per_run = grw::expected_flash_count(config.n_particles, config.lambda_rate, config.t_end);
  const auto initial = config.initial_wave_function();
  parallel_for(runs, workers, [&](std::size_t k) { b.runs[k] = grw::run_grw(config, initial, config.t_end, k); });
  return b;
}

void write_flashes_jsonl(std::ostream& out, const grw::GrwConfig& config, const GrwBatch& batch) {
  const nlohmann::json header = {{"header",
                                  {{"tool", kToolName},
                                   {"version", GRWLIM_VERSION},
                                   {"seed", config.seed},
                                   {"config_hash", config_hash(grw::to_json(config))},
                                   {"runs", batch.runs.size()}}}};
  out << header.dump() << '\n';
  for (std::size_t k = 0; k < batch.runs.size(); ++k) {
    for (const auto& f : batch.runs[k].flashes) {
      out << "{\"run\":" << k << ",\"T\":" << format_number(f.time) << ",\"X\":" << format_number(f.position)
          << ",\"I\":" << f.particle << "}\n";
    }
  }
}

void write_density_csv(std::ostream& out, const grw::GrwConfig& config, const GrwBatch& batch) {
  out << header_comment(config.seed, config_hash(grw::to_json(config))) << '\n';
  out << "run,t,x,m\n";
  for (std::size_t k = 0; k < batch.runs.size(); ++k) {
    for (const auto& snap : batch.runs[k].trajectory) {
      const auto m = grw::mass_density(snap.state, config.masses, snap.time);
      const auto& grid = snap.state.grid();
      for (Eigen::Index j = 0; j < m.values.size(); ++j) {
        out << k << ',' << format_number(snap.time) << ',' << format_number(grid.position(static_cast<std::size_t>(j)))
            << ',' << format_number(m.values(j)) << '\n';
      }
    }
  }
}

GrwStatistics grw_statistics(std::uint64_t seed, std::size_t runs, std::size_t hits, unsigned workers,
                             double mean_count) {
  const double weight = 0.7;
  auto config = two_packet_config(weight, seed);
  config.lambda_rate = mean_count / config.t_end;
  GrwStatistics s{};
  s.expected_count = mean_count;
  s.branch_probability = weight;

  const auto batch = run_grw_batch(config, runs, workers);
  std::vector<std::size_t> counts;
  double total = 0;
  for (const auto& r : batch.runs) {
    counts.push_back(r.flashes.size());
    total += static_cast<double>(r.flashes.size());
    for (const auto& snap : r.trajectory) s.max_norm_error = std::max(s.max_norm_error, std::abs(snap.state.norm() - 1));
  }
  s.mean_count = total / static_cast<double>(runs);
  s.flash_counts = stats::poisson_gof(counts, mean_count);

  // labels: three particles, schedule only
  const int n = 3;
  std::vector<double> label_counts(n, 0.0);
  for (std::size_t k = 0; k < runs; ++k) {
    RandomStream rng(detail::key(seed, "grw-labels"), k);
    for (const auto& h : grw::sample_flash_schedule(n, 0.5, 1.0, rng)) label_counts[static_cast<std::size_t>(h.particle - 1)] += 1;
  }
  s.labels = stats::categorical_gof(label_counts, std::vector<double>(n, 1.0 / n));

  const auto psi = config.initial_wave_function();
  const auto& grid = psi.grid();
  const std::size_t half = grid.points() / 2;
  std::vector<int> here(hits, 0);
  std::vector<double> minority(hits, 0.0), norm_error(hits, 0.0);
  parallel_for(hits, workers, [&](std::size_t k) {
    RandomStream rng(detail::key(seed, "grw-hits"), k);
    const auto hit = grw::apply_grw_hit(psi, 1, config, rng);
    const Eigen::VectorXd m = hit.state.marginal(0);
    const double left = m.head(static_cast<Eigen::Index>(half)).sum();
    const double right = m.tail(static_cast<Eigen::Index>(grid.points() - half)).sum();
    here[k] = left > right ? 1 : 0;
    minority[k] = std::min(left, right);
    norm_error[k] = std::abs(hit.state.norm() - 1);
  });
  double n_here = 0;
  for (std::size_t k = 0; k < hits; ++k) {
    n_here += here[k];
    s.max_minority_weight = std::max(s.max_minority_weight, minority[k]);
    s.max_norm_error = std::max(s.max_norm_error, norm_error[k]);
  }
  const double h = static_cast<double>(hits);
  s.branch_frequency = n_here / h;
  s.branch_std_error = std::sqrt(weight * (1 - weight) / h);
  return s;
}

}  // namespace grwlim::experiments
