#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "grwlim/config.hpp"
#include "grwlim/discrimination.hpp"
#include "grwlim/mass.hpp"
#include "grwlim/stats.hpp"

namespace grwlim::experiments {

inline constexpr const char* kToolName = "grwlim";
inline constexpr double kAnalyticTolerance = 1e-9;
inline constexpr double kDefaultSigmas = 4.0;
inline constexpr double kChiSquareSignificance = 1e-3;

/// Round-trip decimal form used in every output file.
std::string format_number(double x);

/// "# tool=grwlim version=<v> seed=<s> config_hash=<h>"
std::string header_comment(std::uint64_t seed, const std::string& config_hash);

/// Hash of the canonical JSON form of a command's parameters.
std::string config_hash(const nlohmann::json& params);

std::vector<double> default_p_grid();

// ---------------------------------------------------------------- figure1

struct Figure1Options {
  std::vector<double> p_grid = default_p_grid();
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

struct Figure1Row {
  double p;
  double blind;
  double e1_analytic;
  double e1_mc;
  double e1_std_error;
  double optimal_analytic;
  double optimal_mc;
  double optimal_std_error;
};

std::vector<Figure1Row> figure1(const Figure1Options& opt);
nlohmann::json to_json(const Figure1Options& opt);
void write_figure1_csv(std::ostream& out, const Figure1Options& opt, const std::vector<Figure1Row>& rows);

// ---------------------------------------------------------------- verify

enum class Comparison { equal, at_most, at_least };

struct VerificationRecord {
  std::string id;
  std::string label;  // case within the id
  double analytic;
  double measured;
  double tolerance;
  Comparison comparison = Comparison::equal;

  bool pass() const;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t trials = 100000;
  unsigned workers = 0;
  double sigmas = kDefaultSigmas;
  std::optional<double> tolerance;  // replaces every record's tolerance
};

std::vector<VerificationRecord> run_verification(const VerifyOptions& opt);
nlohmann::json to_json(const VerifyOptions& opt);
void write_verification_csv(std::ostream& out, const VerifyOptions& opt, const std::vector<VerificationRecord>& records);
bool all_pass(const std::vector<VerificationRecord>& records);

// ---------------------------------------------------------------- scan

enum class FamilyKind { random, detector, mixed };

struct ScanOptions {
  Eigen::Index n = 3;
  double p = 0.4;
  std::size_t family_size = 100;
  std::size_t samples = 10000;
  FamilyKind family = FamilyKind::mixed;
  Eigen::Index rank = -1;  // random effects: rank, -1 for full rank
  std::uint64_t seed = 1;
  unsigned workers = 0;
  double sigmas = kDefaultSigmas;
};

struct ScanResult {
  std::vector<std::string> labels;  // "random" or "detector" per effect
  SuccessScan<double> scan;
};

std::vector<Effect<double>> scan_family(const ScanOptions& opt, std::vector<std::string>* labels = nullptr);
ScanResult run_scan(const ScanOptions& opt);
nlohmann::json to_json(const ScanOptions& opt);
void write_scan_csv(std::ostream& out, const ScanOptions& opt, const ScanResult& result);

// ---------------------------------------------------------------- mass density

struct MassDemo {
  std::string name;
  grw::GridWaveFunction psi;
  std::vector<double> masses;
  std::vector<double> scales;
  /// Cell holding the whole "present" branch at each scale, for the analytic column.
  std::optional<double> branch_ratio;
  std::optional<std::size_t> branch_first;
  std::optional<std::size_t> branch_width;
};

/// Built-in states: two-branch, eigenstate, uniform-solid, spread-particle.
MassDemo make_mass_demo(const std::string& name, double branch_p = 0.5);
std::vector<std::string> mass_demo_names();

struct MassOptions {
  std::string demo = "two-branch";
  double branch_p = 0.5;
  std::vector<double> scales;  // empty: the demo's own grid
  double threshold = 0.10;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const MassOptions& opt);
struct MassResult {
  MassDemo demo;
  mass::MeasurabilityReport report;
};

MassResult run_massdensity(const MassOptions& opt);
void write_massdensity_csv(std::ostream& out, const MassOptions& opt, const MassResult& result);

// ---------------------------------------------------------------- helstrom

/// {"re": [[...]], "im": [[...]]}; "im" may be omitted.
DensityMatrix<double> density_from_json(const nlohmann::json& j, const std::string& path);
DensityMatrix<double> load_density(const std::string& file);

// ---------------------------------------------------------------- GRW

struct GrwBatch {
  std::vector<grw::GrwRun> runs;
  double expected_flashes_per_run;
};

/// `runs` independent realizations, run k uses stream family (seed, k).
GrwBatch run_grw_batch(const grw::GrwConfig& config, std::size_t runs, unsigned workers);

void write_flashes_jsonl(std::ostream& out, const grw::GrwConfig& config, const GrwBatch& batch);
void write_density_csv(std::ostream& out, const grw::GrwConfig& config, const GrwBatch& batch);

struct GrwStatistics {
  stats::ChiSquareResult flash_counts;
  stats::ChiSquareResult labels;
  double mean_count;
  double expected_count;
  double max_norm_error;        // over every post-hit state
  double branch_frequency;      // two-packet hits landing on the "here" packet
  double branch_probability;    // |c_here|^2
  double branch_std_error;
  double max_minority_weight;   // L^2 weight left in the other packet after a hit
};

/// Statistics of the two-packet demo: Poisson flash counts over `runs` runs
/// with E[count] = `mean_count`, and `hits` direct collapses.
GrwStatistics grw_statistics(std::uint64_t seed, std::size_t runs, std::size_t hits, unsigned workers,
                             double mean_count = 1.0);

/// Two packets of width `width` at box/4 and 3 box/4 with |c_here|^2 = weight.
grw::GrwConfig two_packet_config(double weight = 0.7, std::uint64_t seed = 0);

}  // namespace grwlim::experiments
