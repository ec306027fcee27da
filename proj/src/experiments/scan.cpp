#include <ostream>

#include "common.hpp"
#include "grwlim/experiments.hpp"

namespace grwlim::experiments {

namespace {

const char* family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::random: return "random";
    case FamilyKind::detector: return "detector";
    case FamilyKind::mixed: return "mixed";
  }
  return "?";
}

}  // namespace

nlohmann::json to_json(const ScanOptions& opt) {
  return {{"command", "scan"},          {"n", opt.n},           {"p", opt.p},
          {"family_size", opt.family_size}, {"samples", opt.samples}, {"family", family_name(opt.family)},
          {"rank", opt.rank},           {"seed", opt.seed},     {"sigmas", opt.sigmas}};
}

std::vector<Effect<double>> scan_family(const ScanOptions& opt, std::vector<std::string>* labels) {
  if (opt.n < 1) throw ConfigError("n", "must be >= 1");
  if (opt.family_size < 1) throw ConfigError("family_size", "must be >= 1");
  if (opt.rank > opt.n) throw ConfigError("rank", "must not exceed n");
  RandomStream rng(detail::key(opt.seed, "scan-family"), 0);
  std::vector<Effect<double>> family;
  for (std::size_t i = 0; i < opt.family_size; ++i) {
    const bool detector =
        opt.family == FamilyKind::detector || (opt.family == FamilyKind::mixed && i % 2 == 1);
    if (detector) {
      family.push_back(detector_effect(haar_state<double>(opt.n, rng)));
    } else {
      family.push_back(random_effect<double>(opt.n, rng, opt.rank));
    }
    if (labels) labels->push_back(detector ? "detector" : "random");
  }
  return family;
}

ScanResult run_scan(const ScanOptions& opt) {
  if (!(opt.p >= 0 && opt.p <= 1)) throw ConfigError("p", "must lie in [0, 1]");
  if (opt.samples < 1000) throw ConfigError("samples", "must be >= 1000");
  ScanResult r;
  const auto family = scan_family(opt, &r.labels);
  r.scan = scan_success_sets(opt.n, opt.p, family, opt.samples, detail::key(opt.seed, "scan"), opt.workers, opt.sigmas);
  return r;
}

void write_scan_csv(std::ostream& out, const ScanOptions& opt, const ScanResult& result) {
  out << header_comment(opt.seed, config_hash(to_json(opt))) << '\n';
  out << "id,kind,estimate,stderr,exceeds_half,conjecture_violation\n";
  for (const auto& row : result.scan.rows) {
    out << row.id << ',' << result.labels[row.id] << ',' << format_number(row.estimate) << ','
        << format_number(row.std_error) << ',' << (row.exceeds_half ? 1 : 0) << ','
        << (row.conjecture_violation ? 1 : 0) << '\n';
  }
}

}  // namespace grwlim::experiments
