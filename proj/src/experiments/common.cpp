#include <charconv>
#include <fstream>

#include "grwlim/experiments.hpp"

namespace grwlim::experiments {

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string header_comment(std::uint64_t seed, const std::string& hash) {
  return std::string("# tool=") + kToolName + " version=" + GRWLIM_VERSION + " seed=" + std::to_string(seed) +
         " config_hash=" + hash;
}

std::string config_hash(const nlohmann::json& params) { return grw::fnv1a_hex(params.dump()); }

std::vector<double> default_p_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 10; ++k) g.push_back(k / 10.0);
  return g;
}

DensityMatrix<double> density_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("re")) throw ConfigError(path + ".re", "expected {\"re\": [[...]], \"im\": [[...]]}");
  const auto& re = j["re"];
  if (!re.is_array() || re.empty()) throw ConfigError(path + ".re", "expected a non-empty square array");
  const auto n = static_cast<Eigen::Index>(re.size());
  const bool has_im = j.contains("im");
  if (has_im && (!j["im"].is_array() || j["im"].size() != re.size())) throw ConfigError(path + ".im", "shape differs from re");
  CMatrix<double> m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto rp = path + ".re[" + std::to_string(r) + "]";
    const auto& row = re[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != re.size()) throw ConfigError(rp, "row length differs from the row count");
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ConfigError(rp + "[" + std::to_string(c) + "]", "expected a number");
      double im = 0;
      if (has_im) {
        const auto& irow = j["im"][static_cast<std::size_t>(r)];
        const auto ip = path + ".im[" + std::to_string(r) + "]";
        if (!irow.is_array() || irow.size() != re.size()) throw ConfigError(ip, "row length differs from the row count");
        if (!irow[static_cast<std::size_t>(c)].is_number()) throw ConfigError(ip + "[" + std::to_string(c) + "]", "expected a number");
        im = irow[static_cast<std::size_t>(c)].get<double>();
      }
      m(r, c) = {v.get<double>(), im};
    }
  }
  try {
    return DensityMatrix<double>(HermitianOperator<double>(std::move(m)));
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

DensityMatrix<double> load_density(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file, "cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file, std::string("parse error: ") + e.what());
  }
  return density_from_json(j, file);
}

}  // namespace grwlim::experiments
