#include "grwlim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace grwlim::grw {

namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
std::string index(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(join(path, k), "unknown field");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

std::uint64_t unsigned_int(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError(path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

Packet parse_packet(const json& j, const std::string& path) {
  only_keys(j, path, {"shape", "center", "width", "momentum", "amplitude"});
  Packet p;
  if (j.contains("shape")) {
    const auto s = text(j["shape"], join(path, "shape"));
    if (s == "gaussian") p.shape = Packet::Shape::gaussian;
    else if (s == "box") p.shape = Packet::Shape::box;
    else throw ConfigError(join(path, "shape"), "expected \"gaussian\" or \"box\"");
  }
  if (!j.contains("center")) throw ConfigError(join(path, "center"), "required");
  p.center = number(j["center"], join(path, "center"));
  if (!j.contains("width")) throw ConfigError(join(path, "width"), "required");
  p.width = number(j["width"], join(path, "width"));
  if (j.contains("momentum")) p.momentum = number(j["momentum"], join(path, "momentum"));
  if (j.contains("amplitude")) {
    const auto& a = j["amplitude"];
    const auto ap = join(path, "amplitude");
    if (a.is_number()) {
      p.amplitude = {a.get<double>(), 0.0};
    } else if (a.is_array() && a.size() == 2) {
      p.amplitude = {number(a[0], index(ap, 0)), number(a[1], index(ap, 1))};
    } else {
      throw ConfigError(ap, "expected a number or [re, im]");
    }
  }
  return p;
}

Potential parse_potential(const json& j, const std::string& path) {
  only_keys(j, path, {"kind", "omega", "center", "values"});
  Potential v;
  const auto kind = j.contains("kind") ? text(j["kind"], join(path, "kind")) : std::string("none");
  if (kind == "none") {
    v.kind = Potential::Kind::none;
  } else if (kind == "harmonic") {
    v.kind = Potential::Kind::harmonic;
    if (!j.contains("omega")) throw ConfigError(join(path, "omega"), "required for a harmonic potential");
    v.omega = number(j["omega"], join(path, "omega"));
    if (j.contains("center")) v.center = number(j["center"], join(path, "center"));
  } else if (kind == "values") {
    v.kind = Potential::Kind::values;
    const auto vp = join(path, "values");
    if (!j.contains("values") || !j["values"].is_array()) throw ConfigError(vp, "expected an array of energies");
    for (std::size_t i = 0; i < j["values"].size(); ++i) v.values.push_back(number(j["values"][i], index(vp, i)));
  } else {
    throw ConfigError(join(path, "kind"), "expected \"none\", \"harmonic\" or \"values\"");
  }
  return v;
}

}  // namespace

GrwConfig config_from_json(const json& j) {
  only_keys(j, "", {"n_particles", "grid_points", "box_length", "masses", "lambda_rate", "sigma", "potential",
                    "initial_state", "seed", "t_end", "max_step", "snapshot_interval", "max_grid_size", "units"});
  GrwConfig c;
  if (j.contains("units") && text(j["units"], "units") != "natural") {
    throw ConfigError("units", "only \"natural\" (hbar = 1) is supported");
  }
  if (j.contains("n_particles")) {
    const auto n = unsigned_int(j["n_particles"], "n_particles");
    if (n < 1 || n > 3) throw ConfigError("n_particles", "must be 1, 2 or 3");
    c.n_particles = static_cast<int>(n);
  }
  if (j.contains("grid_points")) c.grid_points = unsigned_int(j["grid_points"], "grid_points");
  if (j.contains("box_length")) c.box_length = number(j["box_length"], "box_length");
  if (j.contains("masses")) {
    if (!j["masses"].is_array()) throw ConfigError("masses", "expected an array");
    c.masses.clear();
    for (std::size_t i = 0; i < j["masses"].size(); ++i) c.masses.push_back(number(j["masses"][i], index("masses", i)));
  } else {
    c.masses.assign(static_cast<std::size_t>(c.n_particles), 1.0);
  }
  if (j.contains("lambda_rate")) c.lambda_rate = number(j["lambda_rate"], "lambda_rate");
  if (j.contains("sigma")) c.sigma = number(j["sigma"], "sigma");
  if (j.contains("potential")) c.potential = parse_potential(j["potential"], "potential");
  if (j.contains("initial_state")) {
    const auto& s = j["initial_state"];
    if (!s.is_array()) throw ConfigError("initial_state", "expected an array with one entry per particle");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto path = index("initial_state", i);
      only_keys(s[i], path, {"packets"});
      const auto pp = join(path, "packets");
      if (!s[i].contains("packets") || !s[i]["packets"].is_array()) throw ConfigError(pp, "expected an array");
      ParticleState ps;
      for (std::size_t k = 0; k < s[i]["packets"].size(); ++k) ps.packets.push_back(parse_packet(s[i]["packets"][k], index(pp, k)));
      c.initial_state.push_back(std::move(ps));
    }
  }
  if (j.contains("seed")) c.seed = unsigned_int(j["seed"], "seed");
  if (j.contains("t_end")) c.t_end = number(j["t_end"], "t_end");
  if (j.contains("max_step")) c.max_step = number(j["max_step"], "max_step");
  if (j.contains("snapshot_interval")) c.snapshot_interval = number(j["snapshot_interval"], "snapshot_interval");
  if (j.contains("max_grid_size")) c.max_grid_size = unsigned_int(j["max_grid_size"], "max_grid_size");
  c.validate();
  return c;
}

GrwConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("parse error: ") + e.what());
  }
  return config_from_json(j);
}

json to_json(const GrwConfig& c) {
  json j;
  j["units"] = "natural";
  j["n_particles"] = c.n_particles;
  j["grid_points"] = c.grid_points;
  j["box_length"] = c.box_length;
  j["masses"] = c.masses;
  j["lambda_rate"] = c.lambda_rate;
  j["sigma"] = c.sigma;
  json pot;
  switch (c.potential.kind) {
    case Potential::Kind::none: pot["kind"] = "none"; break;
    case Potential::Kind::harmonic:
      pot["kind"] = "harmonic";
      pot["omega"] = c.potential.omega;
      pot["center"] = c.potential.center;
      break;
    case Potential::Kind::values:
      pot["kind"] = "values";
      pot["values"] = c.potential.values;
      break;
  }
  j["potential"] = pot;
  json init = json::array();
  for (const auto& ps : c.initial_state) {
    json packets = json::array();
    for (const auto& p : ps.packets) {
      packets.push_back({{"shape", p.shape == Packet::Shape::gaussian ? "gaussian" : "box"},
                         {"center", p.center},
                         {"width", p.width},
                         {"momentum", p.momentum},
                         {"amplitude", {p.amplitude.real(), p.amplitude.imag()}}});
    }
    init.push_back({{"packets", packets}});
  }
  j["initial_state"] = init;
  j["seed"] = c.seed;
  j["t_end"] = c.t_end;
  j["max_step"] = c.max_step;
  j["snapshot_interval"] = c.snapshot_interval;
  j["max_grid_size"] = c.max_grid_size;
  return j;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace grwlim::grw
