#pragma once

#include <string>

#include <json.hpp>

#include "grwlim/grw.hpp"

namespace grwlim::grw {

/// Parses and validates a simulator config. Unknown keys and type errors are
/// reported as ConfigError with the dotted path of the offending field.
GrwConfig config_from_json(const nlohmann::json& j);
GrwConfig load_config(const std::string& path);

/// Canonical form (sorted keys, every field present); input of the config hash.
nlohmann::json to_json(const GrwConfig& c);

/// 64-bit FNV-1a of a byte string, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace grwlim::grw
