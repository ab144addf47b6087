#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rqbench::cli {

// Subset of TOML used by run manifests: top-level key/value pairs and
// arrays of tables ([[name]]). Values are strings, integers, floats,
// booleans, or flat arrays of those. Dotted keys, inline tables and
// date-times are rejected.
struct TomlValue;
using TomlArray = std::vector<TomlValue>;

struct TomlValue {
  std::variant<std::string, std::int64_t, double, bool, TomlArray> data;
  int line = 0;

  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_number() const { return is_integer() || std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<TomlArray>(data); }
  const char* type_name() const;
};

using TomlTable = std::map<std::string, TomlValue>;

struct TomlDocument {
  TomlTable root;
  std::map<std::string, std::vector<TomlTable>> arrays;
};

/// Throws ManifestError with field "line N" on syntax errors.
TomlDocument parse_toml(std::string_view text);

/// Quoted basic string with the escapes the parser understands.
std::string toml_quote(std::string_view s);

}  // namespace rqbench::cli
