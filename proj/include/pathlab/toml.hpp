#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pathlab::toml {

// Minimal TOML subset used by the experiment configs: bare keys, one level of
// [tables] (flattened to "table.key"), strings, integers, floats, booleans
// and flat arrays of those. Parse errors carry the line number.
struct Value {
  std::variant<std::string, std::int64_t, double, bool, std::vector<Value>> v;

  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_float() const { return std::holds_alternative<double>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_array() const { return std::holds_alternative<std::vector<Value>>(v); }

  const std::string& as_string() const { return std::get<std::string>(v); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v); }
  double as_float() const {
    return is_int() ? static_cast<double>(as_int()) : std::get<double>(v);
  }
  bool as_bool() const { return std::get<bool>(v); }
  const std::vector<Value>& as_array() const { return std::get<std::vector<Value>>(v); }
};

using Table = std::map<std::string, Value>;

Table parse(const std::string& text);
Table parse_file(const std::string& path);

}  // namespace pathlab::toml
