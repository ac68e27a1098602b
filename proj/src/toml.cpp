#include "pathlab/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "pathlab/errors.hpp"

namespace pathlab::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config parse error at line " + std::to_string(line) + ": " + what);
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// removes a trailing comment that is not inside a string
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

Value parse_scalar(const std::string& tok, int line) {
  if (tok.empty()) fail(line, "empty value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"') fail(line, "unterminated string");
    return Value{tok.substr(1, tok.size() - 2)};
  }
  if (tok == "true") return Value{true};
  if (tok == "false") return Value{false};
  const bool floaty = tok.find_first_of(".eEnN") != std::string::npos;
  try {
    std::size_t used = 0;
    if (!floaty) {
      std::int64_t i = std::stoll(tok, &used);
      if (used == tok.size()) return Value{i};
    }
    double d = std::stod(tok, &used);
    if (used != tok.size()) fail(line, "malformed number '" + tok + "'");
    return Value{d};
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(line, "malformed value '" + tok + "'");
  }
}

Value parse_value(const std::string& raw, int line) {
  std::string s = strip(raw);
  if (s.empty()) fail(line, "missing value");
  if (s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    std::vector<Value> items;
    std::string inner = s.substr(1, s.size() - 2);
    std::string cur;
    bool in_str = false;
    for (char ch : inner) {
      if (ch == '"') in_str = !in_str;
      if (ch == ',' && !in_str) {
        std::string tok = strip(cur);
        if (!tok.empty()) items.push_back(parse_scalar(tok, line));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    std::string tok = strip(cur);
    if (!tok.empty()) items.push_back(parse_scalar(tok, line));
    return Value{items};
  }
  return parse_scalar(s, line);
}

}  // namespace

Table parse(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string raw;
  std::string prefix;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = strip(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated table header");
      prefix = strip(s.substr(1, s.size() - 2));
      if (prefix.empty()) fail(line, "empty table name");
      continue;
    }
    std::size_t eq = std::string::npos;
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') in_str = !in_str;
      if (s[i] == '=' && !in_str) { eq = i; break; }
    }
    if (eq == std::string::npos) fail(line, "expected key = value");
    std::string key = strip(s.substr(0, eq));
    if (key.empty()) fail(line, "empty key");
    for (char c : key) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
        fail(line, "invalid key '" + key + "'");
    }
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (table.count(full)) fail(line, "duplicate key '" + full + "'");
    table.emplace(full, parse_value(s.substr(eq + 1), line));
  }
  return table;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace pathlab::toml
