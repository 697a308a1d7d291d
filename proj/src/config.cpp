#include "naon/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "naon/error.hpp"

namespace naon {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool valid_key(const std::string& key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.';
  });
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
    std::string key = trim(stripped.substr(0, eq));
    if (!valid_key(key)) throw ParseError(line, "invalid key '" + key + "'");
    kv.set(std::move(key), trim(stripped.substr(eq + 1)), line);
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void KeyValues::add_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  std::string key = trim(assignment.substr(0, eq));
  if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
  set(std::move(key), trim(assignment.substr(eq + 1)));
}

void KeyValues::set(std::string key, std::string value, std::size_t line) {
  entries_.push_back(Entry{std::move(key), std::move(value), line});
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

}  // namespace

std::int64_t parse_int(const std::string& key, const std::string& value) {
  return parse_number<std::int64_t>(key, value);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-') {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
  return parse_number<std::uint64_t>(key, value);
}

double parse_double(const std::string& key, const std::string& value) {
  return parse_number<double>(key, value);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + value + "'");
}

std::pair<std::int64_t, std::int64_t> parse_int_range(const std::string& key,
                                                      const std::string& value) {
  std::string v = value;
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream in(v);
  std::string lo, hi, extra;
  if (!(in >> lo >> hi) || (in >> extra)) {
    throw ConfigError("key '" + key + "': expected 'min,max', got '" + value + "'");
  }
  return {parse_int(key, lo), parse_int(key, hi)};
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace naon
