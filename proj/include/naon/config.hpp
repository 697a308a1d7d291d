#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace naon {

// Ordered `key = value` entries from a plain-text config.
//
// Syntax: one entry per line, `#` starts a comment, blank lines ignored.
// Keys are [A-Za-z0-9_.]+; values are trimmed. Later entries override earlier
// ones, so command-line overrides are appended after the file entries.
class KeyValues {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;  // 0 for entries not read from a file
  };

  static KeyValues parse(const std::string& text);
  static KeyValues load(const std::filesystem::path& path);

  // "key=value" as typed on a command line.
  void add_override(const std::string& assignment);
  void set(std::string key, std::string value, std::size_t line = 0);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::vector<Entry> entries_;
};

// Typed value parsing; throw ConfigError naming the key on failure.
std::int64_t parse_int(const std::string& key, const std::string& value);
std::uint64_t parse_uint(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
// "lo,hi" or "lo hi".
std::pair<std::int64_t, std::int64_t> parse_int_range(const std::string& key,
                                                      const std::string& value);

// Shortest decimal text that round-trips the double.
std::string format_double(double value);

}  // namespace naon
