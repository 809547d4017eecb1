#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace avt {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Comma-separated rows; fields are whitespace-trimmed, blank lines skipped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

int parse_int(const std::string& text);
long long parse_int64(const std::string& text);
std::uint64_t parse_uint64(const std::string& text);
double parse_double(const std::string& text);
bool parse_bool(const std::string& text);

// Shortest decimal text that round-trips the value exactly.
std::string format_double(double value);

// Flat key-value text:
//   # comment
//   key = value
// Keys are [A-Za-z0-9_.-]+, values run to the end of the line (trimmed).
// A key may appear only once per file.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  const std::string& require(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  // Keys in insertion order.
  const std::vector<std::string>& keys() const { return order_; }

  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace avt
