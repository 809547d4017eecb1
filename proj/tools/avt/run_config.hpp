#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avt/text_io.hpp"

namespace avt::cli {

enum ExitCode { kOk = 0, kValidation = 2, kRuntime = 3, kNumerical = 4 };

// Maps an exception thrown by a command to its exit code class.
int exit_code_for(const std::exception& e);

// Layered flat key/value configuration: built-in defaults, then an optional
// config file, then command-line flags. Later layers win. Keys outside the
// defaults are rejected so typos surface as validation errors.
class RunConfig {
 public:
  explicit RunConfig(KeyValueConfig defaults);

  void apply_file(const std::filesystem::path& path);
  void apply(const std::string& key, const std::string& value, const std::string& origin);
  // "key=value" from a --set flag.
  void apply_assignment(const std::string& assignment);

  const KeyValueConfig& values() const { return values_; }
  const std::string& str(const std::string& key) const { return values_.require(key); }
  long long integer(const std::string& key) const;
  std::uint64_t uinteger(const std::string& key) const;
  double number(const std::string& key) const;
  bool flag(const std::string& key) const;

 private:
  KeyValueConfig values_;
};

// Relative paths resolve against $AVT_OUTPUT_ROOT when it is set. An empty
// path becomes <root or .>/<fallback>.
std::filesystem::path resolve_output(const std::string& path, const std::string& fallback);

// Creates `dir`. A non-empty existing directory is refused unless `force`,
// in which case its contents are removed first.
void prepare_output(const std::filesystem::path& dir, bool force);

// Writes the effective configuration beside a command's outputs.
void write_snapshot(const std::filesystem::path& dir, const std::string& command, const KeyValueConfig& values);

}  // namespace avt::cli
