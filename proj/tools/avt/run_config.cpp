#include "run_config.hpp"

#include <cstdlib>

#include "avt/errors.hpp"

namespace avt::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const VocabularyError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const IndexError*>(&e) || dynamic_cast<const AlignmentError*>(&e) ||
      dynamic_cast<const UnsupportedModeError*>(&e))
    return kValidation;
  return kRuntime;
}

RunConfig::RunConfig(KeyValueConfig defaults) : values_(std::move(defaults)) {}

void RunConfig::apply(const std::string& key, const std::string& value, const std::string& origin) {
  if (!values_.has(key)) throw ConfigError("unknown config key '" + key + "' (" + origin + ")");
  values_.set(key, value);
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  const auto file = KeyValueConfig::load(path);
  for (const auto& k : file.keys()) apply(k, *file.get(k), path.string());
}

void RunConfig::apply_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  apply(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), "--set");
}

long long RunConfig::integer(const std::string& key) const {
  try {
    return parse_int64(str(key));
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::uint64_t RunConfig::uinteger(const std::string& key) const {
  try {
    return parse_uint64(str(key));
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

double RunConfig::number(const std::string& key) const {
  try {
    return parse_double(str(key));
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

bool RunConfig::flag(const std::string& key) const {
  try {
    return parse_bool(str(key));
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::filesystem::path resolve_output(const std::string& path, const std::string& fallback) {
  const char* env = std::getenv("AVT_OUTPUT_ROOT");
  const std::filesystem::path root = env && *env ? std::filesystem::path(env) : std::filesystem::path(".");
  if (path.empty()) return root / fallback;
  std::filesystem::path p(path);
  if (p.is_relative() && env && *env) return root / p;
  return p;
}

void prepare_output(const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError("output path " + dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw ConfigError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  fs::create_directories(dir);
}

void write_snapshot(const std::filesystem::path& dir, const std::string& command, const KeyValueConfig& values) {
  std::string text = "# avt " + command + "\n" + values.to_text();
  write_text_file(dir / (command + "_config.txt"), text);
}

}  // namespace avt::cli
