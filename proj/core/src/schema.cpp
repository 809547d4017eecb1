#include "avt/schema.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "avt/errors.hpp"

namespace avt {

namespace {

constexpr std::uint64_t kTransitionSalt = 0x7472616e73ULL;
constexpr std::uint64_t kEmissionSalt = 0x656d6974ULL;

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

void SchemaSpec::validate() const {
  if (num_classes < 2) throw ConfigError("schema needs at least 2 action classes");
  if (verbs * nouns != num_classes) {
    throw ConfigError("verbs x nouns (" + std::to_string(verbs) + "x" + std::to_string(nouns) +
                      ") must equal num_classes " + std::to_string(num_classes));
  }
  if (order < 1) throw ConfigError("schema order must be >= 1");
  if (ipow(num_classes, order) > (1u << 22)) throw ConfigError("schema history table too large");
  if (!(concentration > 0.0 && concentration <= 1.0)) throw ConfigError("concentration must be in (0, 1]");
  if (!(duration.p > 0.0 && duration.p <= 1.0)) throw ConfigError("duration p must be in (0, 1]");
  if (duration.min_steps < 1 || duration.max_steps < duration.min_steps) {
    throw ConfigError("duration bounds must satisfy 1 <= min <= max");
  }
  if (sigma < 0.0) throw ConfigError("sigma must be non-negative");
  if (!frames && feature_dim == 0) throw ConfigError("feature_dim must be positive");
  if (frames) {
    if (patch_size == 0 || image_size % patch_size != 0) throw ConfigError("image_size must be divisible by patch_size");
    const std::size_t cells = (image_size / patch_size) * (image_size / patch_size);
    if (num_classes > cells) throw ConfigError("frames mode needs num_classes <= patch grid cells");
  }
}

void SchemaSpec::write(KeyValueConfig& cfg) const {
  cfg.set("num_classes", std::to_string(num_classes));
  cfg.set("verbs", std::to_string(verbs));
  cfg.set("nouns", std::to_string(nouns));
  cfg.set("order", std::to_string(order));
  cfg.set("concentration", format_double(concentration));
  cfg.set("duration_p", format_double(duration.p));
  cfg.set("duration_min", std::to_string(duration.min_steps));
  cfg.set("duration_max", std::to_string(duration.max_steps));
  cfg.set("feature_dim", std::to_string(feature_dim));
  cfg.set("sigma", format_double(sigma));
  cfg.set("mean_scale", format_double(mean_scale));
  cfg.set("frames", frames ? "true" : "false");
  cfg.set("image_size", std::to_string(image_size));
  cfg.set("channels", std::to_string(channels));
  cfg.set("patch_size", std::to_string(patch_size));
  cfg.set("seed", std::to_string(seed));
}

SchemaSpec SchemaSpec::read(const KeyValueConfig& cfg) {
  SchemaSpec s;
  s.num_classes = parse_uint64(cfg.require("num_classes"));
  s.verbs = parse_uint64(cfg.require("verbs"));
  s.nouns = parse_uint64(cfg.require("nouns"));
  s.order = parse_uint64(cfg.require("order"));
  s.concentration = parse_double(cfg.require("concentration"));
  s.duration.p = parse_double(cfg.require("duration_p"));
  s.duration.min_steps = parse_int(cfg.require("duration_min"));
  s.duration.max_steps = parse_int(cfg.require("duration_max"));
  s.feature_dim = parse_uint64(cfg.require("feature_dim"));
  s.sigma = parse_double(cfg.require("sigma"));
  s.mean_scale = parse_double(cfg.require("mean_scale"));
  s.frames = parse_bool(cfg.require("frames"));
  s.image_size = parse_uint64(cfg.require("image_size"));
  s.channels = parse_uint64(cfg.require("channels"));
  s.patch_size = parse_uint64(cfg.require("patch_size"));
  s.seed = parse_uint64(cfg.require("seed"));
  s.validate();
  return s;
}

ActionSchema::ActionSchema(const SchemaSpec& spec) : spec_(spec) {
  spec_.validate();
  const std::size_t k = spec_.num_classes;
  num_histories_ = ipow(k, spec_.order);
  transitions_.assign(num_histories_ * k, 0.0);

  std::mt19937_64 rng(spec_.seed ^ kTransitionSalt);
  for (std::size_t h = 0; h < num_histories_; ++h) {
    double* row = transitions_.data() + h * k;
    const std::size_t last = h % k;
    if (k == 2) {
      row[1 - last] = 1.0;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, k - 2);
    std::size_t preferred = pick(rng);
    if (preferred >= last) ++preferred;
    const double rest = (1.0 - spec_.concentration) / static_cast<double>(k - 2);
    for (std::size_t c = 0; c < k; ++c) {
      if (c == last) continue;
      row[c] = c == preferred ? spec_.concentration : rest;
    }
  }

  means_.assign(k * spec_.feature_dim, 0.0);
  std::mt19937_64 emit(spec_.seed ^ kEmissionSalt);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& m : means_) m = spec_.mean_scale * normal(emit);
}

std::size_t ActionSchema::history_index(std::span<const int> history) const {
  if (history.size() != spec_.order) {
    throw DimensionError("history of length " + std::to_string(history.size()) + " for order " +
                         std::to_string(spec_.order));
  }
  std::size_t idx = 0;
  for (int a : history) {
    if (a < 0 || static_cast<std::size_t>(a) >= spec_.num_classes) throw IndexError("history action out of range");
    idx = idx * spec_.num_classes + static_cast<std::size_t>(a);
  }
  return idx;
}

std::span<const double> ActionSchema::transition_row(std::size_t history) const {
  if (history >= num_histories_) throw IndexError("history index out of range");
  return {transitions_.data() + history * spec_.num_classes, spec_.num_classes};
}

std::span<const double> ActionSchema::class_mean(int action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= spec_.num_classes) throw IndexError("action out of range");
  return {means_.data() + static_cast<std::size_t>(action) * spec_.feature_dim, spec_.feature_dim};
}

std::vector<double> ActionSchema::stationary() const {
  const std::size_t k = spec_.num_classes;
  const std::size_t n = num_histories_;
  const std::size_t shift = n / k;
  // Start from histories without immediate repeats, as the generator does.
  std::vector<double> pi(n, 0.0);
  std::size_t valid = 0;
  for (std::size_t h = 0; h < n; ++h) {
    bool ok = true;
    std::size_t x = h;
    for (std::size_t i = 1; i < spec_.order && ok; ++i) {
      ok = (x % k) != ((x / k) % k);
      x /= k;
    }
    if (ok) {
      pi[h] = 1.0;
      ++valid;
    }
  }
  for (double& p : pi) p /= static_cast<double>(valid);

  // Lazy chain (I + P) / 2 shares the stationary law and is aperiodic.
  std::vector<double> next(n);
  for (int iter = 0; iter < 100000; ++iter) {
    for (std::size_t h = 0; h < n; ++h) next[h] = 0.5 * pi[h];
    for (std::size_t h = 0; h < n; ++h) {
      if (pi[h] == 0.0) continue;
      const double* row = transitions_.data() + h * k;
      const std::size_t base = (h % shift) * k;
      for (std::size_t c = 0; c < k; ++c) next[base + c] += 0.5 * pi[h] * row[c];
    }
    double delta = 0.0;
    for (std::size_t h = 0; h < n; ++h) delta += std::abs(next[h] - pi[h]);
    pi.swap(next);
    if (delta < 1e-15) break;
  }
  return pi;
}

double ActionSchema::bayes_rate(std::size_t memory) const {
  if (memory > spec_.order) throw ConfigError("memory cannot exceed the schema order");
  const std::size_t k = spec_.num_classes;
  const std::size_t groups = ipow(k, memory);
  const auto pi = stationary();
  std::vector<double> joint(groups * k, 0.0);
  for (std::size_t h = 0; h < num_histories_; ++h) {
    const std::size_t g = h % groups;
    for (std::size_t c = 0; c < k; ++c) joint[g * k + c] += pi[h] * transitions_[h * k + c];
  }
  double acc = 0.0;
  for (std::size_t g = 0; g < groups; ++g)
    acc += *std::max_element(joint.begin() + static_cast<std::ptrdiff_t>(g * k),
                             joint.begin() + static_cast<std::ptrdiff_t>((g + 1) * k));
  return acc;
}

}  // namespace avt
