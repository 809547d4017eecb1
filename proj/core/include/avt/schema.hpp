#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avt/text_io.hpp"
#include "avt/vocab.hpp"

namespace avt {

// Segment durations: geometric(p) on {1, 2, ...}, clipped to [min_steps, max_steps].
struct DurationSpec {
  double p = 0.5;
  int min_steps = 1;
  int max_steps = 4;
};

// Parameters of a synthetic action-schema world: an order-m Markov chain
// over K actions (no immediate repeats) with class-conditioned emissions.
struct SchemaSpec {
  std::size_t num_classes = 8;
  std::size_t verbs = 4;
  std::size_t nouns = 2;
  std::size_t order = 2;
  // Probability of each history's preferred successor; the rest is spread
  // uniformly over the other admissible actions. 1.0 gives a deterministic chain.
  double concentration = 0.85;
  DurationSpec duration;
  std::size_t feature_dim = 16;
  double sigma = 0.3;
  double mean_scale = 1.0;
  // Frames mode renders image_size x image_size x channels frames instead of
  // feature vectors; class a lights patch cell (a mod grid^2).
  bool frames = false;
  std::size_t image_size = 32;
  std::size_t channels = 1;
  std::size_t patch_size = 8;
  std::uint64_t seed = 0;

  std::size_t emission_dim() const { return frames ? image_size * image_size * channels : feature_dim; }
  void validate() const;

  void write(KeyValueConfig& cfg) const;
  // Reads every schema field; a missing field is a ConfigError naming it.
  static SchemaSpec read(const KeyValueConfig& cfg);
};

// Materialized schema: transition table and emission means derived from
// the spec's seed.
class ActionSchema {
 public:
  explicit ActionSchema(const SchemaSpec& spec);

  const SchemaSpec& spec() const { return spec_; }
  Vocabulary vocabulary() const { return Vocabulary::factored(spec_.verbs, spec_.nouns); }

  std::size_t num_histories() const { return num_histories_; }
  // Row index of a history of exactly `order` actions, oldest first.
  std::size_t history_index(std::span<const int> history) const;
  std::span<const double> transition_row(std::size_t history) const;
  std::span<const double> class_mean(int action) const;

  // Stationary distribution over order-length histories.
  std::vector<double> stationary() const;
  // Accuracy of the best predictor of the next action that sees only the
  // last `memory` actions (memory <= order), under the stationary chain.
  double bayes_rate(std::size_t memory) const;

 private:
  SchemaSpec spec_;
  std::size_t num_histories_ = 0;
  std::vector<double> transitions_;  // [num_histories, K]
  std::vector<double> means_;        // [K, feature_dim]
};

}  // namespace avt
