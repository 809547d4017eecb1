#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "avt/vocab.hpp"

namespace avt {

// One evaluated sample: a distribution over K actions and its ground truth.
struct PredictionRecord {
  std::uint64_t sample_id = 0;
  int true_action = 0;
  std::vector<double> probs;

  // Throws when probs do not sum to 1 within `tolerance` or the truth is out of range.
  void validate(double tolerance = 1e-6) const;
};

// Rank of `truth` under descending probability, ties broken by ascending id.
// Rank 0 is the top prediction.
std::size_t rank_of(std::span<const double> probs, int truth);

// Indices of the k largest entries, same ordering as rank_of.
std::vector<int> top_k(std::span<const double> probs, std::size_t k);

int argmax(std::span<const double> probs);

double topk_accuracy(std::span<const PredictionRecord> records, std::size_t k);

// Recall@k per ground-truth class, averaged over classes present in `records`.
double class_mean_recall_at_k(std::span<const PredictionRecord> records, std::size_t k = 5);

struct Marginals {
  std::vector<double> verbs;
  std::vector<double> nouns;
};

Marginals marginalize(std::span<const double> action_probs, const Vocabulary& vocab);

// Action records mapped to verb-level or noun-level records.
std::vector<PredictionRecord> verb_records(std::span<const PredictionRecord> records, const Vocabulary& vocab);
std::vector<PredictionRecord> noun_records(std::span<const PredictionRecord> records, const Vocabulary& vocab);

struct MetricSummary {
  std::size_t count = 0;
  double top1 = 0.0;
  double top5 = 0.0;
  double recall5 = 0.0;  // class-mean recall@5
};

struct ClassRow {
  std::string level;  // "action", "verb" or "noun"
  int id = 0;
  std::string name;
  std::size_t count = 0;
  std::size_t top1_hits = 0;
  std::size_t top5_hits = 0;
};

struct EvaluationReport {
  MetricSummary action, verb, noun;
  std::vector<ClassRow> classes;  // actions, then verbs, then nouns; only ids present

  std::string to_csv() const;
  std::string to_table() const;
};

// Top-5 degrades to top-K when fewer than five classes exist.
EvaluationReport evaluate(std::span<const PredictionRecord> records, const Vocabulary& vocab);

}  // namespace avt
