#include "avt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>

#include "avt/errors.hpp"
#include "avt/text_io.hpp"

namespace avt {

void PredictionRecord::validate(double tolerance) const {
  if (probs.empty()) throw DimensionError("sample " + std::to_string(sample_id) + " has no probabilities");
  if (true_action < 0 || static_cast<std::size_t>(true_action) >= probs.size())
    throw IndexError("sample " + std::to_string(sample_id) + " has true action out of range");
  double s = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw NumericalError("sample " + std::to_string(sample_id) + " has an invalid probability");
    s += p;
  }
  if (std::abs(s - 1.0) > tolerance)
    throw NumericalError("sample " + std::to_string(sample_id) + " probabilities sum to " + format_double(s));
}

std::size_t rank_of(std::span<const double> probs, int truth) {
  const double pt = probs[static_cast<std::size_t>(truth)];
  std::size_t rank = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (probs[c] > pt || (probs[c] == pt && static_cast<int>(c) < truth)) ++rank;
  }
  return rank;
}

std::vector<int> top_k(std::span<const double> probs, std::size_t k) {
  std::vector<int> idx(probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](int a, int b) {
    const double pa = probs[static_cast<std::size_t>(a)], pb = probs[static_cast<std::size_t>(b)];
    return pa > pb || (pa == pb && a < b);
  });
  idx.resize(k);
  return idx;
}

int argmax(std::span<const double> probs) {
  if (probs.empty()) throw DimensionError("argmax of an empty vector");
  return top_k(probs, 1).front();
}

namespace {

void check_records(std::span<const PredictionRecord> records, std::size_t k) {
  if (records.empty()) throw DimensionError("no prediction records");
  const std::size_t classes = records.front().probs.size();
  if (k == 0 || k > classes) throw ConfigError("k must be in [1, " + std::to_string(classes) + "]");
  for (const auto& r : records) {
    if (r.probs.size() != classes) throw DimensionError("prediction records disagree on class count");
    if (r.true_action < 0 || static_cast<std::size_t>(r.true_action) >= classes)
      throw IndexError("sample " + std::to_string(r.sample_id) + " has true action out of range");
  }
}

bool hit(const PredictionRecord& r, std::size_t k) { return rank_of(r.probs, r.true_action) < k; }

}  // namespace

double topk_accuracy(std::span<const PredictionRecord> records, std::size_t k) {
  check_records(records, k);
  std::size_t hits = 0;
  for (const auto& r : records) hits += hit(r, k) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double class_mean_recall_at_k(std::span<const PredictionRecord> records, std::size_t k) {
  check_records(records, k);
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // hits, count
  for (const auto& r : records) {
    auto& e = per_class[r.true_action];
    e.first += hit(r, k) ? 1 : 0;
    ++e.second;
  }
  double sum = 0.0;
  for (const auto& [c, e] : per_class) sum += static_cast<double>(e.first) / static_cast<double>(e.second);
  return sum / static_cast<double>(per_class.size());
}

Marginals marginalize(std::span<const double> action_probs, const Vocabulary& vocab) {
  if (action_probs.size() != vocab.num_actions()) {
    throw VocabularyError("probability vector has " + std::to_string(action_probs.size()) +
                          " actions but the vocabulary has " + std::to_string(vocab.num_actions()));
  }
  Marginals m{std::vector<double>(vocab.num_verbs(), 0.0), std::vector<double>(vocab.num_nouns(), 0.0)};
  for (std::size_t a = 0; a < action_probs.size(); ++a) {
    const auto& e = vocab.entry(static_cast<int>(a));
    m.verbs[static_cast<std::size_t>(e.verb_id)] += action_probs[a];
    m.nouns[static_cast<std::size_t>(e.noun_id)] += action_probs[a];
  }
  return m;
}

std::vector<PredictionRecord> verb_records(std::span<const PredictionRecord> records, const Vocabulary& vocab) {
  std::vector<PredictionRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.sample_id, vocab.verb_of(r.true_action), marginalize(r.probs, vocab).verbs});
  return out;
}

std::vector<PredictionRecord> noun_records(std::span<const PredictionRecord> records, const Vocabulary& vocab) {
  std::vector<PredictionRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.sample_id, vocab.noun_of(r.true_action), marginalize(r.probs, vocab).nouns});
  return out;
}

namespace {

MetricSummary summarize(std::span<const PredictionRecord> records) {
  const std::size_t k5 = std::min<std::size_t>(5, records.front().probs.size());
  return {records.size(), topk_accuracy(records, 1), topk_accuracy(records, k5), class_mean_recall_at_k(records, k5)};
}

void class_rows(const std::string& level, std::span<const PredictionRecord> records,
                const std::function<std::string(int)>& name, std::vector<ClassRow>& out) {
  const std::size_t k5 = std::min<std::size_t>(5, records.front().probs.size());
  std::map<int, ClassRow> rows;
  for (const auto& r : records) {
    auto& row = rows[r.true_action];
    row.count++;
    const std::size_t rank = rank_of(r.probs, r.true_action);
    row.top1_hits += rank < 1 ? 1 : 0;
    row.top5_hits += rank < k5 ? 1 : 0;
  }
  for (auto& [id, row] : rows) {
    row.level = level;
    row.id = id;
    row.name = name(id);
    out.push_back(row);
  }
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

EvaluationReport evaluate(std::span<const PredictionRecord> records, const Vocabulary& vocab) {
  if (records.empty()) throw DimensionError("no prediction records");
  const auto verbs = verb_records(records, vocab);
  const auto nouns = noun_records(records, vocab);
  EvaluationReport rep;
  rep.action = summarize(records);
  rep.verb = summarize(verbs);
  rep.noun = summarize(nouns);
  class_rows("action", records, [&](int a) { return vocab.entry(a).name; }, rep.classes);
  class_rows("verb", verbs, [](int v) { return "v" + std::to_string(v); }, rep.classes);
  class_rows("noun", nouns, [](int n) { return "n" + std::to_string(n); }, rep.classes);
  return rep;
}

std::string EvaluationReport::to_csv() const {
  std::string out = "level,id,name,count,top1,top5,recall5\n";
  const auto summary = [&](const std::string& level, const MetricSummary& m) {
    out += level + ",all,overall," + std::to_string(m.count) + ',' + format_double(m.top1) + ',' +
           format_double(m.top5) + ',' + format_double(m.recall5) + '\n';
  };
  summary("action", action);
  summary("verb", verb);
  summary("noun", noun);
  for (const auto& r : classes) {
    const double n = static_cast<double>(r.count);
    const double r5 = static_cast<double>(r.top5_hits) / n;
    out += r.level + ',' + std::to_string(r.id) + ',' + r.name + ',' + std::to_string(r.count) + ',' +
           format_double(static_cast<double>(r.top1_hits) / n) + ',' + format_double(r5) + ',' + format_double(r5) + '\n';
  }
  return out;
}

std::string EvaluationReport::to_table() const {
  std::vector<std::vector<std::string>> cells{{"level", "id", "name", "count", "top1%", "top5%", "recall5%"}};
  const auto summary = [&](const std::string& level, const MetricSummary& m) {
    cells.push_back({level, "all", "overall", std::to_string(m.count), pct(m.top1), pct(m.top5), pct(m.recall5)});
  };
  summary("action", action);
  summary("verb", verb);
  summary("noun", noun);
  for (const auto& r : classes) {
    const double n = static_cast<double>(r.count);
    cells.push_back({r.level, std::to_string(r.id), r.name, std::to_string(r.count),
                     pct(static_cast<double>(r.top1_hits) / n), pct(static_cast<double>(r.top5_hits) / n),
                     pct(static_cast<double>(r.top5_hits) / n)});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      out += c < 3 ? row[c] + pad : pad + row[c];
      out += c + 1 < row.size() ? "  " : "\n";
    }
  }
  return out;
}

}  // namespace avt
