#include <gtest/gtest.h>

#include <random>

#include "avt/errors.hpp"
#include "avt/metrics.hpp"
#include "avt/predictions.hpp"

using namespace avt;

namespace {

PredictionRecord rec(std::uint64_t id, int truth, std::vector<double> p) { return {id, truth, std::move(p)}; }

std::vector<PredictionRecord> random_records(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(1.0, 1.0);
  std::uniform_int_distribution<int> truth(0, static_cast<int>(k) - 1);
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(k);
    double s = 0;
    for (auto& v : p) s += (v = g(rng));
    for (auto& v : p) v /= s;
    out.push_back({i, truth(rng), p});
  }
  return out;
}

}  // namespace

TEST(Ranking, TiesGoToLowerId) {
  const std::vector<double> p{0.3, 0.3, 0.4};
  EXPECT_EQ(rank_of(p, 2), 0u);
  EXPECT_EQ(rank_of(p, 0), 1u);
  EXPECT_EQ(rank_of(p, 1), 2u);
  EXPECT_EQ(top_k(p, 2), (std::vector<int>{2, 0}));
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5}), 0);
}

TEST(TopK, HandExamples) {
  std::vector<PredictionRecord> r{rec(0, 0, {0.7, 0.2, 0.1}), rec(1, 2, {0.5, 0.3, 0.2})};
  EXPECT_DOUBLE_EQ(topk_accuracy(r, 1), 0.5);
  EXPECT_DOUBLE_EQ(topk_accuracy(r, 2), 0.5);
  EXPECT_DOUBLE_EQ(topk_accuracy(r, 3), 1.0);
  EXPECT_THROW(topk_accuracy(r, 0), ConfigError);
  EXPECT_THROW(topk_accuracy(r, 4), ConfigError);
  EXPECT_THROW(topk_accuracy({}, 1), DimensionError);
}

TEST(ClassMeanRecall, WeighsClassesEqually) {
  std::vector<PredictionRecord> r;
  for (std::uint64_t i = 0; i < 9; ++i) r.push_back(rec(i, 0, {0.9, 0.1}));
  r.push_back(rec(9, 1, {0.9, 0.1}));
  EXPECT_DOUBLE_EQ(topk_accuracy(r, 1), 0.9);
  EXPECT_DOUBLE_EQ(class_mean_recall_at_k(r, 1), 0.5);
}

TEST(Record, Validation) {
  EXPECT_NO_THROW(rec(0, 1, {0.25, 0.75}).validate());
  EXPECT_THROW(rec(0, 1, {0.25, 0.7}).validate(), std::exception);
  EXPECT_THROW(rec(0, 2, {0.25, 0.75}).validate(), std::exception);
}

TEST(Marginalize, SumsAndMismatch) {
  auto vocab = Vocabulary::factored(2, 3);
  const std::vector<double> p{0.1, 0.2, 0.1, 0.3, 0.2, 0.1};
  auto m = marginalize(p, vocab);
  ASSERT_EQ(m.verbs.size(), 2u);
  EXPECT_NEAR(m.verbs[0], 0.4, 1e-15);
  EXPECT_NEAR(m.nouns[1], 0.4, 1e-15);
  EXPECT_THROW(marginalize(std::vector<double>{0.5, 0.5}, vocab), VocabularyError);
}

TEST(Evaluate, PerClassRowsAggregate) {
  auto vocab = Vocabulary::factored(2, 4);
  auto records = random_records(300, 8, 3);
  auto report = evaluate(records, vocab);
  EXPECT_EQ(report.action.count, 300u);
  std::size_t n = 0, hits1 = 0, hits5 = 0;
  double recall = 0;
  std::size_t classes = 0;
  for (const auto& row : report.classes) {
    if (row.level != "action") continue;
    n += row.count;
    hits1 += row.top1_hits;
    hits5 += row.top5_hits;
    recall += static_cast<double>(row.top5_hits) / static_cast<double>(row.count);
    ++classes;
  }
  EXPECT_EQ(n, 300u);
  EXPECT_DOUBLE_EQ(report.action.top1, static_cast<double>(hits1) / 300.0);
  EXPECT_DOUBLE_EQ(report.action.top5, static_cast<double>(hits5) / 300.0);
  EXPECT_NEAR(report.action.recall5, recall / static_cast<double>(classes), 1e-12);
  EXPECT_DOUBLE_EQ(report.verb.top5, 1.0);
  EXPECT_FALSE(report.to_csv().empty());
  EXPECT_NE(report.to_table().find("action"), std::string::npos);
}

TEST(Evaluate, PerfectPredictionsScoreOne) {
  auto vocab = Vocabulary::factored(2, 3);
  std::vector<PredictionRecord> r;
  for (int a = 0; a < 6; ++a) {
    std::vector<double> p(6, 0.0);
    p[static_cast<std::size_t>(a)] = 1.0;
    r.push_back(rec(static_cast<std::uint64_t>(a), a, p));
  }
  auto report = evaluate(r, vocab);
  for (const auto* m : {&report.action, &report.verb, &report.noun}) {
    EXPECT_EQ(m->top1, 1.0);
    EXPECT_EQ(m->recall5, 1.0);
  }
}

TEST(PredictionCsv, RoundTripIsExact) {
  auto records = random_records(20, 5, 4);
  const auto text = predictions_to_csv(records);
  EXPECT_EQ(text.substr(0, text.find('\n')), "sample_id,true_action,p_0,p_1,p_2,p_3,p_4");
  auto back = predictions_from_csv(text);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].probs, records[i].probs);
    EXPECT_EQ(back[i].sample_id, records[i].sample_id);
  }
  EXPECT_EQ(predictions_to_csv(back), text);
}

TEST(PredictionCsv, Rejects) {
  EXPECT_THROW(predictions_from_csv("id,true_action,p_0\n0,0,1\n"), FormatError);
  EXPECT_THROW(predictions_from_csv("sample_id,true_action,p_0,p_1\n0,0,0.5,0.5\n0,1,0.5,0.5\n"), std::exception);
  EXPECT_THROW(predictions_from_csv("sample_id,true_action,p_0,p_1\n0,0,0.5,0.6\n"), std::exception);
}

TEST(LateFuse, WeightedMeanReordered) {
  std::vector<PredictionRecord> a{rec(1, 0, {0.8, 0.2}), rec(2, 1, {0.4, 0.6})};
  std::vector<PredictionRecord> b{rec(2, 1, {0.0, 1.0}), rec(1, 0, {0.2, 0.8})};
  auto f = late_fuse({a, b}, {1.0, 1.0});
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].sample_id, 1u);
  EXPECT_NEAR(f[0].probs[0], 0.5, 1e-15);
  EXPECT_NEAR(f[1].probs[1], 0.8, 1e-15);
  auto w = late_fuse({a, b}, {3.0, 1.0});
  EXPECT_NEAR(w[0].probs[0], 0.65, 1e-15);
}

TEST(LateFuse, SelfFusionUnchangedMetrics) {
  auto r = random_records(100, 6, 5);
  auto f = late_fuse({r, r}, {1.0, 1.0});
  EXPECT_EQ(topk_accuracy(f, 1), topk_accuracy(r, 1));
  EXPECT_EQ(class_mean_recall_at_k(f, 5), class_mean_recall_at_k(r, 5));
}

TEST(LateFuse, Errors) {
  std::vector<PredictionRecord> a{rec(1, 0, {0.8, 0.2})};
  std::vector<PredictionRecord> b{rec(3, 0, {0.8, 0.2})};
  std::vector<PredictionRecord> c{rec(1, 1, {0.8, 0.2})};
  try {
    late_fuse({a, b}, {1, 1});
    FAIL();
  } catch (const AlignmentError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
  EXPECT_THROW(late_fuse({a, c}, {1, 1}), AlignmentError);
  EXPECT_THROW(late_fuse({a, a}, {1, -1}), ConfigError);
  EXPECT_THROW(late_fuse({a, a}, {0, 0}), ConfigError);
  EXPECT_THROW(late_fuse({a, a}, {1}), ConfigError);
}
