#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avt/metrics.hpp"

namespace avt {

// CSV with header `sample_id,true_action,p_0,...,p_{K-1}`; probabilities are
// written in shortest round-trip form so files are byte-stable.
std::string predictions_to_csv(const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> predictions_from_csv(const std::string& text);
void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

// Weighted arithmetic mean of per-sample distributions, renormalized.
// Sets must cover the same sample ids (any order) with the same K and truth;
// output follows the id order of the first set.
std::vector<PredictionRecord> late_fuse(const std::vector<std::vector<PredictionRecord>>& sets,
                                        const std::vector<double>& weights);

}  // namespace avt
