#include "avt/predictions.hpp"

#include <map>
#include <set>

#include "avt/errors.hpp"
#include "avt/text_io.hpp"

namespace avt {

std::string predictions_to_csv(const std::vector<PredictionRecord>& records) {
  const std::size_t k = records.empty() ? 0 : records.front().probs.size();
  std::string out = "sample_id,true_action";
  for (std::size_t c = 0; c < k; ++c) out += ",p_" + std::to_string(c);
  out += '\n';
  for (const auto& r : records) {
    if (r.probs.size() != k) throw DimensionError("prediction records disagree on class count");
    out += std::to_string(r.sample_id) + ',' + std::to_string(r.true_action);
    for (double p : r.probs) out += ',' + format_double(p);
    out += '\n';
  }
  return out;
}

std::vector<PredictionRecord> predictions_from_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw FormatError("prediction file is empty", 0);
  const auto& header = rows.front();
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "true_action")
    throw FormatError("prediction file header must start with sample_id,true_action,p_0", 0);
  for (std::size_t c = 2; c < header.size(); ++c)
    if (header[c] != "p_" + std::to_string(c - 2)) throw FormatError("unexpected column '" + header[c] + "'", 0);
  const std::size_t k = header.size() - 2;

  std::vector<PredictionRecord> out;
  std::set<std::uint64_t> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != k + 2)
      throw FormatError("prediction row " + std::to_string(i) + " has " + std::to_string(row.size()) + " fields", 0);
    PredictionRecord r;
    r.sample_id = parse_uint64(row[0]);
    r.true_action = parse_int(row[1]);
    r.probs.reserve(k);
    for (std::size_t c = 0; c < k; ++c) r.probs.push_back(parse_double(row[c + 2]));
    if (!seen.insert(r.sample_id).second) throw FormatError("duplicate sample id " + row[0], 0);
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records) {
  write_text_file(path, predictions_to_csv(records));
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  return predictions_from_csv(read_text_file(path));
}

std::vector<PredictionRecord> late_fuse(const std::vector<std::vector<PredictionRecord>>& sets,
                                        const std::vector<double>& weights) {
  if (sets.empty()) throw ConfigError("late fusion needs at least one prediction set");
  if (weights.size() != sets.size()) throw ConfigError("one fusion weight per prediction set is required");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("fusion weights must be non-negative");
    wsum += w;
  }
  if (wsum <= 0.0) throw ConfigError("fusion weights must not all be zero");

  const auto& first = sets.front();
  const std::size_t k = first.empty() ? 0 : first.front().probs.size();
  std::vector<std::map<std::uint64_t, const PredictionRecord*>> index(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (const auto& r : sets[s]) {
      if (r.probs.size() != k) throw AlignmentError("prediction set " + std::to_string(s) + " has a different class count");
      index[s][r.sample_id] = &r;
    }

  std::set<std::uint64_t> offenders;
  for (std::size_t s = 1; s < sets.size(); ++s) {
    for (const auto& [id, r] : index[s])
      if (!index[0].count(id)) offenders.insert(id);
    for (const auto& [id, r] : index[0]) {
      auto it = index[s].find(id);
      if (it == index[s].end() || it->second->true_action != r->true_action) offenders.insert(id);
    }
  }
  if (!offenders.empty()) {
    std::string list;
    std::size_t shown = 0;
    for (auto id : offenders) {
      if (shown++ == 20) {
        list += ", ...";
        break;
      }
      list += (list.empty() ? "" : ", ") + std::to_string(id);
    }
    throw AlignmentError(std::to_string(offenders.size()) + " sample ids are missing or disagree: " + list);
  }

  std::vector<PredictionRecord> out;
  out.reserve(first.size());
  for (const auto& r0 : first) {
    PredictionRecord f{r0.sample_id, r0.true_action, std::vector<double>(k, 0.0)};
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const auto& probs = index[s].at(r0.sample_id)->probs;
      for (std::size_t c = 0; c < k; ++c) f.probs[c] += weights[s] * probs[c];
    }
    double total = 0.0;
    for (double p : f.probs) total += p;
    for (double& p : f.probs) p /= total;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace avt
