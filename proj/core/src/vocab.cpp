#include "avt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "avt/errors.hpp"
#include "avt/text_io.hpp"

namespace avt {

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Vocabulary::Vocabulary(std::vector<ActionEntry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const ActionEntry& a, const ActionEntry& b) { return a.action_id < b.action_id; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.action_id != static_cast<int>(i)) {
      throw VocabularyError("action ids must be dense from 0; missing or duplicate id near " +
                            std::to_string(e.action_id));
    }
    if (e.verb_id < 0 || e.noun_id < 0) throw VocabularyError("negative verb/noun id for action " + std::to_string(i));
    num_verbs_ = std::max(num_verbs_, static_cast<std::size_t>(e.verb_id) + 1);
    num_nouns_ = std::max(num_nouns_, static_cast<std::size_t>(e.noun_id) + 1);
  }
}

Vocabulary Vocabulary::factored(std::size_t verbs, std::size_t nouns) {
  std::vector<ActionEntry> entries;
  for (std::size_t v = 0; v < verbs; ++v)
    for (std::size_t n = 0; n < nouns; ++n)
      entries.push_back({static_cast<int>(v * nouns + n), static_cast<int>(v), static_cast<int>(n),
                         "v" + std::to_string(v) + "-n" + std::to_string(n)});
  return Vocabulary(std::move(entries));
}

const ActionEntry& Vocabulary::entry(int action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= entries_.size()) {
    throw VocabularyError("action " + std::to_string(action) + " has no verb/noun mapping");
  }
  return entries_[static_cast<std::size_t>(action)];
}

std::string Vocabulary::to_csv() const {
  std::ostringstream os;
  os << "action_id,verb_id,noun_id,name\n";
  for (const auto& e : entries_) os << e.action_id << ',' << e.verb_id << ',' << e.noun_id << ',' << e.name << '\n';
  return os.str();
}

Vocabulary Vocabulary::from_csv(const std::string& text) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw VocabularyError("vocabulary table is empty");
  std::vector<ActionEntry> entries;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4) throw VocabularyError("vocabulary row " + std::to_string(r) + " needs 4 columns");
    entries.push_back({parse_int(row[0]), parse_int(row[1]), parse_int(row[2]), row[3]});
  }
  return Vocabulary(std::move(entries));
}

void Vocabulary::save(const std::filesystem::path& path) const { write_text_file(path, to_csv()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return from_csv(read_text_file(path)); }

std::uint64_t Vocabulary::hash() const { return fnv1a(to_csv()); }

}  // namespace avt
