#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace avt {

struct ActionEntry {
  int action_id = 0;
  int verb_id = 0;
  int noun_id = 0;
  std::string name;
};

// Bijection between action ids and (verb, noun) pairs. Action ids are dense
// in [0, K).
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<ActionEntry> entries);

  // action = verb * nouns + noun, named "v<verb>-n<noun>".
  static Vocabulary factored(std::size_t verbs, std::size_t nouns);

  std::size_t num_actions() const { return entries_.size(); }
  std::size_t num_verbs() const { return num_verbs_; }
  std::size_t num_nouns() const { return num_nouns_; }
  const std::vector<ActionEntry>& entries() const { return entries_; }
  const ActionEntry& entry(int action) const;
  int verb_of(int action) const { return entry(action).verb_id; }
  int noun_of(int action) const { return entry(action).noun_id; }

  // Text table: header "action_id,verb_id,noun_id,name", one row per action.
  std::string to_csv() const;
  static Vocabulary from_csv(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  // FNV-1a of to_csv(); identifies a vocabulary across files.
  std::uint64_t hash() const;

 private:
  std::vector<ActionEntry> entries_;
  std::size_t num_verbs_ = 0;
  std::size_t num_nouns_ = 0;
};

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace avt
