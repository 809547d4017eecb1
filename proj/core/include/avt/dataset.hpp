#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avt/feature_io.hpp"
#include "avt/sampling.hpp"
#include "avt/schema.hpp"
#include "avt/text_io.hpp"
#include "avt/vocab.hpp"

namespace avt {

// One rendered video: per-step labels and emissions for times 1..length.
struct Video {
  std::size_t id = 0;
  std::vector<int> labels;     // [length]
  std::vector<float> values;   // [length * dim]
  std::size_t dim = 0;

  std::size_t length() const { return labels.size(); }
};

struct SyntheticVideos {
  std::vector<Video> videos;
  std::vector<ActionSegment> segments;  // ordered by (video, start)
};

// Samples an action chain per video from the schema and renders it.
// Deterministic given spec.seed.
SyntheticVideos generate_schema_dataset(const SchemaSpec& spec, std::size_t n_videos, std::size_t video_len);

// Draws a chain of `steps` actions (no durations) from the schema; used to
// audit transition statistics.
std::vector<int> sample_action_chain(const ActionSchema& schema, std::size_t steps, std::uint64_t seed);

enum class Split { Train, Val, All };

// An observed clip with its inputs flattened as [length, dim].
struct AnticipationSample {
  std::uint64_t id = 0;
  std::size_t video_id = 0;
  long segment_start = 0;
  std::vector<long> times;
  std::size_t pad_count = 0;
  LabelTrack labels;
  std::vector<float> inputs;
  std::size_t dim = 0;

  std::size_t length() const { return labels.length(); }
};

// On-disk dataset:
//   manifest.txt   key = value: schema fields, generation sizes, split
//   vocab.csv      action_id,verb_id,noun_id,name
//   segments.csv   video_id,start,end,action_id
//   videos/video_NNNNN.feat  one feature record per video (target = -1)
class Dataset {
 public:
  Vocabulary vocab;
  std::vector<Video> videos;
  std::vector<ActionSegment> segments;
  KeyValueConfig manifest;
  std::size_t train_videos = 0;  // videos [0, train_videos) form the training split

  std::size_t dim() const { return videos.empty() ? 0 : videos.front().dim; }
  bool frames() const;
  Split split_of(std::size_t video_id) const { return video_id < train_videos ? Split::Train : Split::Val; }

  void save(const std::filesystem::path& dir) const;
  static Dataset load(const std::filesystem::path& dir);

  // Samples one clip per segment of the split, in (video, segment) order.
  // Sample ids are global segment indices. Skipped segments are reported
  // through `skipped` when provided.
  std::vector<AnticipationSample> samples(const ClipSpec& clip, Split split,
                                          std::vector<std::string>* skipped = nullptr) const;
};

// Builds a generated dataset (schema + sizes) ready to save.
Dataset make_schema_dataset(const SchemaSpec& spec, std::size_t train_videos, std::size_t val_videos,
                            std::size_t video_len);

// Fixed-feature files: samples (length x dim) with labels and targets.
void write_sample_features(const std::filesystem::path& path, const std::vector<AnticipationSample>& samples,
                           std::uint64_t vocab_hash, DType dtype = DType::F32);
std::vector<AnticipationSample> load_fixed_features(const std::filesystem::path& path,
                                                    std::uint64_t* vocab_hash = nullptr);

}  // namespace avt
