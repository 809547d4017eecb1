#include "avt/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "avt/errors.hpp"

namespace avt {

namespace {

constexpr std::uint64_t kVideoSalt = 0x766964656fULL;

std::mt19937_64 video_rng(std::uint64_t seed, std::size_t video) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kVideoSalt), static_cast<std::uint32_t>(video)};
  return std::mt19937_64(seq);
}

int sample_from(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  int last_nonzero = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (probs[c] <= 0.0) continue;
    acc += probs[c];
    last_nonzero = static_cast<int>(c);
    if (x < acc) return static_cast<int>(c);
  }
  return last_nonzero;
}

std::vector<int> initial_history(std::size_t order, std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(k) - 1);
  std::vector<int> h;
  while (h.size() < order) {
    const int a = pick(rng);
    if (!h.empty() && h.back() == a) continue;
    h.push_back(a);
  }
  return h;
}

int sample_duration(const DurationSpec& d, std::mt19937_64& rng) {
  std::geometric_distribution<int> geo(d.p);
  const int steps = 1 + geo(rng);
  return std::clamp(steps, d.min_steps, d.max_steps);
}

std::string video_file_name(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "video_%05zu.feat", id);
  return buf;
}

void render_step(const ActionSchema& schema, int action, std::mt19937_64& rng, float* out) {
  const SchemaSpec& s = schema.spec();
  std::normal_distribution<double> noise(0.0, 1.0);
  if (!s.frames) {
    const auto mean = schema.class_mean(action);
    for (std::size_t j = 0; j < s.feature_dim; ++j)
      out[j] = static_cast<float>(mean[j] + (s.sigma > 0.0 ? s.sigma * noise(rng) : 0.0));
    return;
  }
  const std::size_t grid = s.image_size / s.patch_size;
  const std::size_t cell = static_cast<std::size_t>(action) % (grid * grid);
  const std::size_t cy = cell / grid, cx = cell % grid;
  for (std::size_t y = 0; y < s.image_size; ++y)
    for (std::size_t x = 0; x < s.image_size; ++x)
      for (std::size_t c = 0; c < s.channels; ++c) {
        const bool lit = y / s.patch_size == cy && x / s.patch_size == cx;
        double v = lit ? 0.9 : 0.1;
        if (s.sigma > 0.0) v += s.sigma * noise(rng);
        out[(y * s.image_size + x) * s.channels + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
}

}  // namespace

std::vector<int> sample_action_chain(const ActionSchema& schema, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 rng = video_rng(seed, 0);
  const auto& s = schema.spec();
  std::vector<int> chain = initial_history(s.order, s.num_classes, rng);
  while (chain.size() < steps) {
    std::span<const int> hist(chain.data() + chain.size() - s.order, s.order);
    chain.push_back(sample_from(schema.transition_row(schema.history_index(hist)), rng));
  }
  chain.resize(steps);
  return chain;
}

SyntheticVideos generate_schema_dataset(const SchemaSpec& spec, std::size_t n_videos, std::size_t video_len) {
  const ActionSchema schema(spec);
  if (video_len == 0) throw ConfigError("video length must be positive");
  const std::size_t dim = spec.emission_dim();
  SyntheticVideos out;
  for (std::size_t v = 0; v < n_videos; ++v) {
    std::mt19937_64 rng = video_rng(spec.seed, v);
    Video video;
    video.id = v;
    video.dim = dim;
    video.labels.reserve(video_len);
    std::vector<int> chain = initial_history(spec.order, spec.num_classes, rng);
    std::size_t next_in_chain = 0;
    long t = 1;
    while (static_cast<std::size_t>(t) <= video_len) {
      if (next_in_chain == chain.size()) {
        std::span<const int> hist(chain.data() + chain.size() - spec.order, spec.order);
        chain.push_back(sample_from(schema.transition_row(schema.history_index(hist)), rng));
      }
      const int action = chain[next_in_chain++];
      const long dur = sample_duration(spec.duration, rng);
      const long end = std::min<long>(t + dur, static_cast<long>(video_len) + 1);
      out.segments.push_back({v, t, end, action});
      for (long s = t; s < end; ++s) video.labels.push_back(action);
      t = end;
    }
    video.values.resize(video_len * dim);
    for (std::size_t s = 0; s < video_len; ++s) render_step(schema, video.labels[s], rng, video.values.data() + s * dim);
    out.videos.push_back(std::move(video));
  }
  return out;
}

bool Dataset::frames() const {
  auto f = manifest.get("frames");
  return f && parse_bool(*f);
}

Dataset make_schema_dataset(const SchemaSpec& spec, std::size_t train_videos, std::size_t val_videos,
                            std::size_t video_len) {
  auto gen = generate_schema_dataset(spec, train_videos + val_videos, video_len);
  Dataset ds;
  ds.vocab = Vocabulary::factored(spec.verbs, spec.nouns);
  ds.videos = std::move(gen.videos);
  ds.segments = std::move(gen.segments);
  ds.train_videos = train_videos;
  spec.write(ds.manifest);
  ds.manifest.set("train_videos", std::to_string(train_videos));
  ds.manifest.set("val_videos", std::to_string(val_videos));
  ds.manifest.set("video_len", std::to_string(video_len));
  return ds;
}

void Dataset::save(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "videos");
  KeyValueConfig m = manifest;
  m.set("train_videos", std::to_string(train_videos));
  m.set("n_videos", std::to_string(videos.size()));
  m.set("dim", std::to_string(dim()));
  m.set("vocab_hash", std::to_string(vocab.hash()));
  m.save(dir / "manifest.txt");
  vocab.save(dir / "vocab.csv");

  std::string seg = "video_id,start,end,action_id\n";
  for (const auto& s : segments)
    seg += std::to_string(s.video_id) + ',' + std::to_string(s.start) + ',' + std::to_string(s.end) + ',' +
           std::to_string(s.action) + '\n';
  write_text_file(dir / "segments.csv", seg);

  for (const auto& v : videos) {
    FeatureFile f;
    f.dtype = DType::F32;
    f.length = static_cast<std::uint32_t>(v.length());
    f.dim = static_cast<std::uint32_t>(v.dim);
    f.vocab_hash = vocab.hash();
    FeatureRecord r;
    r.id = v.id;
    r.target = -1;
    r.labels = v.labels;
    r.values.assign(v.values.begin(), v.values.end());
    f.records.push_back(std::move(r));
    write_features(dir / "videos" / video_file_name(v.id), f);
  }
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("dataset directory " + dir.string() + " does not exist");
  Dataset ds;
  ds.manifest = KeyValueConfig::load(dir / "manifest.txt");
  ds.vocab = Vocabulary::load(dir / "vocab.csv");
  ds.train_videos = parse_uint64(ds.manifest.require("train_videos"));
  const std::size_t n_videos = parse_uint64(ds.manifest.require("n_videos"));

  const auto rows = parse_csv(read_text_file(dir / "segments.csv"));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4) throw FormatError("segments.csv row " + std::to_string(r) + " needs 4 columns", 0);
    ActionSegment s{parse_uint64(row[0]), static_cast<long>(parse_int64(row[1])),
                    static_cast<long>(parse_int64(row[2])), parse_int(row[3])};
    if (s.end <= s.start) throw FormatError("segments.csv row " + std::to_string(r) + " has end <= start", 0);
    ds.vocab.entry(s.action);
    if (s.video_id >= n_videos) throw FormatError("segments.csv row " + std::to_string(r) + " names unknown video", 0);
    ds.segments.push_back(s);
  }

  const std::uint64_t vh = ds.vocab.hash();
  for (std::size_t v = 0; v < n_videos; ++v) {
    const auto f = read_features(dir / "videos" / video_file_name(v));
    if (f.vocab_hash != vh) throw VocabularyError("video " + std::to_string(v) + " was written with another vocabulary");
    if (f.records.size() != 1) throw FormatError("video file must hold exactly one record", 16);
    Video video;
    video.id = v;
    video.dim = f.dim;
    video.labels = f.records[0].labels;
    video.values.assign(f.records[0].values.begin(), f.records[0].values.end());
    ds.videos.push_back(std::move(video));
  }
  return ds;
}

std::vector<AnticipationSample> Dataset::samples(const ClipSpec& clip, Split split,
                                                 std::vector<std::string>* skipped) const {
  std::vector<AnticipationSample> out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (split != Split::All && split_of(seg.video_id) != split) continue;
    const Video& video = videos.at(seg.video_id);
    auto outcome = sample_clip(seg, video.labels, clip);
    if (!outcome.clip) {
      if (skipped) skipped->push_back("segment " + std::to_string(i) + ": " + outcome.skip_reason);
      continue;
    }
    AnticipationSample s;
    s.id = i;
    s.video_id = seg.video_id;
    s.segment_start = seg.start;
    s.times = outcome.clip->times;
    s.pad_count = outcome.clip->pad_count;
    s.labels = std::move(outcome.clip->labels);
    s.dim = video.dim;
    s.inputs.reserve(s.times.size() * video.dim);
    for (std::size_t idx : outcome.clip->frame_index) {
      const float* row = video.values.data() + idx * video.dim;
      s.inputs.insert(s.inputs.end(), row, row + video.dim);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_sample_features(const std::filesystem::path& path, const std::vector<AnticipationSample>& samples,
                           std::uint64_t vocab_hash, DType dtype) {
  FeatureFile f;
  f.dtype = dtype;
  f.vocab_hash = vocab_hash;
  if (!samples.empty()) {
    f.length = static_cast<std::uint32_t>(samples.front().length());
    f.dim = static_cast<std::uint32_t>(samples.front().dim);
  }
  for (const auto& s : samples) {
    if (s.length() != f.length || s.dim != f.dim) throw DimensionError("samples disagree on length or dim");
    FeatureRecord r;
    r.id = s.id;
    r.target = s.labels.next_action;
    r.labels = s.labels.frame_labels;
    r.values.assign(s.inputs.begin(), s.inputs.end());
    f.records.push_back(std::move(r));
  }
  write_features(path, f);
}

std::vector<AnticipationSample> load_fixed_features(const std::filesystem::path& path, std::uint64_t* vocab_hash) {
  const auto f = read_features(path);
  if (vocab_hash) *vocab_hash = f.vocab_hash;
  std::vector<AnticipationSample> out;
  out.reserve(f.records.size());
  for (const auto& r : f.records) {
    if (r.target < 0) throw FormatError("sample " + std::to_string(r.id) + " has no target action", 0);
    AnticipationSample s;
    s.id = r.id;
    s.labels.frame_labels = r.labels;
    s.labels.next_action = r.target;
    s.dim = f.dim;
    s.inputs.assign(r.values.begin(), r.values.end());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace avt
