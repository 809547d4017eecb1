#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avt/objectives.hpp"

namespace avt {

// Times are integer steps; a video of length L has frames at times 1..L.
// A segment covers [start, end).
struct ActionSegment {
  std::size_t video_id = 0;
  long start = 1;
  long end = 2;
  int action = 0;
};

struct ClipSpec {
  long observe = 10;  // tau_o
  long anticipate = 1;  // tau_a
  long stride = 0;    // 0 means stride = tau_a

  long effective_stride() const { return stride > 0 ? stride : anticipate; }
  std::size_t length() const;  // frames per clip
  void validate() const;
};

// Frame times and labels of one anticipation clip.
struct SampledClip {
  std::vector<long> times;               // requested times, may be < 1 when padded
  std::vector<std::size_t> frame_index;  // 0-based timeline index actually read
  std::size_t pad_count = 0;
  LabelTrack labels;
};

struct ClipOutcome {
  std::optional<SampledClip> clip;
  std::string skip_reason;  // set when clip is empty
};

// Samples the clip ending tau_a before segment.start at times
//   start - tau_a - tau_o + stride, ..., start - tau_a.
// Times before the first frame are filled with frame 1 and labeled -1.
// `timeline_labels[t-1]` is the action at time t (or -1).
ClipOutcome sample_clip(const ActionSegment& segment, std::span<const int> timeline_labels, const ClipSpec& spec);

}  // namespace avt
