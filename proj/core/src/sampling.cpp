#include "avt/sampling.hpp"

#include "avt/errors.hpp"

namespace avt {

std::size_t ClipSpec::length() const {
  validate();
  return static_cast<std::size_t>(observe / effective_stride());
}

void ClipSpec::validate() const {
  if (observe <= 0) throw ConfigError("tau_o must be positive");
  if (anticipate <= 0) throw ConfigError("tau_a must be positive");
  if (stride < 0) throw ConfigError("stride must be non-negative");
  if (observe % effective_stride() != 0) {
    throw ConfigError("tau_o (" + std::to_string(observe) + ") must be a multiple of the stride (" +
                      std::to_string(effective_stride()) + ")");
  }
}

ClipOutcome sample_clip(const ActionSegment& segment, std::span<const int> timeline_labels, const ClipSpec& spec) {
  spec.validate();
  ClipOutcome outcome;
  if (spec.anticipate >= segment.start) {
    outcome.skip_reason = "tau_a (" + std::to_string(spec.anticipate) + ") >= segment start (" +
                          std::to_string(segment.start) + "): no observable frame";
    return outcome;
  }
  const long last = segment.start - spec.anticipate;
  if (last > static_cast<long>(timeline_labels.size())) {
    outcome.skip_reason = "segment starts beyond the video timeline";
    return outcome;
  }
  const long stride = spec.effective_stride();
  const std::size_t len = spec.length();
  SampledClip clip;
  clip.labels.next_action = segment.action;
  for (std::size_t k = 1; k <= len; ++k) {
    const long t = last - spec.observe + static_cast<long>(k) * stride;
    clip.times.push_back(t);
    if (t < 1) {
      ++clip.pad_count;
      clip.frame_index.push_back(0);
      clip.labels.frame_labels.push_back(kIgnoreLabel);
    } else {
      clip.frame_index.push_back(static_cast<std::size_t>(t - 1));
      clip.labels.frame_labels.push_back(timeline_labels[static_cast<std::size_t>(t - 1)]);
    }
  }
  outcome.clip = std::move(clip);
  return outcome;
}

}  // namespace avt
