#pragma once

#include <string>
#include <vector>

#include "avt/model.hpp"
#include "avt/vocab.hpp"

namespace avt {

struct RolloutStep {
  std::size_t step = 0;  // 1-based
  int action = 0;
  double probability = 0.0;
  std::vector<double> logits;
};

struct RolloutRun {
  int action = 0;
  std::size_t count = 0;
};

struct RolloutTrace {
  std::vector<RolloutStep> steps;

  // Consecutive equal predictions collapsed to (action, repeat count).
  std::vector<RolloutRun> runs() const;
  std::string to_csv() const;
  // One line per run: "v1-n0 x3"; names come from `vocab` when given.
  std::string to_text(const Vocabulary* vocab = nullptr) const;
};

// Step 1 classifies the last observed position. Each later step feeds the
// previous predicted feature back in after the projector and decodes one more
// position through the key/value cache. clip: [T, input_dim] or [1, T, input_dim].
// Throws when n_steps + T exceeds the head's max length.
template <typename T>
RolloutTrace rollout(const AnticipativeModel<T>& model, const Tensor<T>& clip, std::size_t n_steps);

// Same trace, recomputing the full decoder over the extended sequence at
// every step. Reference for the cached path.
template <typename T>
RolloutTrace rollout_recompute(const AnticipativeModel<T>& model, const Tensor<T>& clip, std::size_t n_steps);

}  // namespace avt
