#pragma once

#include <span>
#include <string>
#include <vector>

#include "avt/model.hpp"
#include "avt/tensor.hpp"

namespace avt {

inline constexpr int kIgnoreLabel = -1;

// Labels aligned to an observed clip: frame_labels[t] is the action at
// frame t+1 (or kIgnoreLabel), next_action is the action to anticipate.
struct LabelTrack {
  std::vector<int> frame_labels;
  int next_action = 0;

  std::size_t length() const { return frame_labels.size(); }
  // Throws IndexError when a label is outside {-1} u [0, num_classes).
  void validate(std::size_t num_classes) const;
};

enum class TrainingMode { Naive, Anticipative };

std::string to_string(TrainingMode mode);
TrainingMode parse_training_mode(const std::string& text);

enum class FeatureLoss { L2, InfoNce };

struct ObjectiveOptions {
  FeatureLoss feature_loss = FeatureLoss::L2;
  double nce_temperature = 0.1;
};

struct LossReport {
  double l_next = 0.0;
  double l_cls = 0.0;
  double l_feat = 0.0;
  double total = 0.0;
  TrainingMode mode = TrainingMode::Anticipative;
};

template <typename T>
struct LossTerms {
  Tensor<T> next, cls, feat, total;
  TrainingMode mode = TrainingMode::Anticipative;

  LossReport report() const;
};

// All losses take batched model outputs and average per-sample values over
// the batch.

// -log y_T[c_{T+1}] from the last-position logits. logits: [B, T, K].
template <typename T>
Tensor<T> loss_next(const Tensor<T>& logits, std::span<const int> next_actions);

// Per sample: mean over t < T with c_{t+1} >= 0 of -log y_t[c_{t+1}];
// 0 when no position is labeled.
template <typename T>
Tensor<T> loss_cls(const Tensor<T>& logits, std::span<const LabelTrack> labels);

// Per sample: sum_{t<T} ||z_hat_t - z_{t+1}||^2 / ((T-1) * d). Targets are
// detached. T == 1 yields 0 and a one-time warning.
template <typename T>
Tensor<T> loss_feat(const Tensor<T>& z_hat, const Tensor<T>& z);

// InfoNCE over all (z_hat_t, z_{t+1}) pairs in the batch with cosine
// similarity / temperature; every other target is a negative.
template <typename T>
Tensor<T> loss_feat_nce(const Tensor<T>& z_hat, const Tensor<T>& z, double temperature);

template <typename T>
LossTerms<T> total_loss(const ModelOutputs<T>& outputs, std::span<const LabelTrack> labels, TrainingMode mode,
                        const ObjectiveOptions& options = {});

}  // namespace avt
