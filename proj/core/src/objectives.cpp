#include "avt/objectives.hpp"

#include <iostream>
#include <mutex>

#include "avt/errors.hpp"
#include "avt/ops.hpp"

namespace avt {

void LabelTrack::validate(std::size_t num_classes) const {
  const int k = static_cast<int>(num_classes);
  if (next_action < 0 || next_action >= k) {
    throw IndexError("next action " + std::to_string(next_action) + " out of range [0, " + std::to_string(k) + ")");
  }
  for (int c : frame_labels) {
    if (c < kIgnoreLabel || c >= k) {
      throw IndexError("frame label " + std::to_string(c) + " out of range");
    }
  }
}

std::string to_string(TrainingMode mode) {
  return mode == TrainingMode::Naive ? "naive" : "anticipative";
}

TrainingMode parse_training_mode(const std::string& text) {
  if (text == "naive" || text == "n") return TrainingMode::Naive;
  if (text == "anticipative" || text == "a") return TrainingMode::Anticipative;
  throw ConfigError("unknown training mode '" + text + "' (expected naive or anticipative)");
}

template <typename T>
LossReport LossTerms<T>::report() const {
  return LossReport{static_cast<double>(next.item()), static_cast<double>(cls.item()),
                    static_cast<double>(feat.item()), static_cast<double>(total.item()), mode};
}

namespace {

template <typename T>
std::size_t require_rank3(const Tensor<T>& t, const char* what) {
  if (t.rank() != 3) throw DimensionError(std::string(what) + " must be [B, T, *], got " + shape_str(t.shape()));
  return t.dim(0);
}

}  // namespace

template <typename T>
Tensor<T> loss_next(const Tensor<T>& logits, std::span<const int> next_actions) {
  const std::size_t b = require_rank3(logits, "logits");
  if (next_actions.size() != b) throw DimensionError("loss_next: one target per sample required");
  const std::size_t len = logits.dim(1), k = logits.dim(2);
  std::vector<std::size_t> last(b);
  for (std::size_t i = 0; i < b; ++i) last[i] = i * len + (len - 1);
  for (int c : next_actions) {
    if (c < 0 || c >= static_cast<int>(k)) {
      throw IndexError("next action " + std::to_string(c) + " out of range [0, " + std::to_string(k) + ")");
    }
  }
  auto rows = index_rows(reshape(logits, Shape{b * len, k}), last);
  auto nll = nll_rows(log_softmax(rows, 1), next_actions);
  return b == 1 ? reshape(nll, Shape{}) : mean(nll);
}

template <typename T>
Tensor<T> loss_cls(const Tensor<T>& logits, std::span<const LabelTrack> labels) {
  const std::size_t b = require_rank3(logits, "logits");
  const std::size_t len = logits.dim(1), k = logits.dim(2);
  if (labels.size() != b) throw DimensionError("loss_cls: one label track per sample required");
  std::vector<int> targets(b * len, kIgnoreLabel);
  std::vector<T> weights(b * len, T{0});
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i].length() != len) {
      throw DimensionError("loss_cls: label track of length " + std::to_string(labels[i].length()) +
                           " for clip of length " + std::to_string(len));
    }
    labels[i].validate(k);
    std::size_t supervised = 0;
    for (std::size_t t = 0; t + 1 < len; ++t) {
      targets[i * len + t] = labels[i].frame_labels[t + 1];
      if (targets[i * len + t] >= 0) ++supervised;
    }
    for (std::size_t t = 0; t + 1 < len; ++t)
      if (targets[i * len + t] >= 0)
        weights[i * len + t] = T(1) / (static_cast<T>(supervised) * static_cast<T>(b));
  }
  auto nll = nll_rows(log_softmax(reshape(logits, Shape{b * len, k}), 1), targets);
  return weighted_sum(nll, std::span<const T>(weights));
}

template <typename T>
Tensor<T> loss_feat(const Tensor<T>& z_hat, const Tensor<T>& z) {
  const std::size_t b = require_rank3(z_hat, "z_hat");
  if (z.shape() != z_hat.shape()) {
    throw DimensionError("loss_feat: predicted " + shape_str(z_hat.shape()) + " vs target " + shape_str(z.shape()));
  }
  const std::size_t len = z_hat.dim(1), d = z_hat.dim(2);
  if (len < 2) {
    static std::once_flag warned;
    std::call_once(warned, [] {
      std::cerr << "warning: feature loss needs at least 2 frames; using 0 for single-frame clips\n";
    });
    return Tensor<T>::scalar(T{0});
  }
  std::vector<std::size_t> pred_rows, target_rows;
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t t = 0; t + 1 < len; ++t) {
      pred_rows.push_back(i * len + t);
      target_rows.push_back(i * len + t + 1);
    }
  auto pred = index_rows(reshape(z_hat, Shape{b * len, d}), pred_rows);
  auto target = index_rows(reshape(z.detach(), Shape{b * len, d}), target_rows);
  auto diff = sub(pred, target);
  const T norm = static_cast<T>(len - 1) * static_cast<T>(d) * static_cast<T>(b);
  return scale(sum(mul(diff, diff)), T(1) / norm);
}

template <typename T>
Tensor<T> loss_feat_nce(const Tensor<T>& z_hat, const Tensor<T>& z, double temperature) {
  const std::size_t b = require_rank3(z_hat, "z_hat");
  if (z.shape() != z_hat.shape()) throw DimensionError("loss_feat_nce: shape mismatch");
  if (temperature <= 0.0) throw ConfigError("InfoNCE temperature must be positive");
  const std::size_t len = z_hat.dim(1), d = z_hat.dim(2);
  const std::size_t n = b * (len > 0 ? len - 1 : 0);
  if (n < 2) {
    throw DimensionError("InfoNCE needs at least 2 candidates, got " + std::to_string(n));
  }
  std::vector<std::size_t> pred_rows, target_rows;
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t t = 0; t + 1 < len; ++t) {
      pred_rows.push_back(i * len + t);
      target_rows.push_back(i * len + t + 1);
    }
  auto q = normalize_rows(index_rows(reshape(z_hat, Shape{b * len, d}), pred_rows));
  auto c = normalize_rows(index_rows(reshape(z.detach(), Shape{b * len, d}), target_rows));
  auto logits = scale(matmul(q, transpose(c)), static_cast<T>(1.0 / temperature));
  std::vector<int> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = static_cast<int>(i);
  return mean(nll_rows(log_softmax(logits, 1), diag));
}

template <typename T>
LossTerms<T> total_loss(const ModelOutputs<T>& outputs, std::span<const LabelTrack> labels, TrainingMode mode,
                        const ObjectiveOptions& options) {
  LossTerms<T> terms;
  terms.mode = mode;
  std::vector<int> next(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) next[i] = labels[i].next_action;
  terms.next = loss_next(outputs.logits, std::span<const int>(next));
  terms.cls = loss_cls(outputs.logits, labels);
  if (options.feature_loss == FeatureLoss::InfoNce) {
    terms.feat = loss_feat_nce(outputs.z_hat, outputs.z_target, options.nce_temperature);
  } else {
    terms.feat = loss_feat(outputs.z_hat, outputs.z_target);
  }
  terms.total = mode == TrainingMode::Naive ? terms.next : add(add(terms.next, terms.cls), terms.feat);
  return terms;
}

#define AVT_INSTANTIATE_OBJECTIVES(T)                                                                   \
  template struct LossTerms<T>;                                                                         \
  template Tensor<T> loss_next(const Tensor<T>&, std::span<const int>);                                 \
  template Tensor<T> loss_cls(const Tensor<T>&, std::span<const LabelTrack>);                           \
  template Tensor<T> loss_feat(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> loss_feat_nce(const Tensor<T>&, const Tensor<T>&, double);                         \
  template LossTerms<T> total_loss(const ModelOutputs<T>&, std::span<const LabelTrack>, TrainingMode, \
                                   const ObjectiveOptions&);

AVT_INSTANTIATE_OBJECTIVES(float)
AVT_INSTANTIATE_OBJECTIVES(double)

}  // namespace avt
