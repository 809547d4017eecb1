#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "avt/backbone.hpp"
#include "avt/config.hpp"
#include "avt/head.hpp"
#include "avt/nn.hpp"

namespace avt {

template <typename T>
struct ModelOutputs {
  Tensor<T> z_hat;     // [B, T, head_dim] predicted future features
  Tensor<T> logits;    // [B, T, K]
  Tensor<T> y_hat;     // [B, T, K] softmax(logits)
  Tensor<T> z_target;  // [B, T, head_dim] projected observed features

  std::size_t batch() const { return logits.dim(0); }
  std::size_t length() const { return logits.dim(1); }
  std::size_t classes() const { return logits.dim(2); }
};

// Optional activation capture for attention export.
struct ForwardProbe {
  AttentionTrace backbone;  // per backbone layer, batch = B*T frames
  AttentionTrace head;      // per decoder layer
};

// Backbone (optional) -> linear projector -> causal decoder -> classifier.
template <typename T>
class AnticipativeModel {
 public:
  AnticipativeModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  bool has_backbone() const { return backbone_.has_value(); }
  Backbone<T>& backbone() { return *backbone_; }
  const Backbone<T>& backbone() const { return *backbone_; }
  Head<T>& head() { return head_; }
  const Head<T>& head() const { return head_; }
  Linear<T>& projector() { return projector_; }
  const Linear<T>& projector() const { return projector_; }
  Linear<T>& classifier() { return classifier_; }
  const Linear<T>& classifier() const { return classifier_; }

  // inputs: [B, T, input_dim] (frames flattened per row, or feature vectors).
  ModelOutputs<T> forward(const Tensor<T>& inputs, ForwardProbe* probe = nullptr) const;
  // Skips the backbone; z: [B, T, encoder_dim].
  ModelOutputs<T> forward_features(const Tensor<T>& z, ForwardProbe* probe = nullptr) const;
  // Skips backbone and projector; z_proj: [B, T, head_dim].
  ModelOutputs<T> forward_projected(const Tensor<T>& z_proj, ForwardProbe* probe = nullptr) const;

  // [B, T, input_dim] -> [B, T, encoder_dim]. Identity without a backbone.
  Tensor<T> encode(const Tensor<T>& inputs, ForwardProbe* probe = nullptr) const;
  Tensor<T> project(const Tensor<T>& z) const;
  // Class distribution for one decoder output row.
  std::vector<T> classify(std::span<const T> z_hat_row) const;
  std::vector<T> class_logits(std::span<const T> z_hat_row) const;

  ParameterList<T> parameters() const;
  // Parameters updated by training: all of them, or the head side only when
  // the backbone is frozen.
  ParameterList<T> trainable_parameters(bool freeze_backbone) const;

 private:
  ModelConfig config_;
  std::optional<Backbone<T>> backbone_;
  Linear<T> projector_;
  Head<T> head_;
  Linear<T> classifier_;
};

// Order-sensitive FNV-1a over the raw bytes of every parameter.
template <typename T>
std::uint64_t parameter_fingerprint(const ParameterList<T>& params);

extern template class AnticipativeModel<float>;
extern template class AnticipativeModel<double>;

}  // namespace avt
