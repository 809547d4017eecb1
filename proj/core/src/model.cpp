#include "avt/model.hpp"

#include <cstring>

#include "avt/errors.hpp"
#include "avt/ops.hpp"

namespace avt {

template <typename T>
AnticipativeModel<T>::AnticipativeModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  if (config_.mode == BackboneMode::Frames) backbone_.emplace(config_.backbone, rng);
  projector_ = Linear<T>(config_.encoder_dim(), config_.head.head_dim, rng);
  head_ = Head<T>(config_.head, rng);
  classifier_ = Linear<T>(config_.head.head_dim, config_.num_classes, rng);
}

template <typename T>
Tensor<T> AnticipativeModel<T>::encode(const Tensor<T>& inputs, ForwardProbe* probe) const {
  if (inputs.rank() != 3 || inputs.dim(2) != config_.input_dim()) {
    throw DimensionError("model expects inputs [batch, T, " + std::to_string(config_.input_dim()) +
                         "], got " + shape_str(inputs.shape()));
  }
  if (!backbone_) return inputs;
  const std::size_t b = inputs.dim(0), len = inputs.dim(1);
  auto frames = reshape(inputs, Shape{b * len, inputs.dim(2)});
  auto z = backbone_->encode(frames, probe ? &probe->backbone : nullptr);
  return reshape(z, Shape{b, len, config_.backbone.model_dim});
}

template <typename T>
Tensor<T> AnticipativeModel<T>::project(const Tensor<T>& z) const {
  if (z.rank() != 3 || z.dim(2) != projector_.in_features()) {
    throw ConfigError("projector expects features of width " + std::to_string(projector_.in_features()) +
                      ", got " + shape_str(z.shape()));
  }
  return projector_(z);
}

template <typename T>
ModelOutputs<T> AnticipativeModel<T>::forward(const Tensor<T>& inputs, ForwardProbe* probe) const {
  return forward_features(encode(inputs, probe), probe);
}

template <typename T>
ModelOutputs<T> AnticipativeModel<T>::forward_features(const Tensor<T>& z, ForwardProbe* probe) const {
  return forward_projected(project(z), probe);
}

template <typename T>
ModelOutputs<T> AnticipativeModel<T>::forward_projected(const Tensor<T>& z_proj, ForwardProbe* probe) const {
  ModelOutputs<T> out;
  out.z_target = z_proj;
  out.z_hat = head_.decode(z_proj, probe ? &probe->head : nullptr);
  out.logits = classifier_(out.z_hat);
  out.y_hat = softmax(out.logits, 2);
  return out;
}

template <typename T>
std::vector<T> AnticipativeModel<T>::class_logits(std::span<const T> z_hat_row) const {
  NoGradGuard no_grad;
  Tensor<T> row(Shape{1, z_hat_row.size()}, std::vector<T>(z_hat_row.begin(), z_hat_row.end()));
  auto logits = classifier_(row);
  return std::vector<T>(logits.data().begin(), logits.data().end());
}

template <typename T>
std::vector<T> AnticipativeModel<T>::classify(std::span<const T> z_hat_row) const {
  NoGradGuard no_grad;
  auto logits = class_logits(z_hat_row);
  auto probs = softmax(Tensor<T>(Shape{logits.size()}, logits), 0);
  return std::vector<T>(probs.data().begin(), probs.data().end());
}

template <typename T>
ParameterList<T> AnticipativeModel<T>::parameters() const {
  return trainable_parameters(false);
}

template <typename T>
ParameterList<T> AnticipativeModel<T>::trainable_parameters(bool freeze_backbone) const {
  ParameterList<T> out;
  if (backbone_ && !freeze_backbone) backbone_->collect("backbone", out);
  projector_.collect("projector", out);
  head_.collect("head", out);
  classifier_.collect("classifier", out);
  return out;
}

template <typename T>
std::uint64_t parameter_fingerprint(const ParameterList<T>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params) {
    for (T v : p.tensor.data()) {
      unsigned char bytes[sizeof(T)];
      std::memcpy(bytes, &v, sizeof(T));
      for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

template class AnticipativeModel<float>;
template class AnticipativeModel<double>;
template std::uint64_t parameter_fingerprint<float>(const ParameterList<float>&);
template std::uint64_t parameter_fingerprint<double>(const ParameterList<double>&);

}  // namespace avt
