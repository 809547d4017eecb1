#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avt/config.hpp"
#include "avt/nn.hpp"
#include "avt/tensor.hpp"

namespace avt {

// One video frame, pixels in [0, 1], stored row-major as H x W x C.
struct Frame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> pixels;
};

// Splits a frame into non-overlapping P x P patches. Patches are ordered
// row-major over the patch grid; each patch is flattened row-major with the
// channel index innermost (length P*P*C).
std::vector<std::vector<float>> patchify(const Frame& frame, std::size_t patch_size);
Frame unpatchify(const std::vector<std::vector<float>>& patches, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch_size);

// For a flat H*W*C frame, the source pixel of every element of the
// [num_patches, P*P*C] patch matrix, in patchify() order.
std::vector<std::size_t> patch_index(std::size_t height, std::size_t width, std::size_t channels,
                                     std::size_t patch_size);

template <typename T>
class Backbone {
 public:
  Backbone() = default;
  Backbone(const BackboneConfig& config, Rng& rng);

  const BackboneConfig& config() const { return config_; }

  // frames: [F, H*W*C] -> [F, D]. Every frame is encoded independently with
  // the same weights; the output is the [CLASS] token after the final norm.
  Tensor<T> encode(const Tensor<T>& frames, AttentionTrace* trace = nullptr) const;
  std::vector<T> encode_frame(const Frame& frame) const;
  // [T, D] features for a clip; throws on an empty clip.
  Tensor<T> encode_clip(std::span<const Frame> frames) const;

  void collect(const std::string& prefix, ParameterList<T>& out) const;

  // Activation probe: skip the encoder's final LayerNorm.
  bool apply_final_norm = true;

  Linear<T> patch_embed;
  Tensor<T> class_token;  // [1, D]
  Tensor<T> position;     // [num_patches + 1, D]
  std::vector<TransformerBlock<T>> blocks;
  LayerNorm<T> norm;

 private:
  BackboneConfig config_;
  std::vector<std::size_t> patch_index_;
};

extern template class Backbone<float>;
extern template class Backbone<double>;

}  // namespace avt
