#pragma once

#include <cstddef>
#include <string>

namespace avt {

// ViT-style per-frame encoder geometry.
struct BackboneConfig {
  std::size_t image_size = 32;
  std::size_t channels = 1;
  std::size_t patch_size = 8;
  std::size_t model_dim = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t mlp_ratio = 4;

  std::size_t grid() const { return image_size / patch_size; }
  std::size_t num_patches() const { return grid() * grid(); }
  std::size_t tokens() const { return num_patches() + 1; }
  std::size_t patch_dim() const { return patch_size * patch_size * channels; }
  std::size_t pixels() const { return image_size * image_size * channels; }
  void validate() const;

  // Desk preset: 32x32x1 frames, 8x8 patches, D=64, 2 layers, 4 heads.
  static BackboneConfig avt_tiny();
  // ViT-B/16 on 224x224 RGB frames.
  static BackboneConfig avt_b();
};

struct HeadConfig {
  std::size_t head_dim = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t mlp_ratio = 4;
  std::size_t max_len = 32;  // size of the temporal position table

  void validate() const;

  static HeadConfig avt_tiny();
  static HeadConfig avt_b();
};

enum class BackboneMode { Frames, FixedFeatures };

std::string to_string(BackboneMode mode);

struct ModelConfig {
  std::string preset = "avt-tiny";
  BackboneMode mode = BackboneMode::FixedFeatures;
  BackboneConfig backbone = BackboneConfig::avt_tiny();
  HeadConfig head = HeadConfig::avt_tiny();
  std::size_t feature_dim = 16;  // per-frame input dim in fixed-feature mode
  std::size_t num_classes = 8;

  // Width of one input row: pixels per frame or feature dim.
  std::size_t input_dim() const {
    return mode == BackboneMode::Frames ? backbone.pixels() : feature_dim;
  }
  // Width of z_t entering the projector.
  std::size_t encoder_dim() const {
    return mode == BackboneMode::Frames ? backbone.model_dim : feature_dim;
  }
  void validate() const;

  // "avt-tiny" and "avt-b" build a frame-encoder model; "fixed-features"
  // builds a head-only model over feature vectors of `feature_dim`.
  static ModelConfig from_preset(const std::string& name, std::size_t num_classes,
                                 std::size_t feature_dim);
};

}  // namespace avt
