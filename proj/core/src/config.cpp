#include "avt/config.hpp"

#include "avt/errors.hpp"

namespace avt {

void BackboneConfig::validate() const {
  if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
    throw ConfigError("image size " + std::to_string(image_size) + " is not divisible by patch size " +
                      std::to_string(patch_size));
  }
  if (channels == 0 || num_layers == 0 || mlp_ratio == 0) throw ConfigError("backbone extents must be positive");
  if (num_heads == 0 || model_dim % num_heads != 0) {
    throw ConfigError("backbone dim " + std::to_string(model_dim) + " is not divisible by " +
                      std::to_string(num_heads) + " heads");
  }
}

BackboneConfig BackboneConfig::avt_tiny() { return BackboneConfig{}; }

BackboneConfig BackboneConfig::avt_b() {
  BackboneConfig c;
  c.image_size = 224;
  c.channels = 3;
  c.patch_size = 16;
  c.model_dim = 768;
  c.num_layers = 12;
  c.num_heads = 12;
  c.mlp_ratio = 4;
  return c;
}

void HeadConfig::validate() const {
  if (num_layers == 0 || mlp_ratio == 0 || max_len == 0) throw ConfigError("head extents must be positive");
  if (num_heads == 0 || head_dim % num_heads != 0) {
    throw ConfigError("head dim " + std::to_string(head_dim) + " is not divisible by " +
                      std::to_string(num_heads) + " heads");
  }
}

HeadConfig HeadConfig::avt_tiny() { return HeadConfig{}; }

HeadConfig HeadConfig::avt_b() {
  HeadConfig c;
  c.head_dim = 2048;
  c.num_layers = 6;
  c.num_heads = 4;
  return c;
}

std::string to_string(BackboneMode mode) {
  return mode == BackboneMode::Frames ? "frames" : "fixed-features";
}

void ModelConfig::validate() const {
  if (mode == BackboneMode::Frames) backbone.validate();
  head.validate();
  if (num_classes < 2) throw ConfigError("need at least 2 action classes");
  if (mode == BackboneMode::FixedFeatures && feature_dim == 0) throw ConfigError("feature_dim must be positive");
}

ModelConfig ModelConfig::from_preset(const std::string& name, std::size_t num_classes,
                                     std::size_t feature_dim) {
  ModelConfig c;
  c.preset = name;
  c.num_classes = num_classes;
  c.feature_dim = feature_dim;
  if (name == "avt-tiny") {
    c.mode = BackboneMode::Frames;
  } else if (name == "avt-b") {
    c.mode = BackboneMode::Frames;
    c.backbone = BackboneConfig::avt_b();
    c.head = HeadConfig::avt_b();
  } else if (name == "fixed-features") {
    c.mode = BackboneMode::FixedFeatures;
  } else {
    throw ConfigError("unknown backbone preset '" + name + "' (expected avt-tiny, avt-b or fixed-features)");
  }
  return c;
}

}  // namespace avt
