#pragma once

#include <random>

#include "avt/model.hpp"

namespace avt::testkit {

// Small frame model: 16x16x1 frames, 8x8 patches (2x2 grid), D=8.
inline ModelConfig tiny_frames_config(std::size_t num_classes = 5) {
  ModelConfig c = ModelConfig::from_preset("avt-tiny", num_classes, 0);
  c.backbone.image_size = 16;
  c.backbone.model_dim = 8;
  c.backbone.num_layers = 1;
  c.backbone.num_heads = 2;
  c.backbone.mlp_ratio = 2;
  c.head.head_dim = 8;
  c.head.num_heads = 2;
  c.head.mlp_ratio = 2;
  c.head.max_len = 16;
  return c;
}

inline ModelConfig tiny_features_config(std::size_t num_classes = 6, std::size_t feature_dim = 5) {
  ModelConfig c = ModelConfig::from_preset("fixed-features", num_classes, feature_dim);
  c.head.head_dim = 8;
  c.head.num_heads = 2;
  c.head.mlp_ratio = 2;
  c.head.max_len = 16;
  return c;
}

template <typename T>
Tensor<T> random_inputs(std::size_t batch, std::size_t len, std::size_t dim, std::mt19937_64& rng,
                        double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> x(Shape{batch, len, dim});
  for (auto& v : x.data()) v = static_cast<T>(u(rng));
  return x;
}

}  // namespace avt::testkit
