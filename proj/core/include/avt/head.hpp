#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avt/config.hpp"
#include "avt/nn.hpp"
#include "avt/tensor.hpp"

namespace avt {

// Lower-triangular attention pattern: query i may attend to key j iff j <= i.
class CausalMask {
 public:
  explicit CausalMask(std::size_t length);

  std::size_t size() const { return length_; }
  bool allowed(std::size_t query, std::size_t key) const { return key <= query; }
  std::size_t allowed_count() const { return length_ * (length_ + 1) / 2; }

  // [length, length] additive mask: 0 where allowed, blocked_score<T>() elsewhere.
  template <typename T>
  Tensor<T> additive() const;

 private:
  std::size_t length_;
};

// -inf in double precision; a large finite negative score in single precision.
template <typename T>
T blocked_score();

// Per-sequence key/value cache for incremental decoding.
template <typename T>
struct DecoderCache {
  std::vector<std::vector<T>> keys;    // per layer, [length, head_dim] row-major
  std::vector<std::vector<T>> values;  // per layer
  std::size_t length = 0;
};

// Causal transformer decoder over projected frame features.
template <typename T>
class Head {
 public:
  Head() = default;
  Head(const HeadConfig& config, Rng& rng);

  const HeadConfig& config() const { return config_; }

  // z: [B, T, head_dim] -> predicted future features [B, T, head_dim].
  Tensor<T> decode(const Tensor<T>& z, AttentionTrace* trace = nullptr) const;

  // Appends one projected feature row at position cache.length and returns
  // the decoder output for that position. Earlier positions are never recomputed.
  std::vector<T> decode_step(std::span<const T> z_row, DecoderCache<T>& cache) const;

  void collect(const std::string& prefix, ParameterList<T>& out) const;

  Tensor<T> position;  // [max_len, head_dim]
  std::vector<TransformerBlock<T>> blocks;
  LayerNorm<T> norm;

 private:
  HeadConfig config_;
};

extern template class Head<float>;
extern template class Head<double>;

}  // namespace avt
