#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "avt/tensor.hpp"

namespace avt {

using Rng = std::mt19937_64;

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

// Truncated normal (resampled outside +-2 std) with the given std.
template <typename T>
Tensor<T> trunc_normal(Shape shape, double std, Rng& rng);

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, double init_std = 0.02);

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;
  T eps = T(1e-5);

  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim);

  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;
};

// Head-averaged attention weights of one layer, captured during a forward
// pass. `weights` is [batch, heads, tokens, tokens] in row-major order.
struct AttentionMap {
  std::size_t batch = 0;
  std::size_t heads = 0;
  std::size_t tokens = 0;
  std::vector<double> weights;

  // tokens x tokens matrix averaged over heads for one batch element.
  std::vector<double> head_average(std::size_t b) const;
};

using AttentionTrace = std::vector<AttentionMap>;

template <typename T>
struct MultiHeadAttention {
  Linear<T> query, key, value, output;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads, Rng& rng);

  // x: [batch, tokens, dim]. `mask` is an optional additive [tokens, tokens]
  // term applied to the scores before the softmax.
  Tensor<T> operator()(const Tensor<T>& x, const Tensor<T>* mask, AttentionTrace* trace) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;
};

template <typename T>
struct Mlp {
  Linear<T> fc1, fc2;

  Mlp() = default;
  Mlp(std::size_t dim, std::size_t hidden, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;
};

// Pre-norm transformer block: x + attn(ln1(x)), then + mlp(ln2(x)).
template <typename T>
struct TransformerBlock {
  LayerNorm<T> norm1;
  MultiHeadAttention<T> attention;
  LayerNorm<T> norm2;
  Mlp<T> mlp;

  TransformerBlock() = default;
  TransformerBlock(std::size_t dim, std::size_t heads, std::size_t mlp_ratio, Rng& rng);

  Tensor<T> operator()(const Tensor<T>& x, const Tensor<T>* mask, AttentionTrace* trace) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;
};

}  // namespace avt
