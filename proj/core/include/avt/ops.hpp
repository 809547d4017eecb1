#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avt/tensor.hpp"

namespace avt {

// Differentiable operations. Every op records a backward closure when grad
// mode is on and any input requires a gradient. Kernels are sequential with a
// fixed reduction order, so results are bit-reproducible.

// Elementwise a + b. `b` either matches `a` or matches a trailing suffix of
// a's shape (broadcast over the leading axes).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
// Elementwise product of equally shaped tensors.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

// [m,k]x[k,n] -> [m,n], or batched [b,m,k]x[b,k,n] -> [b,m,n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// Swaps the last two axes.
template <typename T>
Tensor<T> transpose(const Tensor<T>& a);
template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes);
template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, std::size_t axis);
// Stacks `count` copies of `a` along a new leading axis.
template <typename T>
Tensor<T> repeat(const Tensor<T>& a, std::size_t count);
// out[i] = a.data()[index[i]]; gradients scatter-add back.
template <typename T>
Tensor<T> gather(const Tensor<T>& a, std::span<const std::size_t> index, Shape out_shape);
// Selects slices along axis 0.
template <typename T>
Tensor<T> index_rows(const Tensor<T>& a, std::span<const std::size_t> rows);

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, std::size_t axis);
// Normalizes over the last axis, then applies per-feature gain and bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T(1e-5));
// Exact erf-based GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);
// Divides each row (last axis) by its L2 norm.
template <typename T>
Tensor<T> normalize_rows(const Tensor<T>& x, T eps = T(1e-8));

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);
// Scalar sum_i weights[i] * x[i] with constant weights.
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, std::span<const T> weights);

// Negative log-likelihood per row of log-probabilities [n,k]. A target of
// -1 marks an ignored row, which contributes exactly 0 and no gradient.
template <typename T>
Tensor<T> nll_rows(const Tensor<T>& log_probs, std::span<const int> targets);
// -log softmax(logits)[target] for a logit vector of K entries.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, int target);

// x[..., in] * weight[in, out] + bias[out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

}  // namespace avt
