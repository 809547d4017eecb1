#include "avt/nn.hpp"

#include <cmath>

#include "avt/errors.hpp"
#include "avt/ops.hpp"

namespace avt {

template <typename T>
Tensor<T> trunc_normal(Shape shape, double std, Rng& rng) {
  Tensor<T> out(std::move(shape));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : out.data()) {
    double z = normal(rng);
    while (std::abs(z) > 2.0) z = normal(rng);
    v = static_cast<T>(z * std);
  }
  return out;
}

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out, Rng& rng, double init_std)
    : weight(trunc_normal<T>(Shape{in, out}, init_std, rng)), bias(Shape{out}) {
  weight.set_requires_grad(true);
  bias.set_requires_grad(true);
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
  return linear(x, weight, bias);
}

template <typename T>
void Linear<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

template <typename T>
LayerNorm<T>::LayerNorm(std::size_t dim) : gain(Shape{dim}, T{1}), bias(Shape{dim}) {
  gain.set_requires_grad(true);
  bias.set_requires_grad(true);
}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
  return layer_norm(x, gain, bias, eps);
}

template <typename T>
void LayerNorm<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  out.push_back({prefix + ".gain", gain});
  out.push_back({prefix + ".bias", bias});
}

std::vector<double> AttentionMap::head_average(std::size_t b) const {
  if (b >= batch) throw IndexError("attention map batch index out of range");
  const std::size_t plane = tokens * tokens;
  std::vector<double> avg(plane, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    const double* src = weights.data() + (b * heads + h) * plane;
    for (std::size_t i = 0; i < plane; ++i) avg[i] += src[i];
  }
  for (double& v : avg) v /= static_cast<double>(heads);
  return avg;
}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(std::size_t dim, std::size_t num_heads, Rng& rng)
    : query(dim, dim, rng),
      key(dim, dim, rng),
      value(dim, dim, rng),
      output(dim, dim, rng),
      heads(num_heads) {
  if (num_heads == 0 || dim % num_heads != 0) {
    throw ConfigError("model dim " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(num_heads) + " heads");
  }
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::operator()(const Tensor<T>& x, const Tensor<T>* mask,
                                            AttentionTrace* trace) const {
  if (x.rank() != 3) throw DimensionError("attention expects [batch, tokens, dim], got " + shape_str(x.shape()));
  const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2);
  const std::size_t dh = d / heads;

  auto split = [&](const Tensor<T>& t) {
    auto r = reshape(t, Shape{b, n, heads, dh});
    return reshape(permute(r, {0, 2, 1, 3}), Shape{b * heads, n, dh});
  };
  auto q = split(query(x));
  auto k = split(key(x));
  auto v = split(value(x));

  auto scores = scale(matmul(q, transpose(k)), T(1) / std::sqrt(static_cast<T>(dh)));
  if (mask) scores = add(scores, *mask);
  auto probs = softmax(scores, 2);
  if (trace) {
    AttentionMap map{b, heads, n, std::vector<double>(probs.data().begin(), probs.data().end())};
    trace->push_back(std::move(map));
  }
  auto ctx = matmul(probs, v);
  auto merged = reshape(permute(reshape(ctx, Shape{b, heads, n, dh}), {0, 2, 1, 3}), Shape{b, n, d});
  return output(merged);
}

template <typename T>
void MultiHeadAttention<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  query.collect(prefix + ".query", out);
  key.collect(prefix + ".key", out);
  value.collect(prefix + ".value", out);
  output.collect(prefix + ".output", out);
}

template <typename T>
Mlp<T>::Mlp(std::size_t dim, std::size_t hidden, Rng& rng) : fc1(dim, hidden, rng), fc2(hidden, dim, rng) {}

template <typename T>
Tensor<T> Mlp<T>::operator()(const Tensor<T>& x) const {
  return fc2(gelu(fc1(x)));
}

template <typename T>
void Mlp<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  fc1.collect(prefix + ".fc1", out);
  fc2.collect(prefix + ".fc2", out);
}

template <typename T>
TransformerBlock<T>::TransformerBlock(std::size_t dim, std::size_t heads, std::size_t mlp_ratio, Rng& rng)
    : norm1(dim), attention(dim, heads, rng), norm2(dim), mlp(dim, dim * mlp_ratio, rng) {}

template <typename T>
Tensor<T> TransformerBlock<T>::operator()(const Tensor<T>& x, const Tensor<T>* mask,
                                          AttentionTrace* trace) const {
  auto h = add(x, attention(norm1(x), mask, trace));
  return add(h, mlp(norm2(h)));
}

template <typename T>
void TransformerBlock<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  norm1.collect(prefix + ".norm1", out);
  attention.collect(prefix + ".attn", out);
  norm2.collect(prefix + ".norm2", out);
  mlp.collect(prefix + ".mlp", out);
}

template Tensor<float> trunc_normal<float>(Shape, double, Rng&);
template Tensor<double> trunc_normal<double>(Shape, double, Rng&);
template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct Mlp<float>;
template struct Mlp<double>;
template struct TransformerBlock<float>;
template struct TransformerBlock<double>;

}  // namespace avt
