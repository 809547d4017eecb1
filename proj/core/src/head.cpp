#include "avt/head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avt/errors.hpp"
#include "avt/ops.hpp"

namespace avt {

CausalMask::CausalMask(std::size_t length) : length_(length) {
  if (length == 0) throw DimensionError("causal mask needs at least one position");
}

template <>
float blocked_score<float>() {
  return -1e9f;
}

template <>
double blocked_score<double>() {
  return -std::numeric_limits<double>::infinity();
}

template <typename T>
Tensor<T> CausalMask::additive() const {
  Tensor<T> mask(Shape{length_, length_});
  for (std::size_t i = 0; i < length_; ++i)
    for (std::size_t j = i + 1; j < length_; ++j) mask[i * length_ + j] = blocked_score<T>();
  return mask;
}

template Tensor<float> CausalMask::additive<float>() const;
template Tensor<double> CausalMask::additive<double>() const;

template <typename T>
Head<T>::Head(const HeadConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  position = trunc_normal<T>(Shape{config_.max_len, config_.head_dim}, 0.02, rng);
  position.set_requires_grad(true);
  for (std::size_t l = 0; l < config_.num_layers; ++l)
    blocks.emplace_back(config_.head_dim, config_.num_heads, config_.mlp_ratio, rng);
  norm = LayerNorm<T>(config_.head_dim);
}

template <typename T>
Tensor<T> Head<T>::decode(const Tensor<T>& z, AttentionTrace* trace) const {
  if (z.rank() != 3 || z.dim(2) != config_.head_dim) {
    throw DimensionError("head expects [batch, T, " + std::to_string(config_.head_dim) + "], got " +
                         shape_str(z.shape()));
  }
  const std::size_t len = z.dim(1);
  if (len == 0 || len > config_.max_len) {
    throw DimensionError("sequence length " + std::to_string(len) + " outside [1, " +
                         std::to_string(config_.max_len) + "]");
  }
  std::vector<std::size_t> rows(len);
  for (std::size_t t = 0; t < len; ++t) rows[t] = t;
  auto x = add(z, index_rows(position, rows));
  const auto mask = CausalMask(len).additive<T>();
  for (const auto& block : blocks) x = block(x, &mask, trace);
  return norm(x);
}

template <typename T>
std::vector<T> Head<T>::decode_step(std::span<const T> z_row, DecoderCache<T>& cache) const {
  const std::size_t d = config_.head_dim;
  if (z_row.size() != d) throw DimensionError("decode_step: feature row has wrong width");
  const std::size_t t = cache.length;
  if (t >= config_.max_len) {
    throw DimensionError("decode_step: position " + std::to_string(t + 1) + " exceeds max length " +
                         std::to_string(config_.max_len));
  }
  NoGradGuard no_grad;
  if (cache.keys.empty()) {
    cache.keys.resize(blocks.size());
    cache.values.resize(blocks.size());
  }

  const std::size_t heads = config_.num_heads;
  const std::size_t dh = d / heads;
  const T inv_scale = T(1) / std::sqrt(static_cast<T>(dh));

  Tensor<T> x(Shape{1, d});
  for (std::size_t j = 0; j < d; ++j) x[j] = z_row[j] + position[t * d + j];

  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const auto& block = blocks[l];
    const auto& attn = block.attention;
    auto h = block.norm1(x);
    auto q = attn.query(h);
    auto k = attn.key(h);
    auto v = attn.value(h);
    auto& keys = cache.keys[l];
    auto& values = cache.values[l];
    keys.insert(keys.end(), k.data().begin(), k.data().end());
    values.insert(values.end(), v.data().begin(), v.data().end());
    const std::size_t n = t + 1;

    Tensor<T> merged(Shape{1, d});
    std::vector<T> p(n);
    for (std::size_t hh = 0; hh < heads; ++hh) {
      const std::size_t off = hh * dh;
      for (std::size_t j = 0; j < n; ++j) {
        T s{0};
        for (std::size_t e = 0; e < dh; ++e) s += q[off + e] * keys[j * d + off + e];
        p[j] = s * inv_scale;
      }
      const T mx = *std::max_element(p.begin(), p.end());
      T total{0};
      for (auto& pj : p) {
        pj = std::exp(pj - mx);
        total += pj;
      }
      for (auto& pj : p) pj /= total;
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t e = 0; e < dh; ++e) merged[off + e] += p[j] * values[j * d + off + e];
    }
    x = add(x, attn.output(merged));
    x = add(x, block.mlp(block.norm2(x)));
  }
  cache.length = t + 1;
  auto out = norm(x);
  return std::vector<T>(out.data().begin(), out.data().end());
}

template <typename T>
void Head<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  out.push_back({prefix + ".position", position});
  for (std::size_t l = 0; l < blocks.size(); ++l) blocks[l].collect(prefix + ".blocks." + std::to_string(l), out);
  norm.collect(prefix + ".norm", out);
}

template class Head<float>;
template class Head<double>;

}  // namespace avt
