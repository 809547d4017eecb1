#include "avt/attention.hpp"

#include <algorithm>
#include <cmath>

#include "avt/byte_io.hpp"
#include "avt/errors.hpp"
#include "avt/ops.hpp"
#include "avt/text_io.hpp"

namespace avt {

namespace {

template <typename T>
Tensor<T> as_batch(const AnticipativeModel<T>& model, const Tensor<T>& clip) {
  const std::size_t in = model.config().input_dim();
  Tensor<T> x = clip;
  if (clip.rank() == 2) x = reshape(clip, Shape{1, clip.dim(0), clip.dim(1)});
  if (x.rank() != 3 || x.dim(0) != 1 || x.dim(2) != in)
    throw DimensionError("clip must be [T, " + std::to_string(in) + "], got " + shape_str(clip.shape()));
  return x;
}

Matrix from_map(const AttentionMap& map, std::size_t b) {
  return {map.tokens, map.tokens, map.head_average(b)};
}

}  // namespace

Matrix attention_rollout(const std::vector<Matrix>& layers) {
  if (layers.empty()) throw DimensionError("attention rollout needs at least one layer");
  const std::size_t n = layers.front().rows;
  Matrix result;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix& a = layers[l];
    if (a.rows != a.cols || a.values.size() != a.rows * a.cols)
      throw DimensionError("attention layer " + std::to_string(l) + " is not square");
    if (a.rows != n) throw DimensionError("attention layers disagree on token count");
    Matrix mixed{n, n, std::vector<double>(n * n)};
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        mixed.values[r * n + c] = 0.5 * a.at(r, c) + (r == c ? 0.5 : 0.0);
        s += mixed.values[r * n + c];
      }
      for (std::size_t c = 0; c < n; ++c) mixed.values[r * n + c] /= s;
    }
    if (l == 0) {
      result = std::move(mixed);
      continue;
    }
    Matrix next{n, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < n; ++k) {
        const double m = mixed.values[r * n + k];
        for (std::size_t c = 0; c < n; ++c) next.values[r * n + c] += m * result.values[k * n + c];
      }
    result = std::move(next);
  }
  return result;
}

Matrix class_token_heatmap(const Matrix& rollout, std::size_t grid) {
  if (rollout.cols != grid * grid + 1) {
    throw DimensionError("rollout has " + std::to_string(rollout.cols) + " tokens, expected " +
                         std::to_string(grid * grid + 1));
  }
  Matrix out{grid, grid, std::vector<double>(grid * grid)};
  for (std::size_t p = 0; p < grid * grid; ++p) out.values[p] = rollout.at(0, p + 1);
  return out;
}

template <typename T>
Matrix head_temporal_attention(const AnticipativeModel<T>& model, const Tensor<T>& clip) {
  NoGradGuard no_grad;
  ForwardProbe probe;
  model.forward(as_batch(model, clip), &probe);
  if (probe.head.empty()) throw DimensionError("head has no attention layers");
  return from_map(probe.head.back(), 0);
}

std::vector<double> final_query_row(const Matrix& temporal) {
  if (temporal.rows == 0) return {};
  const std::size_t r = temporal.rows - 1;
  return {temporal.values.begin() + static_cast<std::ptrdiff_t>(r * temporal.cols),
          temporal.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * temporal.cols)};
}

template <typename T>
std::vector<Matrix> spatial_attention(const AnticipativeModel<T>& model, const Tensor<T>& clip) {
  if (!model.has_backbone())
    throw UnsupportedModeError("spatial attention needs a frame backbone; this model reads fixed features");
  NoGradGuard no_grad;
  ForwardProbe probe;
  const auto x = as_batch(model, clip);
  model.encode(x, &probe);
  const std::size_t frames = x.dim(1);
  const std::size_t grid = model.config().backbone.grid();
  std::vector<Matrix> out;
  for (std::size_t f = 0; f < frames; ++f) {
    std::vector<Matrix> layers;
    for (const auto& map : probe.backbone) layers.push_back(from_map(map, f));
    out.push_back(class_token_heatmap(attention_rollout(layers), grid));
  }
  return out;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out += (c ? "," : "") + format_double(m.at(r, c));
    out += '\n';
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) { write_text_file(path, matrix_to_csv(m)); }

std::vector<unsigned char> encode_pgm(const Matrix& m) {
  const std::string header = "P5\n" + std::to_string(m.cols) + " " + std::to_string(m.rows) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  double lo = 0.0, hi = 0.0;
  if (!m.values.empty()) {
    const auto [mn, mx] = std::minmax_element(m.values.begin(), m.values.end());
    lo = *mn;
    hi = *mx;
  }
  for (double v : m.values) {
    const double u = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    out.push_back(static_cast<unsigned char>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0)));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Matrix& m) { write_binary_file(path, encode_pgm(m)); }

template Matrix head_temporal_attention<float>(const AnticipativeModel<float>&, const Tensor<float>&);
template Matrix head_temporal_attention<double>(const AnticipativeModel<double>&, const Tensor<double>&);
template std::vector<Matrix> spatial_attention<float>(const AnticipativeModel<float>&, const Tensor<float>&);
template std::vector<Matrix> spatial_attention<double>(const AnticipativeModel<double>&, const Tensor<double>&);

}  // namespace avt
