#include "avt/backbone.hpp"

#include "avt/errors.hpp"
#include "avt/ops.hpp"

namespace avt {

namespace {

void check_divisible(std::size_t height, std::size_t width, std::size_t patch_size) {
  if (patch_size == 0 || height % patch_size != 0 || width % patch_size != 0) {
    throw DimensionError("frame " + std::to_string(height) + "x" + std::to_string(width) +
                         " is not divisible into " + std::to_string(patch_size) + "x" +
                         std::to_string(patch_size) + " patches");
  }
}

}  // namespace

std::vector<std::size_t> patch_index(std::size_t height, std::size_t width, std::size_t channels,
                                     std::size_t patch_size) {
  check_divisible(height, width, patch_size);
  std::vector<std::size_t> index;
  index.reserve(height * width * channels);
  for (std::size_t gy = 0; gy < height / patch_size; ++gy)
    for (std::size_t gx = 0; gx < width / patch_size; ++gx)
      for (std::size_t py = 0; py < patch_size; ++py)
        for (std::size_t px = 0; px < patch_size; ++px)
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t y = gy * patch_size + py;
            const std::size_t x = gx * patch_size + px;
            index.push_back((y * width + x) * channels + c);
          }
  return index;
}

std::vector<std::vector<float>> patchify(const Frame& frame, std::size_t patch_size) {
  if (frame.pixels.size() != frame.height * frame.width * frame.channels) {
    throw DimensionError("frame pixel buffer does not match its dimensions");
  }
  const auto index = patch_index(frame.height, frame.width, frame.channels, patch_size);
  const std::size_t patch_len = patch_size * patch_size * frame.channels;
  std::vector<std::vector<float>> patches(index.size() / patch_len);
  for (std::size_t p = 0; p < patches.size(); ++p) {
    patches[p].resize(patch_len);
    for (std::size_t j = 0; j < patch_len; ++j) patches[p][j] = frame.pixels[index[p * patch_len + j]];
  }
  return patches;
}

Frame unpatchify(const std::vector<std::vector<float>>& patches, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch_size) {
  const auto index = patch_index(height, width, channels, patch_size);
  const std::size_t patch_len = patch_size * patch_size * channels;
  if (patches.size() * patch_len != index.size()) throw DimensionError("patch count does not match frame size");
  Frame frame{height, width, channels, std::vector<float>(index.size())};
  for (std::size_t p = 0; p < patches.size(); ++p) {
    if (patches[p].size() != patch_len) throw DimensionError("patch has wrong length");
    for (std::size_t j = 0; j < patch_len; ++j) frame.pixels[index[p * patch_len + j]] = patches[p][j];
  }
  return frame;
}

template <typename T>
Backbone<T>::Backbone(const BackboneConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t d = config_.model_dim;
  patch_embed = Linear<T>(config_.patch_dim(), d, rng);
  class_token = trunc_normal<T>(Shape{1, d}, 0.02, rng);
  class_token.set_requires_grad(true);
  position = trunc_normal<T>(Shape{config_.tokens(), d}, 0.02, rng);
  position.set_requires_grad(true);
  for (std::size_t l = 0; l < config_.num_layers; ++l)
    blocks.emplace_back(d, config_.num_heads, config_.mlp_ratio, rng);
  norm = LayerNorm<T>(d);
  patch_index_ = patch_index(config_.image_size, config_.image_size, config_.channels, config_.patch_size);
}

template <typename T>
Tensor<T> Backbone<T>::encode(const Tensor<T>& frames, AttentionTrace* trace) const {
  if (frames.rank() != 2 || frames.dim(1) != config_.pixels()) {
    throw DimensionError("backbone expects [frames, " + std::to_string(config_.pixels()) + "], got " +
                         shape_str(frames.shape()));
  }
  const std::size_t f = frames.dim(0);
  const std::size_t np = config_.num_patches();
  const std::size_t d = config_.model_dim;
  const std::size_t pixels = config_.pixels();

  std::vector<std::size_t> index(f * pixels);
  for (std::size_t i = 0; i < f; ++i)
    for (std::size_t j = 0; j < pixels; ++j) index[i * pixels + j] = i * pixels + patch_index_[j];
  auto patches = gather(frames, index, Shape{f * np, config_.patch_dim()});

  auto tokens = reshape(patch_embed(patches), Shape{f, np, d});
  tokens = concat(repeat(class_token, f), tokens, 1);
  tokens = add(tokens, position);
  for (const auto& block : blocks) tokens = block(tokens, nullptr, trace);

  std::vector<std::size_t> cls_rows(f);
  for (std::size_t i = 0; i < f; ++i) cls_rows[i] = i * config_.tokens();
  auto cls = index_rows(reshape(tokens, Shape{f * config_.tokens(), d}), cls_rows);
  return apply_final_norm ? norm(cls) : cls;
}

template <typename T>
std::vector<T> Backbone<T>::encode_frame(const Frame& frame) const {
  const auto z = encode_clip(std::span<const Frame>(&frame, 1));
  return std::vector<T>(z.data().begin(), z.data().end());
}

template <typename T>
Tensor<T> Backbone<T>::encode_clip(std::span<const Frame> frames) const {
  if (frames.empty()) throw DimensionError("cannot encode an empty clip");
  const std::size_t pixels = config_.pixels();
  std::vector<T> flat;
  flat.reserve(frames.size() * pixels);
  for (const Frame& fr : frames) {
    if (fr.height != config_.image_size || fr.width != config_.image_size || fr.channels != config_.channels ||
        fr.pixels.size() != pixels) {
      throw DimensionError("frame " + std::to_string(fr.height) + "x" + std::to_string(fr.width) + "x" +
                           std::to_string(fr.channels) + " does not match backbone input " +
                           std::to_string(config_.image_size) + "x" + std::to_string(config_.image_size) +
                           "x" + std::to_string(config_.channels));
    }
    flat.insert(flat.end(), fr.pixels.begin(), fr.pixels.end());
  }
  return encode(Tensor<T>(Shape{frames.size(), pixels}, std::move(flat)));
}

template <typename T>
void Backbone<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  patch_embed.collect(prefix + ".patch_embed", out);
  out.push_back({prefix + ".class_token", class_token});
  out.push_back({prefix + ".position", position});
  for (std::size_t l = 0; l < blocks.size(); ++l) blocks[l].collect(prefix + ".blocks." + std::to_string(l), out);
  norm.collect(prefix + ".norm", out);
}

template class Backbone<float>;
template class Backbone<double>;

}  // namespace avt
