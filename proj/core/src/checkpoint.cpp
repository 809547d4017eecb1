#include "avt/checkpoint.hpp"

#include <cstring>

#include <json.hpp>

#include "avt/byte_io.hpp"
#include "avt/errors.hpp"

namespace avt {

namespace {

constexpr char kMagic[8] = {'A', 'V', 'T', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kPreamble = 24;

using json = nlohmann::json;

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16) throw FormatError("bad hash '" + s + "' in checkpoint header", 24);
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw FormatError("bad hash '" + s + "' in checkpoint header", 24);
  }
  return v;
}

}  // namespace

void write_model_config(const ModelConfig& c, KeyValueConfig& out) {
  out.set("model.preset", c.preset);
  out.set("model.mode", to_string(c.mode));
  out.set("model.feature_dim", std::to_string(c.feature_dim));
  out.set("model.num_classes", std::to_string(c.num_classes));
  out.set("model.backbone.image_size", std::to_string(c.backbone.image_size));
  out.set("model.backbone.channels", std::to_string(c.backbone.channels));
  out.set("model.backbone.patch_size", std::to_string(c.backbone.patch_size));
  out.set("model.backbone.model_dim", std::to_string(c.backbone.model_dim));
  out.set("model.backbone.num_layers", std::to_string(c.backbone.num_layers));
  out.set("model.backbone.num_heads", std::to_string(c.backbone.num_heads));
  out.set("model.backbone.mlp_ratio", std::to_string(c.backbone.mlp_ratio));
  out.set("model.head.head_dim", std::to_string(c.head.head_dim));
  out.set("model.head.num_layers", std::to_string(c.head.num_layers));
  out.set("model.head.num_heads", std::to_string(c.head.num_heads));
  out.set("model.head.mlp_ratio", std::to_string(c.head.mlp_ratio));
  out.set("model.head.max_len", std::to_string(c.head.max_len));
}

ModelConfig read_model_config(const KeyValueConfig& in) {
  ModelConfig c;
  c.preset = in.require("model.preset");
  const auto& mode = in.require("model.mode");
  if (mode == to_string(BackboneMode::Frames)) c.mode = BackboneMode::Frames;
  else if (mode == to_string(BackboneMode::FixedFeatures)) c.mode = BackboneMode::FixedFeatures;
  else throw ConfigError("unknown backbone mode '" + mode + "'");
  const auto u = [&](const char* key) { return static_cast<std::size_t>(parse_uint64(in.require(key))); };
  c.feature_dim = u("model.feature_dim");
  c.num_classes = u("model.num_classes");
  c.backbone.image_size = u("model.backbone.image_size");
  c.backbone.channels = u("model.backbone.channels");
  c.backbone.patch_size = u("model.backbone.patch_size");
  c.backbone.model_dim = u("model.backbone.model_dim");
  c.backbone.num_layers = u("model.backbone.num_layers");
  c.backbone.num_heads = u("model.backbone.num_heads");
  c.backbone.mlp_ratio = u("model.backbone.mlp_ratio");
  c.head.head_dim = u("model.head.head_dim");
  c.head.num_layers = u("model.head.num_layers");
  c.head.num_heads = u("model.head.num_heads");
  c.head.mlp_ratio = u("model.head.mlp_ratio");
  c.head.max_len = u("model.head.max_len");
  c.validate();
  return c;
}

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  KeyValueConfig model;
  write_model_config(ckpt.model, model);
  json header;
  header["format"] = "avt-checkpoint";
  header["vocab_hash"] = hex64(ckpt.vocab_hash);
  json jm = json::object();
  for (const auto& k : model.keys()) jm[k] = *model.get(k);
  header["model"] = jm;
  json meta = json::object();
  for (const auto& k : ckpt.meta.keys()) meta[k] = *ckpt.meta.get(k);
  header["meta"] = meta;

  ByteWriter payload;
  json index = json::array();
  for (const auto& t : ckpt.tensors) {
    if (t.values.size() != shape_numel(t.shape))
      throw DimensionError("checkpoint tensor '" + t.name + "' has " + std::to_string(t.values.size()) +
                           " values for shape " + shape_str(t.shape));
    const std::size_t offset = payload.buffer().size();
    for (double v : t.values) {
      if (t.dtype == DType::F32) payload.f32(static_cast<float>(v));
      else payload.f64(v);
    }
    index.push_back({{"name", t.name},
                     {"dtype", to_string(t.dtype)},
                     {"shape", t.shape},
                     {"offset", offset},
                     {"nbytes", payload.buffer().size() - offset}});
  }
  header["tensors"] = index;

  const std::string text = header.dump(1);
  ByteWriter out;
  out.bytes(kMagic, sizeof kMagic);
  out.u32(kVersion);
  out.u32(0);
  out.u64(text.size());
  auto bytes = out.buffer();
  bytes.insert(bytes.end(), text.begin(), text.end());
  bytes.insert(bytes.end(), payload.buffer().begin(), payload.buffer().end());
  return bytes;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  ByteReader in(bytes.data(), bytes.size());
  char magic[8];
  in.bytes(magic, 8, "checkpoint magic");
  if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError("not a checkpoint (bad magic)", 0);
  const auto version = in.u32("checkpoint version");
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), 8);
  in.u32("checkpoint reserved field");
  const std::uint64_t hlen = in.u64("checkpoint header length");
  in.need(hlen, "checkpoint header");
  const std::string text(bytes.begin() + kPreamble, bytes.begin() + static_cast<std::ptrdiff_t>(kPreamble + hlen));
  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what(), kPreamble + e.byte);
  }

  Checkpoint ckpt;
  const std::size_t payload_start = kPreamble + hlen;
  const std::size_t payload_size = bytes.size() - payload_start;
  try {
    if (header.at("format") != "avt-checkpoint") throw FormatError("checkpoint header has wrong format tag", kPreamble);
    ckpt.vocab_hash = parse_hex64(header.at("vocab_hash").get<std::string>());
    KeyValueConfig model;
    for (const auto& [k, v] : header.at("model").items()) model.set(k, v.get<std::string>());
    ckpt.model = read_model_config(model);
    for (const auto& [k, v] : header.at("meta").items()) ckpt.meta.set(k, v.get<std::string>());

    std::size_t expected_end = 0;
    for (const auto& e : header.at("tensors")) {
      CheckpointTensor t;
      t.name = e.at("name").get<std::string>();
      const auto dtype = e.at("dtype").get<std::string>();
      if (dtype == "f32") t.dtype = DType::F32;
      else if (dtype == "f64") t.dtype = DType::F64;
      else throw FormatError("tensor '" + t.name + "' has unknown dtype " + dtype, kPreamble);
      t.shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto nbytes = e.at("nbytes").get<std::size_t>();
      const std::size_t n = shape_numel(t.shape);
      if (nbytes != n * dtype_size(t.dtype))
        throw FormatError("tensor '" + t.name + "' byte count does not match its shape", kPreamble);
      if (offset != expected_end || offset + nbytes > payload_size)
        throw FormatError("tensor '" + t.name + "' payload out of bounds", payload_start + offset);
      ByteReader pr(bytes.data() + payload_start + offset, nbytes);
      t.values.resize(n);
      for (std::size_t i = 0; i < n; ++i) t.values[i] = t.dtype == DType::F32 ? static_cast<double>(pr.f32("tensor payload")) : pr.f64("tensor payload");
      expected_end = offset + nbytes;
      ckpt.tensors.push_back(std::move(t));
    }
    if (expected_end != payload_size)
      throw FormatError("checkpoint has " + std::to_string(payload_size - expected_end) + " trailing bytes",
                        payload_start + expected_end);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what(), kPreamble);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto tmp = path.string() + ".tmp";
  write_binary_file(tmp, encode_checkpoint(ckpt));
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_binary_file(path)); }

namespace {

template <typename T>
constexpr DType dtype_of() {
  return sizeof(T) == 4 ? DType::F32 : DType::F64;
}

template <typename T>
CheckpointTensor snapshot(const std::string& name, const Tensor<T>& t) {
  return {name, dtype_of<T>(), t.shape(), std::vector<double>(t.data().begin(), t.data().end())};
}

template <typename T>
void copy_into(const Checkpoint& ckpt, const std::string& name, Tensor<T>& t) {
  const auto* stored = ckpt.find(name);
  if (!stored) throw FormatError("checkpoint has no tensor '" + name + "'", 0);
  if (stored->shape != t.shape())
    throw DimensionError("tensor '" + name + "' is " + shape_str(stored->shape) + " in the checkpoint but " +
                         shape_str(t.shape()) + " in the model");
  auto dst = t.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(stored->values[i]);
}

}  // namespace

template <typename T>
Checkpoint make_checkpoint(const AnticipativeModel<T>& model, std::uint64_t vocab_hash, const SgdMomentum<T>* optimizer) {
  Checkpoint ckpt;
  ckpt.model = model.config();
  ckpt.vocab_hash = vocab_hash;
  for (const auto& p : model.parameters()) ckpt.tensors.push_back(snapshot(p.name, p.tensor));
  if (optimizer) {
    const auto& params = optimizer->parameters();
    const auto& buffers = optimizer->momentum_buffers();
    for (std::size_t i = 0; i < params.size(); ++i)
      ckpt.tensors.push_back(snapshot("optim.momentum." + params[i].name, buffers[i]));
  }
  return ckpt;
}

template <typename T>
void restore_model(const Checkpoint& ckpt, AnticipativeModel<T>& model) {
  for (auto p : model.parameters()) copy_into(ckpt, p.name, p.tensor);
}

template <typename T>
void restore_optimizer(const Checkpoint& ckpt, SgdMomentum<T>& optimizer) {
  const auto& params = optimizer.parameters();
  auto& buffers = optimizer.momentum_buffers();
  for (std::size_t i = 0; i < params.size(); ++i) copy_into(ckpt, "optim.momentum." + params[i].name, buffers[i]);
}

template Checkpoint make_checkpoint<float>(const AnticipativeModel<float>&, std::uint64_t, const SgdMomentum<float>*);
template Checkpoint make_checkpoint<double>(const AnticipativeModel<double>&, std::uint64_t, const SgdMomentum<double>*);
template void restore_model<float>(const Checkpoint&, AnticipativeModel<float>&);
template void restore_model<double>(const Checkpoint&, AnticipativeModel<double>&);
template void restore_optimizer<float>(const Checkpoint&, SgdMomentum<float>&);
template void restore_optimizer<double>(const Checkpoint&, SgdMomentum<double>&);

}  // namespace avt
