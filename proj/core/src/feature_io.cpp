#include "avt/feature_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "avt/byte_io.hpp"
#include "avt/errors.hpp"

namespace avt {

namespace {

constexpr char kMagic[8] = {'A', 'V', 'T', 'F', 'E', 'A', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 40;

}  // namespace

std::vector<unsigned char> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_binary_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::F32:
      return 4;
    case DType::F64:
      return 8;
  }
  throw ConfigError("unknown dtype");
}

std::string to_string(DType dtype) { return dtype == DType::F32 ? "f32" : "f64"; }

std::vector<unsigned char> encode_features(const FeatureFile& file) {
  ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(file.dtype));
  w.u64(file.records.size());
  w.u32(file.length);
  w.u32(file.dim);
  w.u64(file.vocab_hash);
  const std::size_t values = static_cast<std::size_t>(file.length) * file.dim;
  for (const auto& r : file.records) {
    if (r.labels.size() != file.length || r.values.size() != values) {
      throw DimensionError("feature record " + std::to_string(r.id) + " does not match header length/dim");
    }
    w.u64(r.id);
    w.i32(r.target);
    for (int c : r.labels) w.i32(c);
    if (file.dtype == DType::F32) {
      for (double v : r.values) w.f32(static_cast<float>(v));
    } else {
      for (double v : r.values) w.f64(v);
    }
  }
  return std::move(w.buffer());
}

FeatureFile decode_features(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  char magic[8];
  r.bytes(magic, sizeof magic, "header");
  if (std::string(magic, 8) != std::string(kMagic, 8)) throw FormatError("bad feature-file magic", 0);
  const std::uint32_t version = r.u32("header");
  if (version != kVersion) throw FormatError("unsupported feature-file version " + std::to_string(version), 8);
  FeatureFile file;
  const std::uint32_t dtype = r.u32("header");
  if (dtype > 1) throw FormatError("unknown dtype code " + std::to_string(dtype), 12);
  file.dtype = static_cast<DType>(dtype);
  const std::uint64_t count = r.u64("header");
  file.length = r.u32("header");
  file.dim = r.u32("header");
  file.vocab_hash = r.u64("header");

  const std::size_t values = static_cast<std::size_t>(file.length) * file.dim;
  const std::size_t record_size = 12 + 4 * static_cast<std::size_t>(file.length) + values * dtype_size(file.dtype);
  const std::size_t payload = bytes.size() - kHeaderSize;
  if (record_size == 0 || payload % record_size != 0 || payload / record_size != count) {
    const std::size_t complete = record_size ? payload / record_size : 0;
    throw FormatError("header declares " + std::to_string(count) + " records but payload holds " +
                          std::to_string(complete) + (payload % record_size ? " and a partial record" : ""),
                      kHeaderSize + std::min<std::size_t>(complete, count) * record_size);
  }
  file.records.resize(count);
  for (auto& rec : file.records) {
    rec.id = r.u64("record");
    rec.target = r.i32("record");
    rec.labels.resize(file.length);
    for (int& c : rec.labels) c = r.i32("record");
    rec.values.resize(values);
    if (file.dtype == DType::F32) {
      for (double& v : rec.values) v = r.f32("record");
    } else {
      for (double& v : rec.values) v = r.f64("record");
    }
  }
  return file;
}

void write_features(const std::filesystem::path& path, const FeatureFile& file) {
  write_binary_file(path.string(), encode_features(file));
}

FeatureFile read_features(const std::filesystem::path& path) { return decode_features(read_binary_file(path.string())); }

}  // namespace avt
