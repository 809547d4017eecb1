#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace avt {

enum class DType : std::uint32_t { F32 = 0, F64 = 1 };

std::size_t dtype_size(DType dtype);
std::string to_string(DType dtype);

// One sequence: an anticipation sample (target >= 0) or a whole video
// timeline (target = -1).
struct FeatureRecord {
  std::uint64_t id = 0;
  int target = -1;
  std::vector<int> labels;     // [length]
  std::vector<double> values;  // [length * dim]
};

struct FeatureFile {
  DType dtype = DType::F32;
  std::uint32_t length = 0;
  std::uint32_t dim = 0;
  std::uint64_t vocab_hash = 0;
  std::vector<FeatureRecord> records;
};

// Binary layout, all integers little-endian:
//   0   char[8]  magic "AVTFEAT\0"
//   8   u32      version (1)
//   12  u32      dtype (0 = f32, 1 = f64)
//   16  u64      record count
//   24  u32      length (frames per record)
//   28  u32      dim (values per frame)
//   32  u64      vocabulary hash
//   40  records: u64 id, i32 target, i32 labels[length], dtype values[length * dim]
// The file size must equal 40 + count * record_size exactly.
void write_features(const std::filesystem::path& path, const FeatureFile& file);
FeatureFile read_features(const std::filesystem::path& path);

std::vector<unsigned char> encode_features(const FeatureFile& file);
FeatureFile decode_features(const std::vector<unsigned char>& bytes);

}  // namespace avt
