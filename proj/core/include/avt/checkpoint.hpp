#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avt/config.hpp"
#include "avt/feature_io.hpp"
#include "avt/model.hpp"
#include "avt/optim.hpp"
#include "avt/text_io.hpp"

namespace avt {

struct CheckpointTensor {
  std::string name;
  DType dtype = DType::F32;
  Shape shape;
  std::vector<double> values;  // exact copy of the stored payload
};

// Layout (little-endian):
//   0   char[8]  magic "AVTCKPT1"
//   8   u32      version (1)
//   12  u32      reserved (0)
//   16  u64      header length H
//   24  H bytes  JSON header: model config, vocabulary hash, metadata and a
//                tensor index (name, dtype, shape, offset, nbytes)
//   24+H         payloads, offsets relative to this point
// See docs/formats.md.
struct Checkpoint {
  ModelConfig model;
  std::uint64_t vocab_hash = 0;
  KeyValueConfig meta;  // free-form run state: epoch, step, mode, seed, ...
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);
// Writes through a temporary file and renames, so an existing checkpoint is
// never left half-written.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Snapshot of model parameters and, when given, optimizer momentum buffers
// (stored as "optim.momentum.<parameter>").
template <typename T>
Checkpoint make_checkpoint(const AnticipativeModel<T>& model, std::uint64_t vocab_hash,
                           const SgdMomentum<T>* optimizer = nullptr);

// Copies stored values into an already constructed model of the same config.
template <typename T>
void restore_model(const Checkpoint& ckpt, AnticipativeModel<T>& model);
template <typename T>
void restore_optimizer(const Checkpoint& ckpt, SgdMomentum<T>& optimizer);

// Model config as flat key-value fields (prefix "model.").
void write_model_config(const ModelConfig& config, KeyValueConfig& out);
ModelConfig read_model_config(const KeyValueConfig& in);

}  // namespace avt
