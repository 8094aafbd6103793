#pragma once

// Binary checkpoint layout (all integers little-endian):
//
//   "BQAC"                 4 bytes magic
//   version                u32
//   manifest length        u32
//   manifest               UTF-8 JSON: {model_kind, config, tensors: [{name, shape, dtype}]}
//   payload                IEEE-754 arrays in manifest order
//
// dtype is "f32" for single-precision models and "f64" otherwise.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bibleqa/errors.hpp"
#include "bibleqa/models.hpp"

namespace bqa {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointErrorKind { Truncated, BadMagic, UnsupportedVersion, BadManifest, LengthMismatch, ShapeMismatch };

class CheckpointError : public Error {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  CheckpointErrorKind kind() const { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelConfig config;
  ParameterSet params;
};

Checkpoint make_checkpoint(const PairModel& model);
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

inline std::string save_checkpoint(const PairModel& model) { return serialize_checkpoint(make_checkpoint(model)); }
PairModel load_checkpoint(std::string_view bytes);

Checkpoint read_checkpoint_file(const std::filesystem::path& path);

struct TransferReport {
  std::vector<std::string> copied;
  std::vector<std::string> extended;  // input dimension grew; new input rows zero
  std::vector<std::string> skipped;   // target parameters absent from the source
  bool all_copied() const { return extended.empty() && skipped.empty(); }
};

// Copies name-matched parameters from `source` into `target`. Input-layer
// matrices whose embedding dimension grew keep the source rows for the
// leading dimensions (and all recurrent rows) and zero the new ones.
TransferReport transfer_weights(const Checkpoint& source, PairModel& target);

}  // namespace bqa
