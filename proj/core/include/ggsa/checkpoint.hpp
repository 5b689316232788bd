#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ggsa/config.hpp"
#include "ggsa/params.hpp"

namespace ggsa {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[9] = "GGSACKPT";

// Binary little-endian layout: 8-byte magic, u32 version, u64 config length,
// canonical config text, then one record per parameter (u32 name length,
// name, u32 rank, u64 extents, raw payload in the config precision) and a
// trailing CRC32 of every preceding byte.
template <typename T>
std::string encode_checkpoint(const ModelConfig& cfg, const EncoderParams<T>& params);

struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::string payload;  // raw little-endian bytes
};

struct Checkpoint {
  ModelConfig config;
  std::vector<CheckpointRecord> records;
};

// Validation order: magic (FormatError), version (VersionError), record
// structure (TruncatedError), checksum (ChecksumError), then config text and
// record consistency (FormatError).
Checkpoint decode_checkpoint(const std::string& bytes);

// Builds parameters from a decoded checkpoint. When `requested` is given, any
// difference in an architecture field or precision raises ConfigConflictError.
template <typename T>
EncoderParams<T> checkpoint_params(const Checkpoint& ckpt, const ModelConfig* requested = nullptr);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg, const EncoderParams<T>& params);

Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace ggsa
