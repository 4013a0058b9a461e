#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "adarank/model/model.hpp"

namespace adarank::train {

/// Unreadable, corrupt or inconsistent checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A model plus the free-form run config it was trained under.
struct Checkpoint {
  model::Model model;
  /// key=value lines echoed verbatim into the file.
  std::string run_config;
};

/// Layout, all integers u32 little endian:
///   "ADRK" version
///   config_len config_text            ranker and adaptor keys, then run config
///   section_count                     1 (theta) or 2 (theta, phi)
///   per section: name_len name tensor_count
///     per tensor: name_len name rows cols rows*cols float32 values
///     crc32 of the section bytes from name_len on
std::string serialize(const Checkpoint& checkpoint);
/// Checks magic, version, checksums and that every tensor matches the
/// shapes the echoed config implies. Throws CheckpointError.
Checkpoint deserialize(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// crc32 of a parameter set's serialized section.
std::uint32_t section_checksum(const model::ParameterSet<float>& params, const std::string& name);

}  // namespace adarank::train
