#pragma once

#include <cstdint>
#include <string>

#include "phn/networks.hpp"

#include <nlohmann/json_fwd.hpp>

namespace phn {

/// Checkpoint container: a magic line, a little-endian uint64 header length,
/// a JSON header (format version, spec echo, seed, step count, layout), then
/// the raw parameter arrays as little-endian float64 in layout order.
inline constexpr char kCheckpointMagic[] = "PHNCKPT1\n";
inline constexpr int kCheckpointVersion = 1;

struct CheckpointHeader {
  int format_version = kCheckpointVersion;
  std::string kind;  // "phn" or "baseline"
  uint64_t seed = 0;
  uint64_t steps = 0;
  std::string spec_json;  // experiment/spec echo, serialized JSON object
};

struct Checkpoint {
  CheckpointHeader header;
  ParamVector params;
};

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const ParamVector& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace phn
