// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gpd/netcore.hpp"

namespace gpd {

inline constexpr char kCheckpointMagic[4] = {'G', 'P', 'D', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Values stored next to the architecture in the leading metadata array.
struct CheckpointMeta {
  /// Number of intervals of the uniform time grid the model works on.
  std::int64_t schedule_steps = 16;
  /// 1 when the teacher behind this model passed the quality gate.
  std::int64_t quality_gate = 0;
  /// Training stage the weights come from (1 = teacher).
  std::int64_t stage = 1;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  VelocityModel model;
  CheckpointMeta meta;
};

/// Layout (all integers little-endian):
///   "GPD1" | u32 version | u32 array count |
///   per array: u32 name length, name bytes, u32 rank, u64 dims[rank],
///              f64 values (row-major)
/// Arrays are in lexicographic name order; the first is "__arch", a rank-1
/// array holding the architecture and CheckpointMeta fields.
std::string encode_checkpoint(const VelocityModel& model, const CheckpointMeta& meta);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const VelocityModel& model,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gpd
