// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/parameter_store.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace dlo::nn {

/// Binary checkpoint container, all integers and floats little-endian:
///
///   magic    "DLOCKPT\0"                      8 bytes
///   version  u32 (kCheckpointVersion)
///   hash     u64 configuration hash
///   kind     str                              (str = u32 byte count + UTF-8)
///   n_attr   u32, then n_attr x (str key, str value)
///   n_array  u32, then n_array x (str key, u64 count, count x f64)
///   n_entry  u32, then n_entry x (str name, u32 rank, rank x u64 dim, f64 payload)
///
/// Entries are written in lexicographic name order; load(save(p)) == p bit for bit.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParameterStore& store);
ParameterStore read_checkpoint(std::istream& in);

/// File variants write through a temporary and rename it into place.
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store);
ParameterStore load_checkpoint(const std::filesystem::path& path);

}  // namespace dlo::nn
