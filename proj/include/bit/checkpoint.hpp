// Copyright 2026 The bit-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>

#include "bit/layers.hpp"

// Little-endian parameter container:
//
//   "BITK"  magic (4 bytes)
//   u32     version (currently 1)
//   repeated until end of file:
//     u32   name length, followed by that many UTF-8 bytes
//     u32   rank, followed by rank u64 extents
//     u8    dtype tag (0 = f32, 1 = f64)
//     raw   numel values of that dtype
namespace bit {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const ParamList& params);
void save_checkpoint(const std::filesystem::path& path, const ParamList& params);

/// Throws ConfigError on bad magic, unknown version or truncated data.
ParamList read_checkpoint(std::istream& is);
ParamList load_checkpoint(const std::filesystem::path& path);

/// Copies values from `src` into the same-named tensors of `dst`, converting
/// dtype if needed. With `strict`, every name in `dst` must be present.
/// Returns the number of tensors copied.
std::size_t assign_params(const ParamList& dst, const ParamList& src, bool strict);

}  // namespace bit
