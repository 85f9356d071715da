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

// JSON form of the run configuration:
//
//   {
//     "seed": 0, "phase": "base" | "tse", "log_every": 50,
//     "model": {"n_shared", "m_render", "heads", "channels", "window", "scales",
//               "ratio", "upscale", "mlp_ratio", "rstb_depth", "fuse_kernel",
//               "global_residual", "dtype": "f32" | "f64"},
//     "optim": {"lr_start", "lr_end", "beta1", "beta2", "weight_decay", "eps",
//               "steps", "tse_steps", "batch", "accumulate", "clip_norm",
//               "crop", "augment"},
//     "loss":  {"lambda", "dts"}
//   }
//
// Every key is optional when merging; absent keys keep their current value.
#pragma once

#include <filesystem>
#include <string>

#include "bit/training.hpp"

namespace bit {

std::string to_json(const BiTConfig& cfg, int indent = 2);
std::string to_json(const TrainConfig& cfg, int indent = 2);

/// Overrides fields of `cfg` with those present in `json_text`. Unknown keys
/// and type mismatches are ConfigErrors; the result is validated.
void merge_json(TrainConfig& cfg, const std::string& json_text);
void merge_json(BiTConfig& cfg, const std::string& json_text);

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

/// Named starting points: "tiny" (desk overfit settings) and "paper".
TrainConfig train_profile(const std::string& name);

std::string read_text(const std::filesystem::path& path);

}  // namespace bit
