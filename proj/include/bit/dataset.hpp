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

// PNG images and the on-disk dataset layout:
//
//   root/{split}/{seq_id}/blur/000000.png ...        one per blur frame
//   root/{split}/{seq_id}/sharp/000000.png ...       frames_per_blur per blur frame,
//                                                    numbered blur_index * frames_per_blur + m
//   root/{split}/{seq_id}/meta.json                  capture config, t grid, window starts
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bit/blur.hpp"

namespace bit {

/// Writes a [3, H, W] image in [0, 1] (clamped) as an 8- or 16-bit RGB PNG.
void write_png(const std::filesystem::path& path, const Tensor& img, int bit_depth = 8);
/// Reads an RGB(A)/gray PNG as a [3, H, W] f32 image in [0, 1].
Tensor read_png(const std::filesystem::path& path);

/// Same rounding as a write_png / read_png round trip.
Tensor quantize(const Tensor& img, int bit_depth = 8);

struct StoredSequence {
  std::string id;
  BlurSequence frames;
  CaptureConfig capture;
};

void save_sequence(const std::filesystem::path& dir, const BlurSequence& seq, const CaptureConfig& cfg,
                   int bit_depth = 8);
StoredSequence load_sequence(const std::filesystem::path& dir);
/// Every sequence under root/split, ordered by id.
std::vector<StoredSequence> load_split(const std::filesystem::path& root, const std::string& split);

struct SynthOptions {
  CaptureConfig capture = CaptureConfig::rbi();
  std::int64_t scenes = 4;
  std::int64_t blur_per_scene = 3;
  std::int64_t height = 64;
  std::int64_t width = 64;
  std::uint64_t seed = 0;
  int bit_depth = 8;
};

/// Random analytic scene number `index` of a run.
AnalyticScene scene_for(const SynthOptions& opts, std::int64_t index);
/// In-memory sequences, one per scene, quantized to bit_depth.
std::vector<BlurSequence> synth_sequences(const SynthOptions& opts);
/// The middle triplet of each sequence (real neighbours on both sides when
/// the sequence has at least three blur frames).
std::vector<BlurTriplet> centre_triplets(const std::vector<BlurSequence>& seqs);
/// Writes synth_sequences to root/split/scene_XXXX.
void write_dataset(const std::filesystem::path& root, const std::string& split, const SynthOptions& opts);

}  // namespace bit
