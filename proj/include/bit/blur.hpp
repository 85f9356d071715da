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

// Synthetic motion blur.
//
// Time is measured in sharp-frame intervals: sharp frame m is the scene at
// tau = m. A blur window starting at sharp frame s covers frames
// s .. s + frames_per_blur - 1; its continuous exposure is the interval
// [s - 1/2, s + frames_per_blur - 1/2]. Images are [3, H, W] tensors in [0, 1].
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bit/tensor.hpp"

namespace bit {

enum class BlurMode { discrete, continuous };

struct CaptureConfig {
  double blur_fps = 25.0;
  double sharp_fps = 500.0;
  double blur_exposure_ms = 18.0;
  double sharp_exposure_ms = 2.0;
  int frames_per_blur = 9;
  int deadtime_frames = 11;
  /// Sharp frames between consecutive blur windows; 0 means
  /// frames_per_blur + deadtime_frames.
  int window_stride = 0;
  BlurMode mode = BlurMode::continuous;
  /// Trapezoid intervals per exposure in continuous mode.
  int supersample_k = 72;
  /// Average in linear light (inverse gamma 2.2 first).
  bool gamma = false;

  /// 25 fps blur, 500 fps sharp, 18 ms exposure, 9 frames per blur, 11 in deadtime.
  static CaptureConfig rbi();
  /// 11-frame discrete averages of a 240 fps stream, no deadtime.
  static CaptureConfig adobe240();
  /// Throws ConfigError when the timing fields disagree.
  void validate() const;
  int stride() const { return window_stride > 0 ? window_stride : frames_per_blur + deadtime_frames; }
  /// t = m / (frames_per_blur - 1), m = 0 .. frames_per_blur - 1.
  std::vector<double> t_grid() const;
};

std::string to_string(BlurMode mode);
BlurMode blur_mode_from_string(const std::string& s);

struct Blob {
  double y = 0, x = 0;    // pixels at tau = 0
  double vy = 0, vx = 0;  // pixels per sharp frame
  double sigma = 3;
  double amplitude = 1;   // peak opacity in [0, 1]
  double color[3] = {1, 1, 1};
};

/// Procedural scene: a (possibly rotating, drifting) sinusoidal grating
/// background with Gaussian blobs composited on top. Values stay in [0, 1].
class AnalyticScene {
 public:
  double background[3] = {0.5, 0.5, 0.5};
  double grating_amplitude = 0.0;  // <= 0.5
  double grating_period = 16.0;    // pixels
  double grating_angle = 0.0;      // radians at tau = 0
  double grating_spin = 0.0;       // radians per sharp frame
  double grating_drift = 0.0;      // pixels per sharp frame along the wave vector
  std::vector<Blob> blobs;

  /// Sharp frame at continuous time tau, [3, h, w] in f64.
  Tensor render(double tau, std::int64_t h, std::int64_t w) const;

  /// Random mixture of grating and blobs suited to h x w crops.
  static AnalyticScene random(std::mt19937_64& rng, std::int64_t h, std::int64_t w);
  /// A single small bright dot crossing a dark background horizontally.
  static AnalyticScene moving_dot(double y, double x0, double speed, double sigma = 0.6);
};

struct SharpSequence {
  std::vector<Tensor> frames;
  double interval_ms = 2.0;
};

/// Renders frames tau = 0 .. count - 1.
SharpSequence render_sequence(const AnalyticScene& scene, std::int64_t count, std::int64_t h, std::int64_t w,
                              double interval_ms = 2.0);

/// Mean of frames [start, start + m_avg). RangeError on overrun.
Tensor synth_blur_discrete(const SharpSequence& seq, std::int64_t start, int m_avg, bool gamma = false);

/// Trapezoid integral of the scene over [tau0, tau0 + duration] using k
/// intervals, divided by duration. DomainError if duration <= 0 or k < 1.
Tensor synth_blur_continuous(const AnalyticScene& scene, double tau0, double duration, int k, std::int64_t h,
                             std::int64_t w, bool gamma = false);

/// Blurred frames with their in-exposure sharp targets.
struct BlurSequence {
  std::vector<Tensor> blur;
  std::vector<std::vector<Tensor>> targets;  // targets[i][m] at t_grid[m]
  std::vector<std::int64_t> window_start;    // first sharp frame of each blur window
  std::vector<double> t_grid;
};

struct BlurTriplet {
  Tensor prev, cur, nxt;
  std::vector<Tensor> targets;
  std::vector<double> t;
  std::int64_t index = 0;  // position of cur in its sequence
};

/// Number of blur windows that fit in `frames` sharp frames.
std::int64_t blur_window_count(std::int64_t frames, const CaptureConfig& cfg);

/// Discrete pipeline over an existing sharp sequence; deadtime frames are
/// skipped. RangeError if fewer than three windows fit.
BlurSequence synthesize(const SharpSequence& seq, const CaptureConfig& cfg);
/// Either pipeline straight from an analytic scene with n_blur windows.
BlurSequence synthesize(const AnalyticScene& scene, const CaptureConfig& cfg, std::int64_t n_blur, std::int64_t h,
                        std::int64_t w);

/// One triplet per blur frame; missing neighbours replicate the edge frame.
std::vector<BlurTriplet> build_triplets(const BlurSequence& seq);
std::vector<BlurTriplet> build_triplets(const SharpSequence& seq, const CaptureConfig& cfg);

Tensor flip_horizontal(const Tensor& img);
Tensor flip_vertical(const Tensor& img);
/// Counter-clockwise rotation by k * 90 degrees.
Tensor rotate90(const Tensor& img, int k);
/// RangeError if the window leaves the image.
Tensor crop(const Tensor& img, std::int64_t y, std::int64_t x, std::int64_t h, std::int64_t w);

struct AugmentPlan {
  bool hflip = false, vflip = false;
  int rot = 0;
  std::int64_t y = 0, x = 0;
};

/// Random flips, rotation and a crop_size crop, identical for all frames and
/// targets. crop_size <= 0 keeps the full frame. RangeError if the crop does
/// not fit.
BlurTriplet augment(const BlurTriplet& tr, std::uint64_t seed, std::int64_t crop_size);
AugmentPlan plan_augment(std::int64_t h, std::int64_t w, std::uint64_t seed, std::int64_t crop_size);
Tensor apply_augment(const Tensor& img, const AugmentPlan& plan, std::int64_t crop_size);

/// Seed for stream `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace bit
