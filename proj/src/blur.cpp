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

#include "bit/blur.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bit {

namespace {

constexpr double kGamma = 2.2;

std::vector<double> pixels(const Tensor& img) {
  if (img.rank() != 3) throw DimensionError("expected a [C, H, W] image, got " + shape_str(img.shape()));
  return img.to_vector();
}

void require_frame_index(std::int64_t start, std::int64_t count, std::int64_t size) {
  if (start < 0 || start + count > size) {
    throw RangeError(str_cat("frames [", start, ", ", start + count, ") exceed a sequence of ", size));
  }
}

}  // namespace

CaptureConfig CaptureConfig::rbi() { return CaptureConfig{}; }

CaptureConfig CaptureConfig::adobe240() {
  CaptureConfig c;
  c.sharp_fps = 240.0;
  c.blur_fps = 240.0 / 11.0;
  c.blur_exposure_ms = 11.0 * 1000.0 / 240.0;
  c.sharp_exposure_ms = 1000.0 / 240.0;
  c.frames_per_blur = 11;
  c.deadtime_frames = 0;
  c.mode = BlurMode::discrete;
  c.supersample_k = 88;
  return c;
}

void CaptureConfig::validate() const {
  if (!(blur_fps > 0) || !(sharp_fps > 0)) throw ConfigError("frame rates must be positive");
  if (!(blur_exposure_ms > 0) || !(sharp_exposure_ms > 0)) throw ConfigError("exposures must be positive");
  if (frames_per_blur < 2) throw ConfigError("frames_per_blur must be at least 2");
  if (deadtime_frames < 0 || window_stride < 0) throw ConfigError("deadtime and stride must be non-negative");
  const double interval = 1000.0 / sharp_fps;
  if (frames_per_blur * interval > blur_exposure_ms + interval + 1e-9) {
    throw ConfigError(str_cat(frames_per_blur, " sharp frames of ", interval, " ms do not fit a ", blur_exposure_ms,
                              " ms exposure"));
  }
  const auto expected_dead = std::lround((1000.0 / blur_fps - blur_exposure_ms) * sharp_fps / 1000.0);
  if (expected_dead != deadtime_frames) {
    throw ConfigError(str_cat("deadtime_frames ", deadtime_frames, " disagrees with the timing, which implies ",
                              expected_dead));
  }
  if (mode == BlurMode::continuous && supersample_k < frames_per_blur) {
    throw ConfigError(str_cat("supersample_k ", supersample_k, " is below frames_per_blur ", frames_per_blur));
  }
}

std::vector<double> CaptureConfig::t_grid() const {
  std::vector<double> t(static_cast<std::size_t>(frames_per_blur));
  for (int m = 0; m < frames_per_blur; ++m) t[m] = static_cast<double>(m) / (frames_per_blur - 1);
  t.back() = 1.0;
  return t;
}

std::string to_string(BlurMode mode) { return mode == BlurMode::discrete ? "discrete" : "continuous"; }

BlurMode blur_mode_from_string(const std::string& s) {
  if (s == "discrete") return BlurMode::discrete;
  if (s == "continuous") return BlurMode::continuous;
  throw ConfigError("unknown blur mode '" + s + "'");
}

Tensor AnalyticScene::render(double tau, std::int64_t h, std::int64_t w) const {
  std::vector<double> out(static_cast<std::size_t>(3 * h * w));
  const auto plane = h * w;
  const double theta = grating_angle + grating_spin * tau;
  const double kx = std::cos(theta) * 2 * std::numbers::pi / grating_period;
  const double ky = std::sin(theta) * 2 * std::numbers::pi / grating_period;
  const double phase = -2 * std::numbers::pi * grating_drift * tau / grating_period;
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const double g = grating_amplitude != 0.0
                           ? grating_amplitude * std::sin(kx * (x - 0.5 * w) + ky * (y - 0.5 * h) + phase)
                           : 0.0;
      double px[3];
      for (int c = 0; c < 3; ++c) px[c] = background[c] + g;
      for (const auto& b : blobs) {
        const double dy = y - (b.y + b.vy * tau), dx = x - (b.x + b.vx * tau);
        const double a = b.amplitude * std::exp(-(dy * dy + dx * dx) / (2 * b.sigma * b.sigma));
        for (int c = 0; c < 3; ++c) px[c] = px[c] * (1 - a) + b.color[c] * a;
      }
      for (int c = 0; c < 3; ++c) out[c * plane + y * w + x] = px[c];
    }
  return Tensor::from_vector({3, h, w}, out, DType::f64);
}

AnalyticScene AnalyticScene::random(std::mt19937_64& rng, std::int64_t h, std::int64_t w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  AnalyticScene s;
  for (double& c : s.background) c = range(0.3, 0.7);
  s.grating_amplitude = range(0.05, 0.25);
  s.grating_period = range(8.0, 24.0);
  s.grating_angle = range(0.0, std::numbers::pi);
  s.grating_spin = range(-0.02, 0.02);
  s.grating_drift = range(-1.0, 1.0);
  const int n_blobs = 2 + static_cast<int>(rng() % 3);
  for (int i = 0; i < n_blobs; ++i) {
    Blob b;
    b.y = range(0.0, static_cast<double>(h));
    b.x = range(0.0, static_cast<double>(w));
    b.vy = range(-1.5, 1.5);
    b.vx = range(-1.5, 1.5);
    b.sigma = range(2.0, 6.0);
    b.amplitude = range(0.6, 1.0);
    for (double& c : b.color) c = u(rng);
    s.blobs.push_back(b);
  }
  return s;
}

AnalyticScene AnalyticScene::moving_dot(double y, double x0, double speed, double sigma) {
  AnalyticScene s;
  for (double& c : s.background) c = 0.0;
  Blob b;
  b.y = y;
  b.x = x0;
  b.vx = speed;
  b.sigma = sigma;
  s.blobs.push_back(b);
  return s;
}

SharpSequence render_sequence(const AnalyticScene& scene, std::int64_t count, std::int64_t h, std::int64_t w,
                              double interval_ms) {
  SharpSequence seq;
  seq.interval_ms = interval_ms;
  for (std::int64_t m = 0; m < count; ++m) seq.frames.push_back(scene.render(static_cast<double>(m), h, w));
  return seq;
}

Tensor synth_blur_discrete(const SharpSequence& seq, std::int64_t start, int m_avg, bool gamma) {
  if (m_avg < 1) throw RangeError("m_avg must be positive");
  require_frame_index(start, m_avg, static_cast<std::int64_t>(seq.frames.size()));
  const Tensor& first = seq.frames[static_cast<std::size_t>(start)];
  std::vector<double> acc(static_cast<std::size_t>(first.numel()), 0.0);
  for (int m = 0; m < m_avg; ++m) {
    const Tensor& f = seq.frames[static_cast<std::size_t>(start + m)];
    if (f.shape() != first.shape()) throw DimensionError("sharp frames differ in shape");
    const auto v = pixels(f);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gamma ? std::pow(std::max(v[i], 0.0), kGamma) : v[i];
  }
  for (auto& a : acc) {
    a /= m_avg;
    if (gamma) a = std::pow(a, 1.0 / kGamma);
  }
  return Tensor::from_vector(first.shape(), acc, first.dtype());
}

Tensor synth_blur_continuous(const AnalyticScene& scene, double tau0, double duration, int k, std::int64_t h,
                             std::int64_t w, bool gamma) {
  if (!(duration > 0)) throw DomainError(str_cat("exposure duration ", duration, " must be positive"));
  if (k < 1) throw DomainError(str_cat("supersample_k ", k, " must be positive"));
  std::vector<double> acc(static_cast<std::size_t>(3 * h * w), 0.0);
  const double dt = duration / k;
  for (int i = 0; i <= k; ++i) {
    const double weight = (i == 0 || i == k) ? 0.5 : 1.0;
    const auto v = scene.render(tau0 + i * dt, h, w).to_vector();
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += weight * (gamma ? std::pow(std::max(v[j], 0.0), kGamma) : v[j]);
  }
  for (auto& a : acc) {
    a /= k;
    if (gamma) a = std::pow(a, 1.0 / kGamma);
  }
  return Tensor::from_vector({3, h, w}, acc, DType::f64);
}

std::int64_t blur_window_count(std::int64_t frames, const CaptureConfig& cfg) {
  if (frames < cfg.frames_per_blur) return 0;
  return (frames - cfg.frames_per_blur) / cfg.stride() + 1;
}

BlurSequence synthesize(const SharpSequence& seq, const CaptureConfig& cfg) {
  cfg.validate();
  const auto n = blur_window_count(static_cast<std::int64_t>(seq.frames.size()), cfg);
  if (n < 3) {
    throw RangeError(str_cat(seq.frames.size(), " sharp frames give ", n, " blur windows; at least 3 are needed"));
  }
  BlurSequence out;
  out.t_grid = cfg.t_grid();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto start = i * cfg.stride();
    out.window_start.push_back(start);
    out.blur.push_back(synth_blur_discrete(seq, start, cfg.frames_per_blur, cfg.gamma));
    std::vector<Tensor> tg(seq.frames.begin() + start, seq.frames.begin() + start + cfg.frames_per_blur);
    out.targets.push_back(std::move(tg));
  }
  return out;
}

BlurSequence synthesize(const AnalyticScene& scene, const CaptureConfig& cfg, std::int64_t n_blur, std::int64_t h,
                        std::int64_t w) {
  cfg.validate();
  if (n_blur < 3) throw RangeError(str_cat("n_blur ", n_blur, " must be at least 3"));
  if (cfg.mode == BlurMode::discrete) {
    const auto frames = (n_blur - 1) * cfg.stride() + cfg.frames_per_blur;
    return synthesize(render_sequence(scene, frames, h, w, 1000.0 / cfg.sharp_fps), cfg);
  }
  BlurSequence out;
  out.t_grid = cfg.t_grid();
  const double duration = cfg.blur_exposure_ms * cfg.sharp_fps / 1000.0;
  for (std::int64_t i = 0; i < n_blur; ++i) {
    const auto start = i * cfg.stride();
    out.window_start.push_back(start);
    out.blur.push_back(synth_blur_continuous(scene, start - 0.5, duration, cfg.supersample_k, h, w, cfg.gamma));
    std::vector<Tensor> tg;
    for (int m = 0; m < cfg.frames_per_blur; ++m) tg.push_back(scene.render(static_cast<double>(start + m), h, w));
    out.targets.push_back(std::move(tg));
  }
  return out;
}

std::vector<BlurTriplet> build_triplets(const BlurSequence& seq) {
  const auto n = static_cast<std::int64_t>(seq.blur.size());
  std::vector<BlurTriplet> out;
  for (std::int64_t i = 0; i < n; ++i) {
    BlurTriplet tr;
    tr.prev = seq.blur[static_cast<std::size_t>(std::max<std::int64_t>(i - 1, 0))];
    tr.cur = seq.blur[static_cast<std::size_t>(i)];
    tr.nxt = seq.blur[static_cast<std::size_t>(std::min(i + 1, n - 1))];
    tr.targets = seq.targets[static_cast<std::size_t>(i)];
    tr.t = seq.t_grid;
    tr.index = i;
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<BlurTriplet> build_triplets(const SharpSequence& seq, const CaptureConfig& cfg) {
  return build_triplets(synthesize(seq, cfg));
}

namespace {

// Applies out(c, i, j) = in(c, src(i, j)) for an out_h x out_w result.
template <class F>
Tensor remap(const Tensor& img, std::int64_t out_h, std::int64_t out_w, F src) {
  const auto v = pixels(img);
  const auto C = img.dim(0), W = img.dim(2), H = img.dim(1);
  std::vector<double> out(static_cast<std::size_t>(C * out_h * out_w));
  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t i = 0; i < out_h; ++i)
      for (std::int64_t j = 0; j < out_w; ++j) {
        const auto [si, sj] = src(i, j);
        out[(c * out_h + i) * out_w + j] = v[(c * H + si) * W + sj];
      }
  return Tensor::from_vector({C, out_h, out_w}, out, img.dtype());
}

}  // namespace

Tensor flip_horizontal(const Tensor& img) {
  const auto W = img.dim(2);
  return remap(img, img.dim(1), W, [&](std::int64_t i, std::int64_t j) { return std::pair{i, W - 1 - j}; });
}

Tensor flip_vertical(const Tensor& img) {
  const auto H = img.dim(1);
  return remap(img, H, img.dim(2), [&](std::int64_t i, std::int64_t j) { return std::pair{H - 1 - i, j}; });
}

Tensor rotate90(const Tensor& img, int k) {
  k = ((k % 4) + 4) % 4;
  const auto H = img.dim(1), W = img.dim(2);
  switch (k) {
    case 1:
      return remap(img, W, H, [&](std::int64_t i, std::int64_t j) { return std::pair{j, W - 1 - i}; });
    case 2:
      return remap(img, H, W, [&](std::int64_t i, std::int64_t j) { return std::pair{H - 1 - i, W - 1 - j}; });
    case 3:
      return remap(img, W, H, [&](std::int64_t i, std::int64_t j) { return std::pair{H - 1 - j, i}; });
    default:
      return img;
  }
}

Tensor crop(const Tensor& img, std::int64_t y, std::int64_t x, std::int64_t h, std::int64_t w) {
  if (y < 0 || x < 0 || h < 1 || w < 1 || y + h > img.dim(1) || x + w > img.dim(2)) {
    throw RangeError(str_cat("crop ", h, "x", w, " at (", y, ", ", x, ") exceeds image ", shape_str(img.shape())));
  }
  return remap(img, h, w, [&](std::int64_t i, std::int64_t j) { return std::pair{y + i, x + j}; });
}

AugmentPlan plan_augment(std::int64_t h, std::int64_t w, std::uint64_t seed, std::int64_t crop_size) {
  std::mt19937_64 rng(seed);
  AugmentPlan p;
  p.hflip = rng() & 1;
  p.vflip = rng() & 1;
  p.rot = static_cast<int>(rng() % 4);
  const auto rh = p.rot % 2 ? w : h, rw = p.rot % 2 ? h : w;
  if (crop_size > 0) {
    if (crop_size > rh || crop_size > rw) {
      throw RangeError(str_cat("crop ", crop_size, " larger than frame ", h, "x", w));
    }
    p.y = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(rh - crop_size + 1));
    p.x = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(rw - crop_size + 1));
  }
  return p;
}

Tensor apply_augment(const Tensor& img, const AugmentPlan& plan, std::int64_t crop_size) {
  Tensor out = img;
  if (plan.hflip) out = flip_horizontal(out);
  if (plan.vflip) out = flip_vertical(out);
  out = rotate90(out, plan.rot);
  if (crop_size > 0) out = crop(out, plan.y, plan.x, crop_size, crop_size);
  return out;
}

BlurTriplet augment(const BlurTriplet& tr, std::uint64_t seed, std::int64_t crop_size) {
  const auto plan = plan_augment(tr.cur.dim(1), tr.cur.dim(2), seed, crop_size);
  BlurTriplet out;
  out.prev = apply_augment(tr.prev, plan, crop_size);
  out.cur = apply_augment(tr.cur, plan, crop_size);
  out.nxt = apply_augment(tr.nxt, plan, crop_size);
  for (const auto& t : tr.targets) out.targets.push_back(apply_augment(t, plan, crop_size));
  out.t = tr.t;
  out.index = tr.index;
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser over the combined words.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace bit
