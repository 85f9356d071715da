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

#include "bit/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "json.hpp"

namespace bit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw ConfigError(std::string("libpng: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

std::string frame_name(std::int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld.png", static_cast<long long>(i));
  return buf;
}

}  // namespace

void write_png(const fs::path& path, const Tensor& img, int bit_depth) {
  if (img.rank() != 3 || img.dim(0) != 3) throw DimensionError("write_png expects [3, H, W], got " + shape_str(img.shape()));
  if (bit_depth != 8 && bit_depth != 16) throw ConfigError(str_cat("unsupported PNG bit depth ", bit_depth));
  const auto H = img.dim(1), W = img.dim(2);
  const auto v = img.to_vector();
  const double maxv = bit_depth == 8 ? 255.0 : 65535.0;
  const int bytes = bit_depth / 8;
  std::vector<png_byte> rows(static_cast<std::size_t>(H * W * 3 * bytes));
  for (std::int64_t y = 0; y < H; ++y)
    for (std::int64_t x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v[(c * H + y) * W + x], 0.0, 1.0) * maxv));
        png_byte* p = &rows[static_cast<std::size_t>(((y * W + x) * 3 + c) * bytes)];
        if (bytes == 1) {
          p[0] = static_cast<png_byte>(q);
        } else {
          p[0] = static_cast<png_byte>(q >> 8);
          p[1] = static_cast<png_byte>(q & 0xFF);
        }
      }

  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw ConfigError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), bit_depth, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
    // No timestamp chunk, so identical images produce identical files.
    png_write_info(png, info);
    for (std::int64_t y = 0; y < H; ++y) png_write_row(png, &rows[static_cast<std::size_t>(y * W * 3 * bytes)]);
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

Tensor read_png(const fs::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ConfigError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  std::vector<float> out;
  png_uint_32 W = 0, H = 0;
  try {
    png_init_io(png, f.get());
    png_read_info(png, info);
    W = png_get_image_width(png, info);
    H = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
      if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      png_set_gray_to_rgb(png);
    }
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const int out_depth = png_get_bit_depth(png, info);
    const auto rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> row(rowbytes);
    out.resize(static_cast<std::size_t>(3) * H * W);
    const double maxv = out_depth == 16 ? 65535.0 : 255.0;
    for (png_uint_32 y = 0; y < H; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (png_uint_32 x = 0; x < W; ++x)
        for (int c = 0; c < 3; ++c) {
          const std::size_t i = (static_cast<std::size_t>(x) * 3 + c) * (out_depth == 16 ? 2 : 1);
          const unsigned q = out_depth == 16 ? (row[i] << 8 | row[i + 1]) : row[i];
          out[(static_cast<std::size_t>(c) * H + y) * W + x] = static_cast<float>(q / maxv);
        }
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return Tensor::from_data<float>({3, static_cast<std::int64_t>(H), static_cast<std::int64_t>(W)}, std::move(out));
}

Tensor quantize(const Tensor& img, int bit_depth) {
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  auto v = img.to_vector();
  for (auto& x : v) x = static_cast<float>(std::lround(std::clamp(x, 0.0, 1.0) * maxv) / maxv);
  return Tensor::from_vector(img.shape(), v, DType::f32);
}

namespace {

json capture_to_json(const CaptureConfig& c) {
  return {{"blur_fps", c.blur_fps},
          {"sharp_fps", c.sharp_fps},
          {"blur_exposure_ms", c.blur_exposure_ms},
          {"sharp_exposure_ms", c.sharp_exposure_ms},
          {"frames_per_blur", c.frames_per_blur},
          {"deadtime_frames", c.deadtime_frames},
          {"window_stride", c.window_stride},
          {"mode", to_string(c.mode)},
          {"supersample_k", c.supersample_k},
          {"gamma", c.gamma}};
}

CaptureConfig capture_from_json(const json& j) {
  CaptureConfig c;
  c.blur_fps = j.at("blur_fps");
  c.sharp_fps = j.at("sharp_fps");
  c.blur_exposure_ms = j.at("blur_exposure_ms");
  c.sharp_exposure_ms = j.at("sharp_exposure_ms");
  c.frames_per_blur = j.at("frames_per_blur");
  c.deadtime_frames = j.at("deadtime_frames");
  c.window_stride = j.value("window_stride", 0);
  c.mode = blur_mode_from_string(j.at("mode"));
  c.supersample_k = j.value("supersample_k", c.supersample_k);
  c.gamma = j.value("gamma", false);
  return c;
}

}  // namespace

void save_sequence(const fs::path& dir, const BlurSequence& seq, const CaptureConfig& cfg, int bit_depth) {
  fs::create_directories(dir / "blur");
  fs::create_directories(dir / "sharp");
  const auto fpb = static_cast<std::int64_t>(seq.t_grid.size());
  for (std::size_t i = 0; i < seq.blur.size(); ++i) {
    write_png(dir / "blur" / frame_name(static_cast<std::int64_t>(i)), seq.blur[i], bit_depth);
    for (std::size_t m = 0; m < seq.targets[i].size(); ++m) {
      write_png(dir / "sharp" / frame_name(static_cast<std::int64_t>(i) * fpb + static_cast<std::int64_t>(m)),
                seq.targets[i][m], bit_depth);
    }
  }
  json meta{{"capture", capture_to_json(cfg)},
            {"t_grid", seq.t_grid},
            {"window_start", seq.window_start},
            {"blur_count", seq.blur.size()},
            {"height", seq.blur.empty() ? 0 : seq.blur[0].dim(1)},
            {"width", seq.blur.empty() ? 0 : seq.blur[0].dim(2)},
            {"bit_depth", bit_depth}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

StoredSequence load_sequence(const fs::path& dir) {
  std::ifstream is(dir / "meta.json");
  if (!is) throw ConfigError("missing " + (dir / "meta.json").string());
  json meta;
  try {
    meta = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(str_cat("bad meta.json in ", dir.string(), ": ", e.what()));
  }
  StoredSequence s;
  s.id = dir.filename().string();
  try {
    s.capture = capture_from_json(meta.at("capture"));
    s.frames.t_grid = meta.at("t_grid").get<std::vector<double>>();
    s.frames.window_start = meta.at("window_start").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(str_cat("bad meta.json in ", dir.string(), ": ", e.what()));
  }
  const auto n = meta.at("blur_count").get<std::int64_t>();
  const auto fpb = static_cast<std::int64_t>(s.frames.t_grid.size());
  for (std::int64_t i = 0; i < n; ++i) {
    s.frames.blur.push_back(read_png(dir / "blur" / frame_name(i)));
    std::vector<Tensor> tg;
    for (std::int64_t m = 0; m < fpb; ++m) tg.push_back(read_png(dir / "sharp" / frame_name(i * fpb + m)));
    s.frames.targets.push_back(std::move(tg));
  }
  return s;
}

std::vector<StoredSequence> load_split(const fs::path& root, const std::string& split) {
  const auto dir = root / split;
  if (!fs::is_directory(dir)) throw ConfigError("no dataset split at " + dir.string());
  std::vector<fs::path> seqs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) seqs.push_back(e.path());
  std::sort(seqs.begin(), seqs.end());
  std::vector<StoredSequence> out;
  for (const auto& p : seqs) out.push_back(load_sequence(p));
  return out;
}

AnalyticScene scene_for(const SynthOptions& opts, std::int64_t index) {
  std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(index)));
  return AnalyticScene::random(rng, opts.height, opts.width);
}

std::vector<BlurSequence> synth_sequences(const SynthOptions& opts) {
  opts.capture.validate();
  std::vector<BlurSequence> out;
  for (std::int64_t s = 0; s < opts.scenes; ++s) {
    BlurSequence seq = synthesize(scene_for(opts, s), opts.capture, opts.blur_per_scene, opts.height, opts.width);
    for (auto& b : seq.blur) b = quantize(b, opts.bit_depth);
    for (auto& tg : seq.targets)
      for (auto& t : tg) t = quantize(t, opts.bit_depth);
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<BlurTriplet> centre_triplets(const std::vector<BlurSequence>& seqs) {
  std::vector<BlurTriplet> out;
  for (const auto& s : seqs) {
    auto all = build_triplets(s);
    out.push_back(std::move(all[all.size() / 2]));
  }
  return out;
}

void write_dataset(const fs::path& root, const std::string& split, const SynthOptions& opts) {
  const auto seqs = synth_sequences(opts);
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%04zu", s);
    save_sequence(root / split / id, seqs[s], opts.capture, opts.bit_depth);
  }
}

}  // namespace bit
