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

#include "bit/network.hpp"

#include <array>
#include <cmath>

namespace bit {

BiTConfig BiTConfig::paper() { return BiTConfig{}; }

BiTConfig BiTConfig::tiny() {
  BiTConfig c;
  c.n_shared = 1;
  c.m_render = 1;
  c.heads = 3;
  c.channels = 24;
  c.window = 4;
  return c;
}

void BiTConfig::validate() const {
  if (n_shared < 0 || m_render < 0) throw ConfigError("block counts must be non-negative");
  if (heads < 1 || channels < 1) throw ConfigError("heads and channels must be positive");
  if (channels % heads != 0) throw ConfigError(str_cat("channels ", channels, " not divisible by heads ", heads));
  if (channels % 3 != 0) throw ConfigError(str_cat("channels ", channels, " not divisible by the 3 input frames"));
  if (window < 1) throw ConfigError("window must be positive");
  if (scales < 1 || ratio < 1) throw ConfigError("scales and ratio must be positive");
  if (upscale != 4) throw ConfigError(str_cat("upscale ", upscale, " must equal the shallow stride product 4"));
  if (mlp_ratio <= 0) throw ConfigError("mlp_ratio must be positive");
  if (rstb_depth < 1) throw ConfigError("rstb_depth must be positive");
  if (fuse_kernel < 1 || fuse_kernel % 2 == 0) throw ConfigError("fuse_kernel must be odd");
}

MsRstbParams::MsRstbParams(const BiTConfig& cfg, Rng& rng)
    : rstb(cfg.channels, cfg.heads, cfg.window, cfg.mlp_ratio, cfg.dtype, rng, cfg.rstb_depth),
      fuse(cfg.channels * cfg.scales, cfg.channels, cfg.fuse_kernel, 1, cfg.dtype, rng),
      scales(cfg.scales),
      ratio(cfg.ratio) {}

void MsRstbParams::collect(const std::string& prefix, ParamList& out) const {
  rstb.collect(prefix, out);
  fuse.collect(prefix + ".fuse", out);
}

std::vector<std::pair<std::int64_t, std::int64_t>> scale_extents(std::int64_t h, std::int64_t w, int scales,
                                                                 int ratio) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  std::int64_t div = 1;
  for (int s = 0; s < scales; ++s) {
    const auto sh = h / div, sw = w / div;
    if (sh < 1 || sw < 1) {
      throw DimensionError(str_cat("scale ", s, " of a ", h, "x", w, " map with ratio ", ratio, " has zero extent"));
    }
    out.emplace_back(sh, sw);
    div *= ratio;
  }
  return out;
}

Tensor ms_rstb_forward(const Tensor& x, const MsRstbParams& params) {
  const auto H = x.dim(2), W = x.dim(3);
  const auto extents = scale_extents(H, W, params.scales, params.ratio);
  std::vector<Tensor> outs;
  outs.reserve(extents.size());
  for (const auto& [h, w] : extents) {
    const bool native = h == H && w == W;
    Tensor xs = native ? x : resize_bilinear(x, h, w);
    Tensor ys = rstb_forward(xs, params.rstb);
    outs.push_back(native ? ys : resize_bilinear(ys, H, W));
  }
  Tensor cat = outs.size() == 1 ? outs[0] : concat(outs, 1);
  return add(params.fuse(cat), x);
}

Tensor fuse_frames(const Tensor& f_prev, const Tensor& f_cur, const Tensor& f_nxt) {
  for (const Tensor* f : {&f_cur, &f_nxt}) {
    if (f->rank() != 4 || f_prev.rank() != 4 || f->dim(0) != f_prev.dim(0) || f->dim(2) != f_prev.dim(2) ||
        f->dim(3) != f_prev.dim(3)) {
      throw DimensionError(str_cat("fuse_frames: feature shapes ", shape_str(f_prev.shape()), " and ",
                                   shape_str(f->shape()), " disagree"));
    }
  }
  const std::array<Tensor, 3> parts{f_prev, f_cur, f_nxt};
  return concat(parts, 1);
}

BiT::BiT(const BiTConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const auto C = cfg_.channels, Cf = cfg_.frame_channels();
  const auto dt = cfg_.dtype;
  shallow1_ = Conv2d(3, Cf, 3, 2, dt, rng);
  shallow2_ = Conv2d(Cf, Cf, 3, 2, dt, rng);
  for (int i = 0; i < cfg_.n_shared; ++i) fn_.emplace_back(cfg_, rng);
  time_proj_ = Conv2d(C + 1, C, 1, 1, dt, rng);
  for (int i = 0; i < cfg_.m_render; ++i) fm_.emplace_back(cfg_, rng);
  const int r2 = cfg_.upscale * cfg_.upscale;
  head_main_ = Conv2d(C, 3 * r2, 3, 1, dt, rng);
  head_dts_ = Conv2d(C, 6 * r2, 3, 1, dt, rng);
  head_tse_ = Conv2d(2 * C, 3 * r2, 3, 1, dt, rng);
}

Tensor BiT::to_model(const Tensor& x) const { return x.dtype() == cfg_.dtype ? x : x.to(cfg_.dtype); }

Tensor BiT::shallow_extract(const Tensor& frame) const {
  if (frame.rank() != 4 || frame.dim(1) != 3) {
    throw DimensionError("shallow_extract expects [B, 3, H, W], got " + shape_str(frame.shape()));
  }
  if (frame.dim(2) % 4 != 0 || frame.dim(3) % 4 != 0) {
    throw DimensionError(str_cat("frame extents ", frame.dim(2), "x", frame.dim(3), " are not multiples of 4"));
  }
  return shallow2_(gelu(shallow1_(to_model(frame))));
}

Tensor BiT::extract_shared(const Triplet& f) const {
  if (f.prev.shape() != f.cur.shape() || f.nxt.shape() != f.cur.shape()) {
    throw DimensionError(str_cat("triplet frames differ in shape: ", shape_str(f.prev.shape()), ", ",
                                 shape_str(f.cur.shape()), ", ", shape_str(f.nxt.shape())));
  }
  ++extract_calls_;
  // One pass over the stacked frames keeps the shared weights in a single GEMM.
  const std::array<Tensor, 3> frames{f.prev, f.cur, f.nxt};
  const auto B = f.cur.dim(0);
  Tensor feats = shallow_extract(concat(frames, 0));
  Tensor x = fuse_frames(slice(feats, 0, 0, B), slice(feats, 0, B, B), slice(feats, 0, 2 * B, B));
  for (const auto& blk : fn_) x = ms_rstb_forward(x, blk);
  return x;
}

Tensor BiT::encode_time(const Tensor& shared, const std::vector<double>& t) const {
  if (shared.rank() != 4 || shared.dim(1) != cfg_.channels) {
    throw DimensionError("encode_time expects [B, C, h, w] shared features, got " + shape_str(shared.shape()));
  }
  const auto B = shared.dim(0), h = shared.dim(2), w = shared.dim(3);
  if (t.size() != 1 && static_cast<std::int64_t>(t.size()) != B) {
    throw DimensionError(str_cat("encode_time: ", t.size(), " time values for batch ", B));
  }
  for (double v : t) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw DomainError(str_cat("time query ", v, " outside [0, 1]"));
  }
  std::vector<double> plane(static_cast<std::size_t>(B * h * w));
  for (std::int64_t b = 0; b < B; ++b) {
    const double v = t.size() == 1 ? t[0] : t[static_cast<std::size_t>(b)];
    std::fill_n(plane.begin() + b * h * w, h * w, v);
  }
  const std::array<Tensor, 2> parts{shared, Tensor::from_vector({B, 1, h, w}, plane, shared.dtype())};
  return time_proj_(concat(parts, 1));
}

Tensor BiT::render_features(const Tensor& shared, const std::vector<double>& t) const {
  Tensor x = encode_time(shared, t);
  for (const auto& blk : fm_) x = ms_rstb_forward(x, blk);
  return x;
}

Tensor BiT::finish(const Tensor& image, const Tensor& cur) const {
  Tensor out = image;
  if (cfg_.global_residual) out = add(out, to_model(cur));
  return training_ ? out : clamp(out, 0.0, 1.0);
}

Tensor BiT::reconstruct(const Tensor& rendered, const Tensor& cur) const {
  return finish(pixel_shuffle(head_main_(rendered), cfg_.upscale), cur);
}

Tensor BiT::render_motion(const Tensor& shared, const std::vector<double>& t, const Tensor& cur) const {
  return reconstruct(render_features(shared, t), cur);
}

std::pair<Tensor, Tensor> BiT::dual_end_reconstruct(const Tensor& shared, const Tensor& cur) const {
  if (!training_) throw ModeError("the dual-end head is only available in training mode");
  Tensor both = pixel_shuffle(head_dts_(shared), cfg_.upscale);
  return {finish(slice(both, 1, 0, 3), cur), finish(slice(both, 1, 3, 3), cur)};
}

Tensor BiT::forward(const Triplet& frames, const std::vector<double>& t) const {
  return render_motion(extract_shared(frames), t, frames.cur);
}

BiT::Branches BiT::tse_branches(const Triplet& frames, const std::vector<double>& t) const {
  std::vector<double> flipped(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) flipped[i] = 1.0 - t[i];
  Branches br;
  br.forward = render_features(extract_shared(frames), t);
  br.backward = render_features(extract_shared(frames.reversed()), flipped);
  return br;
}

Tensor BiT::tse_fuse(const Branches& branches, const Tensor& cur) const {
  const std::array<Tensor, 2> parts{branches.forward, branches.backward};
  return finish(pixel_shuffle(head_tse_(concat(parts, 1)), cfg_.upscale), cur);
}

Tensor BiT::bitpp_forward(const Triplet& frames, const std::vector<double>& t) const {
  return tse_fuse(tse_branches(frames, t), frames.cur);
}

ParamList BiT::parameters(ParamScope scope) const {
  ParamList out;
  shallow1_.collect("fn.shallow.conv1", out);
  shallow2_.collect("fn.shallow.conv2", out);
  for (std::size_t i = 0; i < fn_.size(); ++i) fn_[i].collect(str_cat("fn.rstb", i), out);
  time_proj_.collect("fm.time", out);
  for (std::size_t i = 0; i < fm_.size(); ++i) fm_[i].collect(str_cat("fm.rstb", i), out);
  head_main_.collect("head.main", out);
  if (scope == ParamScope::all) head_dts_.collect("head.dts", out);
  if (scope != ParamScope::base) head_tse_.collect("head.tse", out);
  return out;
}

std::int64_t param_count(const BiTConfig& cfg, ParamScope scope) {
  BiT model(cfg, 0);
  return count_scalars(model.parameters(scope));
}

}  // namespace bit
