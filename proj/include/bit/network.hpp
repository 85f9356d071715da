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

// The blur interpolation transformer.
//
//   prev, cur, nxt ──shallow conv (shared)──► concat ──► F_N (N MS-RSTBs) ──► shared features
//   shared features, t ──► time plane + 1x1 conv ──► F_M (M MS-RSTBs) ──► head ──► pixel_shuffle(4)
//
// The dual-end head reconstructs t=0 and t=1 straight from the shared features
// during training. The symmetric-ensemble head consumes the forward branch at t
// concatenated with the reversed-triplet branch at 1-t.
#pragma once

#include <atomic>
#include <cstdint>
#include <utility>
#include <vector>

#include "bit/swin.hpp"

namespace bit {

struct BiTConfig {
  int n_shared = 3;     // MS-RSTBs in F_N
  int m_render = 3;     // MS-RSTBs in F_M
  int heads = 6;
  std::int64_t channels = 174;
  int window = 8;
  int scales = 3;
  int ratio = 2;
  int upscale = 4;
  double mlp_ratio = 2.0;
  int rstb_depth = 6;
  /// Kernel of the conv fusing the S scale outputs.
  int fuse_kernel = 3;
  /// Adds the current blurred frame to every reconstruction.
  bool global_residual = false;
  DType dtype = DType::f32;

  static BiTConfig paper();
  /// C=24, 3 heads, window 4, one block in each stage.
  static BiTConfig tiny();

  /// Throws ConfigError when the architecture is inconsistent.
  void validate() const;
  std::int64_t frame_channels() const { return channels / 3; }
};

struct MsRstbParams {
  RstbParams rstb;
  Conv2d fuse;
  int scales = 1;
  int ratio = 2;

  MsRstbParams() = default;
  MsRstbParams(const BiTConfig& cfg, Rng& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

/// One RSTB shared across S resized copies of x, resized back, concatenated,
/// fused to C channels and added to x.
Tensor ms_rstb_forward(const Tensor& x, const MsRstbParams& params);

/// Spatial extents processed at each scale, (H, W) first. Throws
/// DimensionError if a scale collapses to zero.
std::vector<std::pair<std::int64_t, std::int64_t>> scale_extents(std::int64_t h, std::int64_t w, int scales, int ratio);

/// Channel concatenation in the order (prev, cur, nxt).
Tensor fuse_frames(const Tensor& f_prev, const Tensor& f_cur, const Tensor& f_nxt);

struct Triplet {
  Tensor prev, cur, nxt;
  Triplet reversed() const { return {nxt, cur, prev}; }
};

enum class ParamScope {
  all,        // every tensor, including the dual-end and ensemble heads
  inference,  // everything except head.dts.*
  base,       // trunk and main head only
};

class BiT {
 public:
  explicit BiT(const BiTConfig& cfg, std::uint64_t seed = 0);
  BiT(const BiT&) = delete;
  BiT& operator=(const BiT&) = delete;

  const BiTConfig& config() const { return cfg_; }

  /// [B, 3, H, W] -> [B, C/3, H/4, W/4]; H and W must be multiples of 4.
  Tensor shallow_extract(const Tensor& frame) const;
  /// F_N. Counts invocations (see extract_calls).
  Tensor extract_shared(const Triplet& frames) const;
  /// Concatenates a t plane and projects C+1 -> C. One t per batch element,
  /// or a single t broadcast over the batch. t outside [0, 1] is a DomainError.
  Tensor encode_time(const Tensor& shared, const std::vector<double>& t) const;
  Tensor encode_time(const Tensor& shared, double t) const { return encode_time(shared, std::vector<double>{t}); }
  /// F_M applied to the shared features, before any reconstruction head.
  Tensor render_features(const Tensor& shared, const std::vector<double>& t) const;
  Tensor render_features(const Tensor& shared, double t) const {
    return render_features(shared, std::vector<double>{t});
  }
  /// Main head on F_M features: conv to 48 channels and pixel_shuffle(4).
  Tensor reconstruct(const Tensor& rendered, const Tensor& cur) const;
  /// F_R(F_M(shared, t)); clamped to [0, 1] outside training mode.
  Tensor render_motion(const Tensor& shared, const std::vector<double>& t, const Tensor& cur) const;
  Tensor render_motion(const Tensor& shared, double t, const Tensor& cur) const {
    return render_motion(shared, std::vector<double>{t}, cur);
  }
  /// (t=0, t=1) estimates from the shared features. ModeError outside training.
  std::pair<Tensor, Tensor> dual_end_reconstruct(const Tensor& shared, const Tensor& cur) const;

  /// Full single-branch model.
  Tensor forward(const Triplet& frames, const std::vector<double>& t) const;
  Tensor forward(const Triplet& frames, double t) const { return forward(frames, std::vector<double>{t}); }

  struct Branches {
    Tensor forward;   // F_M(F_N(prev, cur, nxt), t)
    Tensor backward;  // F_M(F_N(nxt, cur, prev), 1 - t)
  };
  Branches tse_branches(const Triplet& frames, const std::vector<double>& t) const;
  /// Ensemble head on concat(forward, backward).
  Tensor tse_fuse(const Branches& branches, const Tensor& cur) const;
  Tensor bitpp_forward(const Triplet& frames, const std::vector<double>& t) const;
  Tensor bitpp_forward(const Triplet& frames, double t) const {
    return bitpp_forward(frames, std::vector<double>{t});
  }

  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }

  ParamList parameters(ParamScope scope = ParamScope::all) const;
  /// Tensors excluding head.dts.*, for export.
  ParamList inference_parameters() const { return parameters(ParamScope::inference); }

  std::int64_t extract_calls() const { return extract_calls_.load(); }
  void reset_extract_calls() { extract_calls_ = 0; }

  std::int64_t tse_input_channels() const { return head_tse_.in_channels(); }

 private:
  Tensor finish(const Tensor& image, const Tensor& cur) const;
  Tensor to_model(const Tensor& x) const;

  BiTConfig cfg_;
  Conv2d shallow1_, shallow2_;
  std::vector<MsRstbParams> fn_;
  Conv2d time_proj_;
  std::vector<MsRstbParams> fm_;
  Conv2d head_main_, head_dts_, head_tse_;
  bool training_ = true;
  mutable std::atomic<std::int64_t> extract_calls_{0};
};

/// Number of learnable scalars for `cfg` in the given scope.
std::int64_t param_count(const BiTConfig& cfg, ParamScope scope = ParamScope::inference);

}  // namespace bit
