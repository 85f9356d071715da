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

// Image metrics, channel-similarity (CKA) analysis and the amortized
// inference benchmark.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bit/blur.hpp"
#include "bit/network.hpp"

namespace bit {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(peak^2 / MSE), capped at 100 dB.
double psnr(const Tensor& pred, const Tensor& gt, double peak = 1.0);
/// PSNR from a mean squared error.
double psnr_from_mse(double mse, double peak = 1.0);

/// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5, K1 0.01, K2 0.03,
/// range 1) and over channels. Inputs are [C, H, W] or [B, C, H, W]; RangeError
/// if H or W is below 11.
double ssim(const Tensor& pred, const Tensor& gt);

/// Dense row-major matrix used for Gram and similarity matrices.
struct Matrix {
  std::int64_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::int64_t r, std::int64_t c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r * c), fill) {}
  double& operator()(std::int64_t i, std::int64_t j) { return data[static_cast<std::size_t>(i * cols + j)]; }
  double operator()(std::int64_t i, std::int64_t j) const { return data[static_cast<std::size_t>(i * cols + j)]; }
};

/// Linear-kernel Gram matrix X X^T of n samples (rows of X).
Matrix gram_linear(const Matrix& samples);
/// trace(K H L H) / (n - 1)^2 with H = I - 11^T / n. DomainError if n < 2.
double hsic(const Matrix& K, const Matrix& L);
/// HSIC of two Gram matrices normalised by their self-HSIC.
double cka(const Matrix& K, const Matrix& L);

enum class Reorder { none, spectral };
Reorder reorder_from_string(const std::string& s);

struct CkaOptions {
  /// Positions (batch x spatial) sampled per channel; 0 keeps all.
  std::int64_t max_samples = 2048;
  std::uint64_t seed = 0;
  Reorder reorder = Reorder::none;
};

struct CkaMap {
  /// C x C similarities, in the original channel order.
  Matrix values;
  /// Display order of channels (identity unless reordered).
  std::vector<std::int64_t> order;
  /// Channels whose activations were constant; their rows/cols are zero.
  std::vector<std::int64_t> constant_channels;

  /// values permuted by `order`.
  Matrix reordered() const;
};

/// Per-channel sample vectors from features [B, C, H, W]: channel c is the
/// flattened (batch, y, x) activations, optionally subsampled.
Matrix channel_samples(const Tensor& features, const CkaOptions& opts);
/// Linear CKA between every pair of channels of `features`.
CkaMap cka_map(const Tensor& features, const CkaOptions& opts = {});
/// Channel order by the Fiedler vector of the similarity graph's normalised Laplacian.
std::vector<std::int64_t> spectral_order(const Matrix& similarity);
void write_matrix_csv(std::ostream& os, const Matrix& m, const std::vector<std::int64_t>& order);

struct TimePoint {
  double t = 0;
  double psnr = 0;
  double ssim = 0;
};

struct MetricReport {
  std::vector<TimePoint> per_t;      // averaged over triplets
  std::vector<double> frame_psnr;    // one per (triplet, t)
  std::vector<double> frame_ssim;
  double mean_psnr = 0;
  double mean_ssim = 0;
};

/// Evaluates the model (inference mode, clamped) on every grid t of every
/// triplet; `ensemble` uses the symmetric-ensemble head.
MetricReport evaluate(BiT& model, const std::vector<BlurTriplet>& data, bool ensemble = false);
/// Per-t PSNR/SSIM curve of evaluate().
std::vector<TimePoint> time_varying_eval(BiT& model, const std::vector<BlurTriplet>& data, bool ensemble = false);
void write_curve_csv(std::ostream& os, const std::vector<TimePoint>& curve);

/// K uniformly spaced times including 0 and 1; {0.5} for K = 1.
std::vector<double> uniform_t_grid(int k);

/// Renders every t in `ts` from one shared-feature computation (two with
/// `ensemble`), in inference mode. Outputs are [B, 3, H, W], clamped.
std::vector<Tensor> interpolate(BiT& model, const Triplet& frames, const std::vector<double>& ts, bool ensemble = false);

/// Stacks [3, H, W] frames of a triplet into a batch of one.
Triplet batch_of(const BlurTriplet& tr, DType dtype);

struct BenchRow {
  int k = 0;
  double total_s = 0;
  double shared_s = 0;     // F_N
  double render_s = 0;     // all F_M + head calls
  std::int64_t shared_calls = 0;
};

struct LinearFit {
  double a = 0, b = 0;
  /// max_K |time_K - (a + b K)| / time_K.
  double max_rel_residual = 0;
};

/// Least-squares fit of y = a + b x.
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

struct BenchOptions {
  std::vector<int> ks{1, 4, 16, 60};
  int warmup = 1;
  /// Timings are the minimum over this many repeats, interleaved across K.
  int repeats = 10;
};

/// Renders K uniformly spaced t values from one shared-feature computation.
std::vector<BenchRow> bench_amortization(BiT& model, const Triplet& frames, const BenchOptions& opts = {});
LinearFit fit_bench(const std::vector<BenchRow>& rows);
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

struct FlopRatio {
  std::int64_t rstb = 0;      // matmul flops of one RSTB at full size
  std::int64_t ms_rstb = 0;   // matmul flops of the multi-scale block
  double measured = 0;
  double closed_form = 0;     // (1 - r^{-2S}) / (1 - r^{-2})
};

/// Counts attention and MLP (matmul) flops of an RSTB versus an MS-RSTB on a
/// [1, C, h, w] feature map.
FlopRatio ms_rstb_flop_ratio(const BiTConfig& cfg, std::int64_t h, std::int64_t w);

}  // namespace bit
