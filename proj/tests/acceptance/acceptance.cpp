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

// Acceptance runner: one PASS/FAIL line per criterion.
//
//   bit_acceptance            run every criterion
//   bit_acceptance 2 4 9      run a subset
//
// Exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "app.hpp"
#include "bit/analysis.hpp"
#include "bit/config.hpp"
#include "bit/dataset.hpp"
#include "bit/network.hpp"
#include "bit/swin.hpp"
#include "bit/training.hpp"
#include "unit/attention_oracle.hpp"
#include "unit/blur_oracles.hpp"
#include "unit/gradcheck.hpp"

#ifndef BIT_CLI_PATH
#define BIT_CLI_PATH "bit"
#endif

namespace {

using namespace bit;
using bit::testing::grad_check;
using bit::testing::random_tensor;
using bit::testing::weighted_sum;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// 1 ---------------------------------------------------------------------------

struct OpCase {
  std::string name;
  std::function<Tensor(const std::vector<Tensor>&)> f;
  std::vector<Tensor> inputs;
};

std::vector<OpCase> op_cases() {
  using V = const std::vector<Tensor>&;
  auto r = [](const Shape& s, std::uint64_t seed, double lo = -1, double hi = 1) {
    return random_tensor(s, seed, DType::f64, lo, hi);
  };
  std::vector<OpCase> c;
  c.push_back({"add", [](V x) { return weighted_sum(add(x[0], x[1])); }, {r({2, 3, 4}, 1), r({3, 1}, 2)}});
  c.push_back({"sub", [](V x) { return weighted_sum(sub(x[0], x[1])); }, {r({2, 3, 4}, 3), r({4}, 4)}});
  c.push_back({"mul", [](V x) { return weighted_sum(mul(x[0], x[1])); }, {r({2, 3, 4}, 5), r({2, 1, 4}, 6)}});
  c.push_back({"scale", [](V x) { return weighted_sum(scale(x[0], -1.7)); }, {r({5, 3}, 7)}});
  c.push_back({"add_scalar", [](V x) { return weighted_sum(add_scalar(x[0], 0.3)); }, {r({5, 3}, 8)}});
  c.push_back({"gelu", [](V x) { return weighted_sum(gelu(x[0])); }, {r({4, 6}, 9, -3, 3)}});
  c.push_back({"clamp", [](V x) { return weighted_sum(clamp(x[0], -0.5, 0.5)); }, {r({4, 6}, 10)}});
  c.push_back({"sum", [](V x) { return scale(sum(x[0]), 0.7); }, {r({3, 4}, 11)}});
  c.push_back({"mean", [](V x) { return scale(mean(x[0]), 1.3); }, {r({3, 4}, 12)}});
  c.push_back({"reduce_to", [](V x) { return weighted_sum(reduce_to(x[0], {1, 4})); }, {r({3, 4}, 13)}});
  c.push_back({"l1_loss", [](V x) { return l1_loss(x[0], x[1]); }, {r({2, 3, 4}, 14), r({2, 3, 4}, 15)}});
  c.push_back({"matmul", [](V x) { return weighted_sum(matmul(x[0], x[1])); }, {r({2, 3, 4}, 16), r({4, 5}, 17)}});
  c.push_back({"linear", [](V x) { return weighted_sum(linear(x[0], x[1], x[2])); },
               {r({2, 3, 4}, 18), r({4, 5}, 19), r({5}, 20)}});
  c.push_back({"reshape", [](V x) { return weighted_sum(reshape(x[0], {4, 6})); }, {r({2, 3, 4}, 21)}});
  c.push_back({"permute", [](V x) { return weighted_sum(permute(x[0], {2, 0, 1})); }, {r({2, 3, 4}, 22)}});
  c.push_back({"transpose", [](V x) { return weighted_sum(transpose(x[0], 0, 2)); }, {r({2, 3, 4}, 23)}});
  c.push_back({"concat", [](V x) { return weighted_sum(concat(x, 1)); }, {r({2, 3, 4}, 24), r({2, 2, 4}, 25)}});
  c.push_back({"slice", [](V x) { return weighted_sum(slice(x[0], 2, 1, 2)); }, {r({2, 3, 4}, 26)}});
  auto idx = std::make_shared<std::vector<std::int64_t>>(std::vector<std::int64_t>{0, 5, 5, 11, 3, 0, 7, 2});
  c.push_back({"gather", [idx](V x) { return weighted_sum(gather(x[0], {2, 4}, idx)); }, {r({3, 4}, 27)}});
  c.push_back({"softmax", [](V x) { return weighted_sum(softmax(x[0], -1)); }, {r({3, 5}, 28, -2, 2)}});
  c.push_back({"layer_norm", [](V x) { return weighted_sum(layer_norm(x[0], x[1], x[2])); },
               {r({3, 6}, 29), r({6}, 30), r({6}, 31)}});
  c.push_back({"conv2d 3x3", [](V x) { return weighted_sum(conv2d(x[0], x[1], x[2], {1, 1, PadMode::zeros})); },
               {r({2, 2, 5, 5}, 32), r({3, 2, 3, 3}, 33), r({3}, 34)}});
  c.push_back({"conv2d stride 2 reflect",
               [](V x) { return weighted_sum(conv2d(x[0], x[1], x[2], {2, 1, PadMode::reflect})); },
               {r({1, 2, 6, 6}, 35), r({2, 2, 3, 3}, 36), r({2}, 37)}});
  c.push_back({"conv2d 1x1", [](V x) { return weighted_sum(conv2d(x[0], x[1], x[2])); },
               {r({1, 3, 4, 4}, 38), r({2, 3, 1, 1}, 39), r({2}, 40)}});
  c.push_back({"resize_bilinear down", [](V x) { return weighted_sum(resize_bilinear(x[0], 3, 2)); },
               {r({1, 2, 6, 5}, 41)}});
  c.push_back({"resize_bilinear up", [](V x) { return weighted_sum(resize_bilinear(x[0], 7, 8)); },
               {r({1, 2, 3, 4}, 42)}});
  c.push_back({"pixel_shuffle", [](V x) { return weighted_sum(pixel_shuffle(x[0], 2)); }, {r({1, 8, 2, 3}, 43)}});
  c.push_back({"pixel_unshuffle", [](V x) { return weighted_sum(pixel_unshuffle(x[0], 2)); }, {r({1, 2, 4, 6}, 44)}});
  c.push_back({"pad_reflect_br", [](V x) { return weighted_sum(pad_reflect_br(x[0], 2, 3)); }, {r({1, 2, 4, 5}, 45)}});
  c.push_back({"crop_tl", [](V x) { return weighted_sum(crop_tl(x[0], 2, 3)); }, {r({1, 2, 4, 5}, 46)}});
  return c;
}

Outcome gradient_correctness() {
  double worst = 0;
  std::string worst_name;
  std::int64_t checked = 0, cases = 0;
  auto note = [&](const std::string& name, const bit::testing::GradCheckResult& g) {
    checked += g.checked;
    ++cases;
    if (g.max_rel >= worst) {
      worst = g.max_rel;
      worst_name = name;
    }
  };
  for (auto& c : op_cases()) note(c.name, grad_check(c.f, c.inputs));

  Rng rng(7);
  AttentionParams ap(6, 2, 4, DType::f64, rng);
  const Tensor x = random_tensor({1, 6, 8, 8}, 50);
  for (int shift : {0, 2}) {
    for (const auto& p : std::vector<Tensor>{ap.q.weight, ap.k.bias, ap.rel_bias_table, ap.proj.weight}) {
      note("window_attention shift " + std::to_string(shift),
           grad_check([&](const std::vector<Tensor>&) { return weighted_sum(window_attention(x, ap, {4, shift})); },
                      {p}, 1e-5, 16));
    }
    Tensor xin = x.clone();
    note("window_attention input",
         grad_check([&](const std::vector<Tensor>& v) { return weighted_sum(window_attention(v[0], ap, {4, shift})); },
                    {xin}, 1e-5, 32));
  }

  BiTConfig cfg = BiTConfig::tiny();
  cfg.dtype = DType::f64;
  BiT model(cfg, 3);
  model.set_training(true);
  const Triplet frames{random_tensor({1, 3, 32, 32}, 60, DType::f64, 0, 1),
                       random_tensor({1, 3, 32, 32}, 61, DType::f64, 0, 1),
                       random_tensor({1, 3, 32, 32}, 62, DType::f64, 0, 1)};
  auto composite = [&](const std::vector<Tensor>&) {
    Tensor shared = model.extract_shared(frames);
    auto [p0, p1] = model.dual_end_reconstruct(shared, frames.cur);
    Tensor y = add(weighted_sum(model.render_motion(shared, 0.375, frames.cur), 71),
                   add(weighted_sum(p0, 72), weighted_sum(p1, 73)));
    return add(y, weighted_sum(model.bitpp_forward(frames, 0.625), 74));
  };
  for (const auto& p : model.parameters()) {
    note("bit." + p.name, grad_check(composite, {p.tensor}, 1e-3, 3, 4));
  }
  return {worst < 1e-4, str_cat(cases, " cases, ", checked, " elements, max rel error ", fmt(worst, 3), " (",
                                worst_name, ")")};
}

// 2 ---------------------------------------------------------------------------

Outcome attention_oracle() {
  Rng rng(11);
  AttentionParams p(6, 2, 4, DType::f64, rng);
  std::uint64_t seed = 100;
  for (Tensor* t : {&p.q.weight, &p.k.weight, &p.v.weight, &p.proj.weight, &p.q.bias, &p.k.bias, &p.v.bias,
                    &p.proj.bias, &p.rel_bias_table}) {
    assign_values(*t, random_tensor(t->shape(), seed++, DType::f64, -0.5, 0.5));
  }
  const Tensor x = random_tensor({1, 6, 8, 8}, 12);
  const auto got = window_attention(x, p, {4, 2}).to_vector();
  const auto expect = bit::testing::brute_force_window_attention(x, p, 2);
  double err = 0;
  for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - expect[i]));
  return {err < 1e-6, "8x8 map, M=4, shift 2, max abs error " + fmt(err, 3)};
}

// 3 ---------------------------------------------------------------------------

Outcome roundtrips() {
  std::mt19937_64 rng(2026);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int bad_win = 0, bad_shuffle = 0;
  for (int i = 0; i < 100; ++i) {
    const int M = pick(1, 5), r = pick(1, 4);
    const std::int64_t B = pick(1, 3), C = pick(1, 6), H = M * pick(1, 4), W = M * pick(1, 4);
    const Tensor x = random_tensor({B, C, H, W}, rng(), i % 2 ? DType::f64 : DType::f32);
    if (window_reverse(window_partition(x, M), M, B, H, W).to_vector() != x.to_vector()) ++bad_win;
    const Tensor y = random_tensor({B, C * r * r, pick(1, 5), pick(1, 5)}, rng(), i % 2 ? DType::f32 : DType::f64);
    if (pixel_unshuffle(pixel_shuffle(y, r), r).to_vector() != y.to_vector()) ++bad_shuffle;
    const Tensor z = pixel_shuffle(y, r);
    if (pixel_shuffle(pixel_unshuffle(z, r), r).to_vector() != z.to_vector()) ++bad_shuffle;
  }
  return {bad_win + bad_shuffle == 0,
          str_cat("100 shapes: partition mismatches ", bad_win, ", shuffle mismatches ", bad_shuffle)};
}

// 4 ---------------------------------------------------------------------------

Outcome flop_ratio() {
  const FlopRatio tiny = ms_rstb_flop_ratio(BiTConfig::tiny(), 16, 16);
  const FlopRatio paper = ms_rstb_flop_ratio(BiTConfig::paper(), 32, 32);
  const double target = 1.3125;
  const bool ok = std::abs(tiny.measured / target - 1) < 0.05 && std::abs(paper.measured / target - 1) < 0.05;
  return {ok, str_cat("S=3 r=2: tiny ", fmt(tiny.measured, 6), ", paper config ", fmt(paper.measured, 6),
                      " vs closed form ", fmt(target, 6))};
}

// 5 ---------------------------------------------------------------------------

Outcome amortization() {
  const std::vector<int> ks{1, 4, 16, 60};
  BenchOptions opts;
  opts.ks = ks;
  opts.repeats = 10;
  BiT model(BiTConfig::tiny(), 1);
  const Triplet f{random_tensor({1, 3, 64, 64}, 1, DType::f32, 0, 1), random_tensor({1, 3, 64, 64}, 2, DType::f32, 0, 1),
                  random_tensor({1, 3, 64, 64}, 3, DType::f32, 0, 1)};
  const auto rows = bench_amortization(model, f, opts);
  const LinearFit fit = fit_bench(rows);
  bool calls = true;
  for (const auto& r : rows) calls = calls && r.shared_calls == 1;
  const bool sub_linear = rows[1].total_s / rows[0].total_s < 4;

  std::vector<double> slopes;
  for (int n = 1; n <= 3; ++n) {
    BiTConfig c = BiTConfig::tiny();
    c.n_shared = n;
    c.m_render = 4 - n;
    BiT m(c, 2);
    slopes.push_back(fit_bench(bench_amortization(m, f, opts)).b);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < slopes.size(); ++i) decreasing = decreasing && slopes[i] < slopes[i - 1];
  const bool ok = fit.max_rel_residual < 0.10 && calls && decreasing && sub_linear;
  return {ok, str_cat("a=", fmt(fit.a * 1e3), " ms, b=", fmt(fit.b * 1e3), " ms/query, residual ",
                      fmt(100 * fit.max_rel_residual, 3), "%, F_N calls 1 per K: ", calls ? "yes" : "no",
                      ", b for N=1,2,3 (N+M=4): ", fmt(slopes[0] * 1e3), "/", fmt(slopes[1] * 1e3), "/",
                      fmt(slopes[2] * 1e3), " ms")};
}

// 6, 7 ------------------------------------------------------------------------

struct OverfitRun {
  std::vector<TimePoint> curve;
  double seconds = 0;
};

std::map<std::pair<std::uint64_t, bool>, OverfitRun> g_runs;

const OverfitRun& overfit(std::uint64_t seed, bool dts) {
  auto key = std::pair{seed, dts};
  if (auto it = g_runs.find(key); it != g_runs.end()) return it->second;
  SynthOptions o;
  const auto data = centre_triplets(synth_sequences(o));
  TrainConfig cfg = train_profile("tiny");
  cfg.seed = seed;
  cfg.loss.dts = dts;
  BiT model(cfg.model, seed);
  const auto t0 = std::chrono::steady_clock::now();
  Trainer(model, cfg, data).run();
  OverfitRun run;
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.curve = time_varying_eval(model, data);
  std::cerr << "  overfit seed " << seed << (dts ? " dts on" : " dts off") << ": " << fmt(run.seconds, 3) << " s, t=0 "
            << fmt(run.curve.front().psnr) << " dB, t=1 " << fmt(run.curve.back().psnr) << " dB\n";
  return g_runs[key] = run;
}

Outcome overfit_psnr() {
  const OverfitRun& run = overfit(0, true);
  double worst = kPsnrCap;
  std::string curve;
  for (const auto& p : run.curve) {
    worst = std::min(worst, p.psnr);
    curve += (curve.empty() ? "" : " ") + fmt(p.psnr);
  }
  return {worst > 35.0 && run.seconds < 30 * 60,
          str_cat("min PSNR ", fmt(worst), " dB over ", run.curve.size(), " t values [", curve, "], ",
                  fmt(run.seconds, 3), " s")};
}

Outcome dts_direction() {
  double mean_delta = 0, worst = 1e9;
  std::string per_seed;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto& on = overfit(seed, true).curve;
    const auto& off = overfit(seed, false).curve;
    const double d0 = on.front().psnr - off.front().psnr, d1 = on.back().psnr - off.back().psnr;
    worst = std::min({worst, d0, d1});
    mean_delta += (d0 + d1) / 6;
    per_seed += str_cat(per_seed.empty() ? "" : ", ", "seed ", seed, ": ", fmt(d0, 3), "/", fmt(d1, 3));
  }
  return {worst >= -0.1 && mean_delta > 0,
          str_cat("DTS on minus off at t=0/t=1 (dB): ", per_seed, "; mean ", fmt(mean_delta, 3))};
}

// 8 ---------------------------------------------------------------------------

Outcome branch_swap() {
  BiT model(BiTConfig::tiny(), 4);
  model.set_training(false);
  NoGradGuard ng;
  const Triplet f{random_tensor({2, 3, 32, 32}, 5, DType::f32, 0, 1), random_tensor({2, 3, 32, 32}, 6, DType::f32, 0, 1),
                  random_tensor({2, 3, 32, 32}, 7, DType::f32, 0, 1)};
  int mismatches = 0, pairs = 0;
  for (double t : CaptureConfig::rbi().t_grid()) {
    const auto a = model.tse_branches(f, {t});
    const auto b = model.tse_branches(f.reversed(), {1.0 - t});
    mismatches += a.forward.to_vector() != b.backward.to_vector();
    mismatches += a.backward.to_vector() != b.forward.to_vector();
    pairs += 2;
  }
  const auto in = model.tse_input_channels(), C = model.config().channels;
  return {mismatches == 0 && in == 2 * C,
          str_cat(pairs, " branch pairs, ", mismatches, " not bit-identical; fusion input ", in, " = 2 x ", C)};
}

// 9 ---------------------------------------------------------------------------

Outcome loss_identities() {
  const Shape s{2, 3, 8, 8};
  auto filled = [&](double v) {
    return Tensor::from_vector(s, std::vector<double>(static_cast<std::size_t>(shape_numel(s)), v), DType::f64);
  };
  const Tensor gt = filled(0.25), pred = filled(0.35);
  const double l = total_loss(pred, gt, pred, gt, pred, gt, 0.5).total.item();
  const Tensor other = random_tensor(s, 3, DType::f64, 0, 1);
  const double plain = total_loss(other, gt, filled(0.9), gt, filled(0.0), gt, 0.0).total.item();
  const double lr0 = cosine_lr(0, 2000, 1e-4, 1e-6), lr1 = cosine_lr(2000, 2000, 1e-4, 1e-6);
  const bool ok = std::abs(l - 0.2) < 1e-12 && plain == l1_loss(other, gt).item() && lr0 == 1e-4 && lr1 == 1e-6;
  return {ok, str_cat("constant-error loss ", fmt(l, 15), ", lambda=0 equals L1: ", plain == l1_loss(other, gt).item(),
                      ", lr endpoints ", lr0, " / ", lr1)};
}

// 10 --------------------------------------------------------------------------

Outcome cka_properties() {
  SynthOptions o;
  std::vector<BlurTriplet> triplets;
  for (const auto& s : synth_sequences(o))
    for (auto& t : build_triplets(s)) triplets.push_back(std::move(t));
  triplets.resize(8);
  BiT model(BiTConfig::tiny(), 8);
  model.set_training(false);
  NoGradGuard ng;
  std::vector<Tensor> parts;
  for (const auto& t : triplets) parts.push_back(model.extract_shared(batch_of(t, DType::f64)));
  const Tensor f = concat(parts, 0).to(DType::f64);
  const CkaMap m = cka_map(f);
  const auto C = m.values.rows;
  double diag = 0, asym = 0;
  for (std::int64_t i = 0; i < C; ++i) {
    diag = std::max(diag, std::abs(m.values(i, i) - 1));
    for (std::int64_t j = 0; j < C; ++j) asym = std::max(asym, std::abs(m.values(i, j) - m.values(j, i)));
  }
  double drift = 0;
  auto v = f.to_vector();
  const auto HW = f.dim(2) * f.dim(3);
  for (std::int64_t c = 0; c < C; ++c) {
    const double a = 0.25 + c, b = c % 2 ? -3.0 + c : 5.0;
    for (std::int64_t n = 0; n < f.dim(0); ++n)
      for (std::int64_t k = 0; k < HW; ++k) {
        auto& e = v[static_cast<std::size_t>((n * C + c) * HW + k)];
        e = a * e + b;
      }
  }
  const CkaMap t = cka_map(Tensor::from_vector(f.shape(), v, DType::f64));
  for (std::size_t k = 0; k < m.values.data.size(); ++k) drift = std::max(drift, std::abs(t.values.data[k] - m.values.data[k]));
  const bool ok = m.constant_channels.empty() && diag < 1e-6 && asym < 1e-6 && drift < 1e-6;
  return {ok, str_cat(C, " channels from 8 triplets: diagonal error ", fmt(diag, 3), ", asymmetry ", fmt(asym, 3),
                      ", scale/shift drift ", fmt(drift, 3))};
}

// 11 --------------------------------------------------------------------------

Tensor constant_image(double c, std::int64_t h = 8, std::int64_t w = 8) {
  return Tensor::from_vector({3, h, w}, std::vector<double>(static_cast<std::size_t>(3 * h * w), c), DType::f64);
}

Outcome blur_oracles() {
  std::vector<std::string> failed;
  AnalyticScene still;
  still.grating_amplitude = 0.2;
  still.blobs.push_back(Blob{8, 8, 0, 0, 3, 0.9, {1, 0, 0}});
  SharpSequence frozen = render_sequence(still, 9, 16, 16);
  if (max_abs_diff(synth_blur_discrete(frozen, 0, 9), frozen.frames[0]) > 1e-14 ||
      max_abs_diff(synth_blur_continuous(still, -0.5, 9.0, 72, 16, 16), frozen.frames[0]) > 1e-14) {
    failed.push_back("constant scene");
  }

  SharpSequence ramp;
  for (int m = 0; m <= 10; ++m) ramp.frames.push_back(constant_image(m / 10.0));
  const double ramp_err = max_abs_diff(synth_blur_discrete(ramp, 0, 11), constant_image(0.5));
  if (ramp_err > 1e-15) failed.push_back("ramp average");

  AnalyticScene moving;
  moving.grating_amplitude = 0.2;
  moving.grating_drift = 0.8;
  moving.blobs.push_back(Blob{10, 6, 0.3, 1.2, 3, 0.9, {0.2, 0.9, 0.4}});
  std::vector<double> diffs;
  Tensor prev = synth_blur_continuous(moving, -0.5, 9.0, 9, 24, 24);
  for (int k = 18; k <= 288; k *= 2) {
    Tensor cur = synth_blur_continuous(moving, -0.5, 9.0, k, 24, 24);
    diffs.push_back(max_abs_diff(cur, prev));
    prev = cur;
  }
  for (std::size_t i = 1; i < diffs.size(); ++i)
    if (diffs[i] > 0.5 * diffs[i - 1]) failed.push_back("convergence halving");

  const auto dot = AnalyticScene::moving_dot(8, 8, 4.0);
  const auto seq = render_sequence(dot, 11, 16, 64);
  const int discrete = bit::testing::count_peaks(bit::testing::image_row(synth_blur_discrete(seq, 0, 11), 0, 8), 1e-3);
  const int continuous = bit::testing::count_peaks(
      bit::testing::image_row(synth_blur_continuous(dot, -0.5, 11.0, 1024, 16, 64), 0, 8), 1e-3);
  if (discrete < 11 || continuous != 1) failed.push_back("peak contrast");

  std::string diff_list;
  for (double d : diffs) diff_list += (diff_list.empty() ? "" : " ") + fmt(d, 2);
  std::string fails;
  for (const auto& f : failed) fails += " " + f;
  return {failed.empty(), str_cat("ramp error ", fmt(ramp_err, 2), ", k-doubling diffs [", diff_list,
                                  "], peaks discrete ", discrete, " vs continuous ", continuous,
                                  failed.empty() ? "" : "; failed:" + fails)};
}

// 12 --------------------------------------------------------------------------

std::string file_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "bit_acceptance_repro";
  fs::remove_all(root);
  std::vector<double> secs;
  for (const char* run : {"a", "b"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string cmd = str_cat("\"", BIT_CLI_PATH, "\" repro --profile tiny --seed 0 -q --out \"",
                                    (root / run).string(), "\"");
    const int rc = std::system(cmd.c_str());
    secs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (!fs::exists(root / run / "report.json")) return {false, str_cat("repro run ", run, " failed (status ", rc, ")")};
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    const auto rel = fs::relative(e.path(), root / "a");
    const auto ext = rel.extension();
    if (e.is_regular_file() && (rel == "report.json" || ext == ".png")) files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  int pngs = 0, differing = 0;
  for (const auto& rel : files) {
    pngs += rel.extension() == ".png";
    if (!fs::exists(root / "b" / rel) || file_bytes(root / "a" / rel) != file_bytes(root / "b" / rel)) ++differing;
  }
  const bool has_report = std::find(files.begin(), files.end(), fs::path("report.json")) != files.end();
  const bool ok = has_report && differing == 0 && pngs > 0;
  if (ok) fs::remove_all(root);
  return {ok, str_cat("report.json and ", pngs, " PNGs compared, ", differing, " differ; runs took ", fmt(secs[0], 3),
                      " s and ", fmt(secs[1], 3), " s")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "gradient correctness", gradient_correctness},
      {2, "shifted-window attention oracle", attention_oracle},
      {3, "partition and pixel-shuffle roundtrips", roundtrips},
      {4, "multi-scale flop ratio", flop_ratio},
      {5, "amortization structure", amortization},
      {6, "overfit PSNR above 35 dB at every t", overfit_psnr},
      {7, "dual-end supervision ablation direction", dts_direction},
      {8, "ensemble branch-swap identity", branch_swap},
      {9, "loss and schedule identities", loss_identities},
      {10, "CKA properties", cka_properties},
      {11, "blur synthesis oracles", blur_oracles},
      {12, "repro determinism", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  bit::app::set_quiet(true);

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " | " << o.detail << " ["
              << fmt(s, 3) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
