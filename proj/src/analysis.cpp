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

#include "bit/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace bit {

double psnr_from_mse(double mse, double peak) {
  if (mse <= 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double psnr(const Tensor& pred, const Tensor& gt, double peak) {
  if (pred.shape() != gt.shape()) {
    throw DimensionError(str_cat("psnr: shapes ", shape_str(pred.shape()), " and ", shape_str(gt.shape())));
  }
  const auto a = pred.to_vector(), b = gt.to_vector();
  double se = 0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  return psnr_from_mse(a.empty() ? 0.0 : se / static_cast<double>(a.size()), peak);
}

namespace {

constexpr int kSsimWin = 11;
constexpr double kSsimSigma = 1.5;

std::array<double, kSsimWin> gaussian_window() {
  std::array<double, kSsimWin> g{};
  double s = 0;
  for (int i = 0; i < kSsimWin; ++i) {
    const double d = i - kSsimWin / 2;
    s += g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
  }
  for (auto& v : g) v /= s;
  return g;
}

// Valid-mode separable filtering of an H x W plane.
std::vector<double> filter_valid(const double* p, std::int64_t H, std::int64_t W, const std::array<double, kSsimWin>& g) {
  const auto oh = H - kSsimWin + 1, ow = W - kSsimWin + 1;
  std::vector<double> rows(static_cast<std::size_t>(H * ow));
  for (std::int64_t y = 0; y < H; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < kSsimWin; ++k) acc += g[k] * p[y * W + x + k];
      rows[y * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t y = 0; y < oh; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < kSsimWin; ++k) acc += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const Tensor& pred, const Tensor& gt) {
  if (pred.shape() != gt.shape()) {
    throw DimensionError(str_cat("ssim: shapes ", shape_str(pred.shape()), " and ", shape_str(gt.shape())));
  }
  if (pred.rank() != 3 && pred.rank() != 4) throw DimensionError("ssim expects [C, H, W] or [B, C, H, W]");
  const auto H = pred.dim(-2), W = pred.dim(-1);
  if (H < kSsimWin || W < kSsimWin) {
    throw RangeError(str_cat("ssim needs at least ", kSsimWin, "x", kSsimWin, " images, got ", H, "x", W));
  }
  const auto planes = pred.numel() / (H * W);
  const auto a = pred.to_vector(), b = gt.to_vector();
  const auto g = gaussian_window();
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  std::int64_t count = 0;
  std::vector<double> xx(static_cast<std::size_t>(H * W)), yy(xx.size()), xy(xx.size());
  for (std::int64_t p = 0; p < planes; ++p) {
    const double* x = a.data() + p * H * W;
    const double* y = b.data() + p * H * W;
    for (std::int64_t i = 0; i < H * W; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, H, W, g), my = filter_valid(y, H, W, g);
    const auto sxx = filter_valid(xx.data(), H, W, g), syy = filter_valid(yy.data(), H, W, g),
               sxy = filter_valid(xy.data(), H, W, g);
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
      total += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

Matrix gram_linear(const Matrix& s) {
  Matrix g(s.rows, s.rows);
  for (std::int64_t i = 0; i < s.rows; ++i)
    for (std::int64_t j = 0; j <= i; ++j) {
      double acc = 0;
      for (std::int64_t k = 0; k < s.cols; ++k) acc += s(i, k) * s(j, k);
      g(i, j) = g(j, i) = acc;
    }
  return g;
}

namespace {

Matrix center(const Matrix& K) {
  const auto n = K.rows;
  std::vector<double> row_mean(static_cast<std::size_t>(n), 0.0), col_mean(static_cast<std::size_t>(n), 0.0);
  double all = 0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      row_mean[i] += K(i, j) / n;
      col_mean[j] += K(i, j) / n;
      all += K(i, j) / (static_cast<double>(n) * n);
    }
  Matrix c(n, n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) c(i, j) = K(i, j) - row_mean[i] - col_mean[j] + all;
  return c;
}

}  // namespace

double hsic(const Matrix& K, const Matrix& L) {
  if (K.rows != K.cols || L.rows != L.cols || K.rows != L.rows) {
    throw DimensionError(str_cat("hsic: Gram matrices ", K.rows, "x", K.cols, " and ", L.rows, "x", L.cols));
  }
  const auto n = K.rows;
  if (n < 2) throw DomainError("hsic needs at least 2 samples");
  // trace(KHLH) = sum_ij (HKH)_ij L_ji, and HKH is symmetric when K is.
  const Matrix kc = center(K);
  double tr = 0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) tr += kc(i, j) * L(j, i);
  return tr / (static_cast<double>(n - 1) * (n - 1));
}

double cka(const Matrix& K, const Matrix& L) {
  const double kl = hsic(K, L), kk = hsic(K, K), ll = hsic(L, L);
  if (kk <= 0 || ll <= 0) return 0.0;
  return kl / std::sqrt(kk * ll);
}

Reorder reorder_from_string(const std::string& s) {
  if (s == "none") return Reorder::none;
  if (s == "spectral") return Reorder::spectral;
  throw ConfigError("unknown reorder '" + s + "' (expected none or spectral)");
}

Matrix CkaMap::reordered() const {
  const auto C = values.rows;
  Matrix m(C, C);
  for (std::int64_t i = 0; i < C; ++i)
    for (std::int64_t j = 0; j < C; ++j) m(i, j) = values(order[i], order[j]);
  return m;
}

Matrix channel_samples(const Tensor& f, const CkaOptions& opts) {
  if (f.rank() != 4) throw DimensionError("cka features must be [B, C, H, W], got " + shape_str(f.shape()));
  const auto B = f.dim(0), C = f.dim(1), HW = f.dim(2) * f.dim(3);
  const auto n_all = B * HW;
  std::vector<std::int64_t> pick(static_cast<std::size_t>(n_all));
  std::iota(pick.begin(), pick.end(), 0);
  if (opts.max_samples > 0 && n_all > opts.max_samples) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(static_cast<std::size_t>(opts.max_samples));
    std::sort(pick.begin(), pick.end());
  }
  const auto v = f.to_vector();
  const auto n = static_cast<std::int64_t>(pick.size());
  Matrix s(C, n);
  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t k = 0; k < n; ++k) {
      const auto b = pick[k] / HW, p = pick[k] % HW;
      s(c, k) = v[static_cast<std::size_t>((b * C + c) * HW + p)];
    }
  return s;
}

CkaMap cka_map(const Tensor& features, const CkaOptions& opts) {
  const Matrix s = channel_samples(features, opts);
  const auto C = s.rows, n = s.cols;
  if (n < 2) throw DomainError("cka needs at least 2 samples per channel");
  // For one-column sample matrices G_i = x_i x_i^T, so
  // HSIC(G_i, G_j) = (x~_i . x~_j)^2 / (n-1)^2 with x~ the centred vectors.
  Eigen::MatrixXd X(n, C);
  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t k = 0; k < n; ++k) X(k, c) = s(c, k);
  X.rowwise() -= X.colwise().mean();
  const Eigen::MatrixXd cross = X.transpose() * X;
  const double norm = static_cast<double>(n - 1) * (n - 1);

  CkaMap out;
  out.values = Matrix(C, C);
  std::vector<double> self(static_cast<std::size_t>(C));
  for (std::int64_t c = 0; c < C; ++c) {
    self[c] = cross(c, c) * cross(c, c) / norm;
    // Relative threshold: a channel is constant when its centred energy is at
    // round-off level compared with its raw magnitude.
    double raw = 0;
    for (std::int64_t k = 0; k < n; ++k) raw += s(c, k) * s(c, k);
    if (cross(c, c) <= 1e-24 * std::max(raw, 1.0)) out.constant_channels.push_back(c);
  }
  for (auto c : out.constant_channels) {
    std::cerr << "warning: channel " << c << " has zero variance; its CKA row and column are set to 0\n";
  }
  auto is_const = [&](std::int64_t c) {
    return std::find(out.constant_channels.begin(), out.constant_channels.end(), c) != out.constant_channels.end();
  };
  for (std::int64_t i = 0; i < C; ++i)
    for (std::int64_t j = i; j < C; ++j) {
      if (is_const(i) || is_const(j)) continue;
      const double h = cross(i, j) * cross(i, j) / norm;
      out.values(i, j) = out.values(j, i) = i == j ? 1.0 : h / std::sqrt(self[i] * self[j]);
    }
  out.order.resize(static_cast<std::size_t>(C));
  std::iota(out.order.begin(), out.order.end(), 0);
  if (opts.reorder == Reorder::spectral) out.order = spectral_order(out.values);
  return out;
}

std::vector<std::int64_t> spectral_order(const Matrix& a) {
  const auto C = a.rows;
  std::vector<std::int64_t> order(static_cast<std::size_t>(C));
  std::iota(order.begin(), order.end(), 0);
  if (C < 3) return order;
  Eigen::VectorXd deg(C);
  for (std::int64_t i = 0; i < C; ++i) {
    double d = 0;
    for (std::int64_t j = 0; j < C; ++j) d += a(i, j);
    deg(i) = d;
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(C, C);
  for (std::int64_t i = 0; i < C; ++i)
    for (std::int64_t j = 0; j < C; ++j)
      if (deg(i) > 0 && deg(j) > 0) L(i, j) -= a(i, j) / std::sqrt(deg(i) * deg(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  Eigen::VectorXd v = es.eigenvectors().col(1);
  for (std::int64_t i = 0; i < C; ++i) v(i) = deg(i) > 0 ? v(i) / std::sqrt(deg(i)) : 0.0;
  // Fix the eigenvector's sign so the ordering is deterministic.
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  if (v(big) < 0) v = -v;
  // Isolated (constant) channels go last.
  for (std::int64_t i = 0; i < C; ++i)
    if (deg(i) <= 0) v(i) = std::numeric_limits<double>::infinity();
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t x, std::int64_t y) { return v(x) < v(y); });
  return order;
}

void write_matrix_csv(std::ostream& os, const Matrix& m, const std::vector<std::int64_t>& order) {
  os << "channel";
  for (auto c : order) os << ",c" << c;
  os << '\n' << std::setprecision(8);
  for (auto i : order) {
    os << 'c' << i;
    for (auto j : order) os << ',' << m(i, j);
    os << '\n';
  }
}

Triplet batch_of(const BlurTriplet& tr, DType dtype) {
  auto lift = [&](const Tensor& f) {
    Tensor x = reshape(f, {1, f.dim(0), f.dim(1), f.dim(2)});
    return x.dtype() == dtype ? x : x.to(dtype);
  };
  return {lift(tr.prev), lift(tr.cur), lift(tr.nxt)};
}

std::vector<double> uniform_t_grid(int k) {
  if (k < 1) throw DomainError(str_cat("t count ", k, " must be positive"));
  if (k == 1) return {0.5};
  std::vector<double> ts(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) ts[i] = static_cast<double>(i) / (k - 1);
  ts.back() = 1.0;
  return ts;
}

std::vector<Tensor> interpolate(BiT& model, const Triplet& frames, const std::vector<double>& ts, bool ensemble) {
  NoGradGuard ng;
  const bool was_training = model.training();
  model.set_training(false);
  Tensor fwd = model.extract_shared(frames);
  Tensor bwd = ensemble ? model.extract_shared(frames.reversed()) : Tensor();
  std::vector<Tensor> out;
  for (double t : ts) {
    out.push_back(ensemble ? model.tse_fuse({model.render_features(fwd, t), model.render_features(bwd, 1.0 - t)},
                                            frames.cur)
                           : model.render_motion(fwd, t, frames.cur));
  }
  model.set_training(was_training);
  return out;
}

MetricReport evaluate(BiT& model, const std::vector<BlurTriplet>& data, bool ensemble) {
  MetricReport rep;
  std::vector<double> psum, ssum;
  for (const auto& tr : data) {
    if (psum.empty()) {
      psum.assign(tr.t.size(), 0.0);
      ssum.assign(tr.t.size(), 0.0);
      for (double t : tr.t) rep.per_t.push_back({t, 0, 0});
    }
    if (tr.t.size() != rep.per_t.size()) throw ConfigError("triplets disagree on the t grid");
    const auto preds = interpolate(model, batch_of(tr, model.config().dtype), tr.t, ensemble);
    for (std::size_t m = 0; m < tr.t.size(); ++m) {
      const Tensor& gt = tr.targets[m];
      Tensor gt4 = reshape(gt, {1, gt.dim(0), gt.dim(1), gt.dim(2)});
      const double p = psnr(preds[m], gt4);
      const double s = std::min(gt.dim(1), gt.dim(2)) >= 11 ? ssim(preds[m], gt4) : std::nan("");
      rep.frame_psnr.push_back(p);
      rep.frame_ssim.push_back(s);
      psum[m] += p;
      ssum[m] += s;
    }
  }
  if (data.empty()) return rep;
  for (std::size_t m = 0; m < rep.per_t.size(); ++m) {
    rep.per_t[m].psnr = psum[m] / static_cast<double>(data.size());
    rep.per_t[m].ssim = ssum[m] / static_cast<double>(data.size());
  }
  rep.mean_psnr = std::accumulate(rep.frame_psnr.begin(), rep.frame_psnr.end(), 0.0) / rep.frame_psnr.size();
  rep.mean_ssim = std::accumulate(rep.frame_ssim.begin(), rep.frame_ssim.end(), 0.0) / rep.frame_ssim.size();
  return rep;
}

std::vector<TimePoint> time_varying_eval(BiT& model, const std::vector<BlurTriplet>& data, bool ensemble) {
  return evaluate(model, data, ensemble).per_t;
}

void write_curve_csv(std::ostream& os, const std::vector<TimePoint>& curve) {
  os << "t,psnr,ssim\n" << std::setprecision(8);
  for (const auto& p : curve) os << p.t << ',' << p.psnr << ',' << p.ssim << '\n';
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_linear needs at least two (x, y) pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LinearFit f;
  f.b = sxx > 0 ? sxy / sxx : 0.0;
  f.a = my - f.b * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    f.max_rel_residual = std::max(f.max_rel_residual, std::abs(y[i] - (f.a + f.b * x[i])) / std::abs(y[i]));
  }
  return f;
}

std::vector<BenchRow> bench_amortization(BiT& model, const Triplet& frames, const BenchOptions& opts) {
  using clock = std::chrono::steady_clock;
  NoGradGuard ng;
  const bool was_training = model.training();
  model.set_training(false);
  auto run = [&](int k, BenchRow& row) {
    model.reset_extract_calls();
    const auto t0 = clock::now();
    Tensor shared = model.extract_shared(frames);
    const auto t1 = clock::now();
    for (int i = 0; i < k; ++i) {
      const double t = k == 1 ? 0.5 : static_cast<double>(i) / (k - 1);
      model.render_motion(shared, t, frames.cur);
    }
    const auto t2 = clock::now();
    row.shared_s = std::chrono::duration<double>(t1 - t0).count();
    row.render_s = std::chrono::duration<double>(t2 - t1).count();
    row.total_s = row.shared_s + row.render_s;
    row.shared_calls = model.extract_calls();
  };
  BenchRow scratch;
  for (int w = 0; w < opts.warmup; ++w) run(1, scratch);
  std::vector<BenchRow> rows;
  for (int k : opts.ks) {
    BenchRow best;
    best.k = k;
    best.total_s = std::numeric_limits<double>::infinity();
    rows.push_back(best);
  }
  // Repeats interleaved across K.
  for (int r = 0; r < std::max(1, opts.repeats); ++r) {
    for (auto& best : rows) {
      BenchRow row;
      row.k = best.k;
      run(best.k, row);
      if (row.total_s < best.total_s) best = row;
    }
  }
  model.set_training(was_training);
  return rows;
}

LinearFit fit_bench(const std::vector<BenchRow>& rows) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.k);
    y.push_back(r.total_s);
  }
  return fit_linear(x, y);
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "k,total_s,shared_s,render_s,shared_calls\n" << std::setprecision(6);
  for (const auto& r : rows) {
    os << r.k << ',' << r.total_s << ',' << r.shared_s << ',' << r.render_s << ',' << r.shared_calls << '\n';
  }
}

FlopRatio ms_rstb_flop_ratio(const BiTConfig& cfg, std::int64_t h, std::int64_t w) {
  cfg.validate();
  Rng rng(0);
  MsRstbParams p(cfg, rng);
  NoGradGuard ng;
  Tensor x = Tensor::zeros({1, cfg.channels, h, w}, cfg.dtype);
  FlopRatio r;
  reset_flop_counter();
  rstb_forward(x, p.rstb);
  r.rstb = flop_counter().matmul_flops;
  reset_flop_counter();
  ms_rstb_forward(x, p);
  r.ms_rstb = flop_counter().matmul_flops;
  reset_flop_counter();
  r.measured = static_cast<double>(r.ms_rstb) / static_cast<double>(r.rstb);
  const double q = 1.0 / (static_cast<double>(cfg.ratio) * cfg.ratio);
  r.closed_form = (1 - std::pow(q, cfg.scales)) / (1 - q);
  return r;
}

}  // namespace bit
