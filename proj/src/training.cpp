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

#include "bit/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "bit/analysis.hpp"
#include "bit/checkpoint.hpp"
#include "bit/config.hpp"
#include "json.hpp"

namespace bit {

void LossConfig::validate() const {
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw ConfigError(str_cat("lambda ", lambda, " must be >= 0"));
}

void OptimConfig::validate() const {
  if (!(lr_start > 0) || !(lr_end >= 0)) throw ConfigError("learning rates must be positive");
  if (lr_end > lr_start) throw ConfigError(str_cat("lr_end ", lr_end, " exceeds lr_start ", lr_start));
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw ConfigError("betas must lie in [0, 1)");
  if (weight_decay < 0 || !(eps > 0)) throw ConfigError("weight_decay must be >= 0 and eps > 0");
  if (steps < 1 || tse_steps < 0) throw ConfigError("steps must be positive");
  if (batch < 1 || accumulate < 1 || batch % accumulate != 0) {
    throw ConfigError(str_cat("batch ", batch, " must be a positive multiple of accumulate ", accumulate));
  }
  if (clip_norm < 0 || crop < 0) throw ConfigError("clip_norm and crop must be non-negative");
  if (crop > 0 && crop % 4 != 0) throw ConfigError(str_cat("crop ", crop, " must be a multiple of 4"));
}

void TrainConfig::validate() const {
  model.validate();
  optim.validate();
  loss.validate();
  if (log_every < 1) throw ConfigError("log_every must be positive");
}

std::string to_string(Phase p) { return p == Phase::base ? "base" : "tse"; }

Phase phase_from_string(const std::string& s) {
  if (s == "base") return Phase::base;
  if (s == "tse") return Phase::tse;
  throw ConfigError("unknown phase '" + s + "'");
}

LossTerms total_loss(const Tensor& pred_t, const Tensor& gt_t, const Tensor& pred_0, const Tensor& gt_0,
                     const Tensor& pred_1, const Tensor& gt_1, double lambda) {
  LossTerms out;
  out.total = l1_loss(pred_t, gt_t);
  out.loss_t = out.total.item();
  if (pred_0.defined() && pred_1.defined()) {
    Tensor l0 = l1_loss(pred_0, gt_0), l1 = l1_loss(pred_1, gt_1);
    out.loss_0 = l0.item();
    out.loss_1 = l1.item();
    if (lambda != 0.0) out.total = add(out.total, scale(add(l0, l1), lambda));
  }
  return out;
}

std::size_t sample_t_index(const std::vector<double>& grid, std::mt19937_64& rng) {
  if (grid.empty()) throw DomainError("cannot sample t from an empty grid");
  return std::uniform_int_distribution<std::size_t>(0, grid.size() - 1)(rng);
}

double sample_t(const std::vector<double>& grid, std::mt19937_64& rng) { return grid[sample_t_index(grid, rng)]; }

double cosine_lr(std::int64_t step, std::int64_t total, double lr_start, double lr_end) {
  if (total < 1 || step < 0 || step > total) {
    throw DomainError(str_cat("cosine_lr step ", step, " outside [0, ", total, "]"));
  }
  if (step == 0) return lr_start;
  if (step == total) return lr_end;
  const double c = std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total));
  return lr_end + (lr_start - lr_end) * (1 + c) / 2;
}

AdamW::AdamW(ParamList params, const OptimConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const auto& p : params_) {
    m_.push_back(Tensor::zeros(p.tensor.shape(), p.tensor.dtype()));
    v_.push_back(Tensor::zeros(p.tensor.shape(), p.tensor.dtype()));
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor p = params_[i].tensor;
    if (!p.has_grad()) continue;
    Tensor g = p.grad();
    dispatch(p.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto pd = p.mutable_data<T>();
      auto md = m_[i].mutable_data<T>();
      auto vd = v_[i].mutable_data<T>();
      auto gd = g.data<T>();
      const double b1 = cfg_.beta1, b2 = cfg_.beta2, wd = cfg_.weight_decay, eps = cfg_.eps;
      for (std::size_t j = 0; j < pd.size(); ++j) {
        const double gj = gd[j];
        double pj = pd[j];
        pj -= lr * wd * pj;
        const double mj = b1 * md[j] + (1 - b1) * gj;
        const double vj = b2 * vd[j] + (1 - b2) * gj * gj;
        md[j] = static_cast<T>(mj);
        vd[j] = static_cast<T>(vj);
        pj -= lr * (mj / bc1) / (std::sqrt(vj / bc2) + eps);
        pd[j] = static_cast<T>(pj);
      }
    });
  }
}

ParamList AdamW::state() const {
  ParamList out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.push_back({"optim.m." + params_[i].name, m_[i]});
    out.push_back({"optim.v." + params_[i].name, v_[i]});
  }
  out.push_back({"optim.step", Tensor::scalar(static_cast<double>(t_), DType::f64)});
  return out;
}

void AdamW::load_state(const ParamList& state) {
  std::unordered_map<std::string, const Tensor*> by;
  for (const auto& s : state) by[s.name] = &s.tensor;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (auto [prefix, dst] : {std::pair{"optim.m.", &m_[i]}, std::pair{"optim.v.", &v_[i]}}) {
      auto it = by.find(prefix + params_[i].name);
      if (it != by.end()) assign_values(*dst, *it->second);
    }
  }
  if (auto it = by.find("optim.step"); it != by.end()) t_ = static_cast<std::int64_t>(it->second->item());
}

double grad_norm(const ParamList& params) {
  double s = 0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad().to_vector()) s += g * g;
  }
  return std::sqrt(s);
}

Batch make_batch(const std::vector<BlurTriplet>& samples, const std::vector<std::size_t>& t_index, DType dtype) {
  if (samples.empty() || samples.size() != t_index.size()) throw DimensionError("make_batch: empty or mismatched batch");
  auto stack = [&](auto&& pick) {
    std::vector<Tensor> parts;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Tensor& f = pick(i);
      Tensor x = reshape(f, {1, f.dim(0), f.dim(1), f.dim(2)});
      parts.push_back(x.dtype() == dtype ? x : x.to(dtype));
    }
    return parts.size() == 1 ? parts[0] : concat(parts, 0);
  };
  Batch b;
  b.frames.prev = stack([&](std::size_t i) -> const Tensor& { return samples[i].prev; });
  b.frames.cur = stack([&](std::size_t i) -> const Tensor& { return samples[i].cur; });
  b.frames.nxt = stack([&](std::size_t i) -> const Tensor& { return samples[i].nxt; });
  b.gt_t = stack([&](std::size_t i) -> const Tensor& { return samples[i].targets.at(t_index[i]); });
  b.gt_0 = stack([&](std::size_t i) -> const Tensor& { return samples[i].targets.front(); });
  b.gt_1 = stack([&](std::size_t i) -> const Tensor& { return samples[i].targets.back(); });
  for (std::size_t i = 0; i < samples.size(); ++i) b.t.push_back(samples[i].t.at(t_index[i]));
  return b;
}

LossTerms compute_loss(const BiT& model, const Batch& batch, const LossConfig& loss, Phase phase, Tensor* prediction) {
  Tensor shared = model.extract_shared(batch.frames);
  Tensor pred;
  if (phase == Phase::base) {
    pred = model.render_motion(shared, batch.t, batch.frames.cur);
  } else {
    std::vector<double> flipped;
    for (double t : batch.t) flipped.push_back(1.0 - t);
    Tensor reversed = model.extract_shared(batch.frames.reversed());
    pred = model.tse_fuse({model.render_features(shared, batch.t), model.render_features(reversed, flipped)},
                          batch.frames.cur);
  }
  if (prediction) *prediction = pred;
  if (!loss.dts) return total_loss(pred, batch.gt_t, Tensor(), Tensor(), Tensor(), Tensor(), 0.0);
  auto [p0, p1] = model.dual_end_reconstruct(shared, batch.frames.cur);
  return total_loss(pred, batch.gt_t, p0, batch.gt_0, p1, batch.gt_1, loss.lambda);
}

StepMetrics train_step(BiT& model, AdamW& optim, const std::vector<Batch>& micro, double lr, const LossConfig& loss,
                       Phase phase, double clip_norm, std::int64_t step) {
  if (micro.empty()) throw DimensionError("train_step needs at least one micro-batch");
  if (!model.training()) throw ModeError("train_step requires training mode");
  std::int64_t total = 0;
  for (const auto& b : micro) total += b.frames.cur.dim(0);
  optim.zero_grad();
  StepMetrics m;
  m.step = step;
  m.lr = lr;
  double se = 0;
  std::int64_t count = 0;
  for (const auto& b : micro) {
    const double w = static_cast<double>(b.frames.cur.dim(0)) / static_cast<double>(total);
    Tensor pred;
    LossTerms terms = compute_loss(model, b, loss, phase, &pred);
    const double value = terms.total.item();
    if (!std::isfinite(value)) {
      throw NumericalError(str_cat("non-finite loss at step ", step, " (lr ", lr, ", loss_t ", terms.loss_t,
                                   ", loss_0 ", terms.loss_0, ", loss_1 ", terms.loss_1, ")"));
    }
    scale(terms.total, w).backward();
    m.loss += w * value;
    m.loss_t += w * terms.loss_t;
    m.loss_0 += w * terms.loss_0;
    m.loss_1 += w * terms.loss_1;
    const auto p = pred.to_vector(), g = b.gt_t.to_vector();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = std::clamp(p[i], 0.0, 1.0) - g[i];
      se += d * d;
    }
    count += static_cast<std::int64_t>(p.size());
  }
  m.psnr_train = psnr_from_mse(se / static_cast<double>(count));
  const double norm = grad_norm(optim.params());
  if (!std::isfinite(norm)) {
    throw NumericalError(str_cat("non-finite gradient at step ", step, " (lr ", lr, ", loss_t ", m.loss_t,
                                 ", loss_0 ", m.loss_0, ", loss_1 ", m.loss_1, ")"));
  }
  if (clip_norm > 0 && norm > clip_norm) {
    const double f = clip_norm / norm;
    for (const auto& p : optim.params()) {
      if (!p.tensor.has_grad()) continue;
      Tensor g = p.tensor.grad();
      dispatch(g.dtype(), [&](auto tag) {
        using T = decltype(tag);
        for (auto& x : g.mutable_data<T>()) x = static_cast<T>(x * f);
      });
    }
  }
  optim.step(lr);
  return m;
}

void write_log_header(std::ostream& os) { os << "step,lr,loss_t,loss_0,loss_1,psnr_train\n"; }

void write_log_row(std::ostream& os, const StepMetrics& m) {
  os << m.step << ',' << std::setprecision(8) << m.lr << ',' << m.loss_t << ',' << m.loss_0 << ',' << m.loss_1 << ','
     << m.psnr_train << '\n';
}

Trainer::Trainer(BiT& model, const TrainConfig& cfg, std::vector<BlurTriplet> data)
    : model_(model), cfg_(cfg), data_(std::move(data)), optim_(model.parameters(), cfg.optim) {
  cfg_.validate();
  if (data_.empty()) throw ConfigError("no training triplets");
  model_.set_training(true);
}

std::int64_t Trainer::total_steps() const { return cfg_.phase == Phase::base ? cfg_.optim.steps : cfg_.optim.tse_steps; }

std::vector<Batch> Trainer::batches_for(std::int64_t step) const {
  std::mt19937_64 rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(step)));
  const auto B = cfg_.optim.batch, micro = B / cfg_.optim.accumulate;
  std::vector<BlurTriplet> samples;
  std::vector<std::size_t> t_idx;
  for (std::int64_t i = 0; i < B; ++i) {
    // With a batch at least as large as the data, every triplet appears
    // once per step (in order); otherwise triplets are drawn uniformly.
    const auto pick = B >= static_cast<std::int64_t>(data_.size())
                          ? static_cast<std::size_t>(i) % data_.size()
                          : static_cast<std::size_t>(rng() % data_.size());
    BlurTriplet tr = data_[pick];
    const std::uint64_t aug_seed = rng();
    if (cfg_.optim.augment) {
      tr = augment(tr, aug_seed, cfg_.optim.crop);
    } else if (cfg_.optim.crop > 0) {
      AugmentPlan plan = plan_augment(tr.cur.dim(1), tr.cur.dim(2), aug_seed, cfg_.optim.crop);
      plan.hflip = plan.vflip = false;
      plan.rot = 0;
      auto f = [&](const Tensor& x) { return apply_augment(x, plan, cfg_.optim.crop); };
      tr.prev = f(tr.prev);
      tr.cur = f(tr.cur);
      tr.nxt = f(tr.nxt);
      for (auto& t : tr.targets) t = f(t);
    }
    t_idx.push_back(sample_t_index(tr.t, rng));
    samples.push_back(std::move(tr));
  }
  std::vector<Batch> out;
  for (std::int64_t s = 0; s < B; s += micro) {
    std::vector<BlurTriplet> part(samples.begin() + s, samples.begin() + s + micro);
    std::vector<std::size_t> idx(t_idx.begin() + s, t_idx.begin() + s + micro);
    out.push_back(make_batch(part, idx, cfg_.model.dtype));
  }
  return out;
}

StepMetrics Trainer::step() {
  const auto total = total_steps();
  if (step_ >= total) throw RangeError(str_cat("training already finished (", total, " steps)"));
  const double lr = cosine_lr(step_, total, cfg_.optim.lr_start, cfg_.optim.lr_end);
  StepMetrics m = train_step(model_, optim_, batches_for(step_), lr, cfg_.loss, cfg_.phase, cfg_.optim.clip_norm, step_);
  ++step_;
  return m;
}

void Trainer::run(std::ostream* csv, std::int64_t until, const std::function<void(const StepMetrics&)>& on_log) {
  const auto end = until >= 0 ? std::min(until, total_steps()) : total_steps();
  while (step_ < end) {
    StepMetrics m = step();
    if (m.step % cfg_.log_every == 0 || step_ == total_steps()) {
      if (csv) write_log_row(*csv, m);
      if (on_log) on_log(m);
    }
  }
}

void Trainer::save(const std::filesystem::path& path) const {
  ParamList all = model_.parameters();
  for (auto& s : optim_.state()) all.push_back(s);
  save_checkpoint(path, all);
  nlohmann::ordered_json side;
  side["config"] = nlohmann::ordered_json::parse(to_json(cfg_));
  side["step"] = step_;
  std::ofstream(path.string() + ".json") << side.dump(2) << '\n';
}

void Trainer::resume(const std::filesystem::path& path) {
  const ParamList stored = load_checkpoint(path);
  assign_params(model_.parameters(), stored, true);
  optim_.load_state(stored);
  const auto side_path = std::filesystem::path(path.string() + ".json");
  if (!std::filesystem::exists(side_path)) throw ConfigError("missing sidecar " + side_path.string());
  const auto side = nlohmann::json::parse(read_text(side_path));
  step_ = side.at("step").get<std::int64_t>();
  const auto phase = phase_from_string(side.at("config").at("phase").get<std::string>());
  if (phase != cfg_.phase) throw ConfigError("checkpoint phase differs from the configured phase");
}

void load_for_finetune(BiT& model, const std::filesystem::path& base_ckpt) {
  const ParamList stored = load_checkpoint(base_ckpt);
  ParamList targets;
  for (const auto& p : model.parameters())
    if (p.name.rfind("head.tse.", 0) != 0) targets.push_back(p);
  assign_params(targets, stored, true);
}

void export_inference(const BiT& model, const std::filesystem::path& path) {
  save_checkpoint(path, model.inference_parameters());
  nlohmann::ordered_json side;
  side["model"] = nlohmann::ordered_json::parse(to_json(model.config()));
  std::ofstream(path.string() + ".json") << side.dump(2) << '\n';
}

std::unique_ptr<BiT> load_model(const std::filesystem::path& path) {
  const auto side_path = std::filesystem::path(path.string() + ".json");
  if (!std::filesystem::exists(side_path)) throw ConfigError("missing sidecar " + side_path.string());
  const auto side = nlohmann::json::parse(read_text(side_path));
  const auto& model_json = side.contains("model") ? side.at("model") : side.at("config").at("model");
  BiTConfig cfg;
  merge_json(cfg, model_json.dump());
  auto model = std::make_unique<BiT>(cfg);
  assign_params(model->parameters(), load_checkpoint(path), false);
  model->set_training(false);
  return model;
}

}  // namespace bit
