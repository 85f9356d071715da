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

// Base training with dual-end supervision, then ensemble fine-tuning.
//
//   loss = L1(pred_t, gt_t) + lambda * (L1(pred_0, gt_0) + L1(pred_1, gt_1))
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "bit/blur.hpp"
#include "bit/network.hpp"

namespace bit {

struct LossConfig {
  double lambda = 0.5;
  /// When false the dual-end head is neither evaluated nor trained.
  bool dts = true;
  void validate() const;
};

struct OptimConfig {
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-2;
  double eps = 1e-8;
  std::int64_t steps = 2000;
  /// Fine-tuning steps; base:fine-tune defaults to 2:1.
  std::int64_t tse_steps = 1000;
  std::int64_t batch = 4;
  /// Micro-batches per step; batch must be divisible by it.
  std::int64_t accumulate = 1;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
  /// Square crop per sample; 0 trains on full frames.
  std::int64_t crop = 0;
  bool augment = false;
  void validate() const;
};

enum class Phase { base, tse };
std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

struct TrainConfig {
  BiTConfig model = BiTConfig::tiny();
  OptimConfig optim;
  LossConfig loss;
  std::uint64_t seed = 0;
  Phase phase = Phase::base;
  std::int64_t log_every = 50;

  void validate() const;
};

/// `loss` = total, `parts` = (L1 at t, L1 at 0, L1 at 1). Missing end-point
/// predictions (undefined tensors) contribute nothing.
struct LossTerms {
  Tensor total;
  double loss_t = 0, loss_0 = 0, loss_1 = 0;
};

LossTerms total_loss(const Tensor& pred_t, const Tensor& gt_t, const Tensor& pred_0, const Tensor& gt_0,
                     const Tensor& pred_1, const Tensor& gt_1, double lambda);

/// Index into `grid`, uniform. DomainError on an empty grid.
std::size_t sample_t_index(const std::vector<double>& grid, std::mt19937_64& rng);
double sample_t(const std::vector<double>& grid, std::mt19937_64& rng);

/// lr_end + (lr_start - lr_end) (1 + cos(pi step / total)) / 2.
/// DomainError unless 0 <= step <= total.
double cosine_lr(std::int64_t step, std::int64_t total, double lr_start, double lr_end);

/// Decoupled-weight-decay Adam over a fixed parameter list. Parameters
/// without a gradient are left untouched.
class AdamW {
 public:
  AdamW(ParamList params, const OptimConfig& cfg);
  void step(double lr);
  void zero_grad();
  std::int64_t steps_taken() const { return t_; }
  const ParamList& params() const { return params_; }

  /// Moments as "optim.m.<name>" / "optim.v.<name>" plus "optim.step".
  ParamList state() const;
  /// Restores state(); missing moments stay zero.
  void load_state(const ParamList& state);

 private:
  ParamList params_;
  std::vector<Tensor> m_, v_;
  OptimConfig cfg_;
  std::int64_t t_ = 0;
};

/// Global L2 norm of the gradients present on `params`.
double grad_norm(const ParamList& params);

struct Batch {
  Triplet frames;          // [B, 3, H, W] each
  std::vector<double> t;   // one per sample
  Tensor gt_t, gt_0, gt_1;
};

/// Stacks samples (with their t indices) into a batch of the given dtype.
Batch make_batch(const std::vector<BlurTriplet>& samples, const std::vector<std::size_t>& t_index, DType dtype);

/// Forward pass of one batch for the given phase. In the ensemble phase the
/// dual-end head reads the forward branch's shared features.
LossTerms compute_loss(const BiT& model, const Batch& batch, const LossConfig& loss, Phase phase,
                       Tensor* prediction = nullptr);

struct StepMetrics {
  std::int64_t step = 0;
  double lr = 0;
  double loss = 0, loss_t = 0, loss_0 = 0, loss_1 = 0;
  double psnr_train = 0;
};

/// One optimizer update over the micro-batches (gradients summed, each
/// micro-batch loss weighted by its share of the samples). Throws
/// NumericalError with a diagnostic on a non-finite loss or gradient.
StepMetrics train_step(BiT& model, AdamW& optim, const std::vector<Batch>& micro, double lr, const LossConfig& loss,
                       Phase phase, double clip_norm = 0.0, std::int64_t step = 0);

void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, const StepMetrics& m);

/// Drives training over an in-memory triplet set. Sampling at step s depends
/// only on (seed, s), so a resumed run retraces the uninterrupted one.
class Trainer {
 public:
  Trainer(BiT& model, const TrainConfig& cfg, std::vector<BlurTriplet> data);

  /// Batch drawn for `step` (samples, t indices and augmentation).
  std::vector<Batch> batches_for(std::int64_t step) const;
  StepMetrics step();
  /// Runs until `total_steps()` or `until` (if smaller); logs every
  /// cfg.log_every steps and on the last step.
  void run(std::ostream* csv = nullptr, std::int64_t until = -1,
           const std::function<void(const StepMetrics&)>& on_log = {});

  std::int64_t current_step() const { return step_; }
  std::int64_t total_steps() const;
  const TrainConfig& config() const { return cfg_; }
  AdamW& optimizer() { return optim_; }

  /// Model tensors and optimizer state in one checkpoint plus a JSON sidecar
  /// (`<path>.json`) holding the config and step.
  void save(const std::filesystem::path& path) const;
  void resume(const std::filesystem::path& path);

 private:
  BiT& model_;
  TrainConfig cfg_;
  std::vector<BlurTriplet> data_;
  AdamW optim_;
  std::int64_t step_ = 0;
};

/// Loads base-phase weights (everything except head.tse.*) from a checkpoint
/// into `model`. ConfigError on a shape mismatch such as a channel change.
void load_for_finetune(BiT& model, const std::filesystem::path& base_ckpt);

/// Writes the inference export (no head.dts.*) and a `<path>.json` sidecar
/// holding the model config.
void export_inference(const BiT& model, const std::filesystem::path& path);

/// Rebuilds a model from a checkpoint written by export_inference or
/// Trainer::save (config read from the sidecar). Tensors absent from the
/// checkpoint keep their seeded initial values.
std::unique_ptr<BiT> load_model(const std::filesystem::path& path);

}  // namespace bit
