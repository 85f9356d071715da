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

// bit: synthesis, training, inference, evaluation, CKA and benchmarking.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 numerical abort.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "app.hpp"
#include "bit/config.hpp"

namespace {

using namespace bit;
namespace fs = std::filesystem;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string profile = "tiny";
  fs::path config;
  fs::path out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--profile", c.profile, "Starting settings: tiny or paper")->check(CLI::IsMember({"tiny", "paper"}));
  cmd->add_option("--config", c.config, "JSON config overriding the profile")->check(CLI::ExistingFile);
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
  cmd->add_flag("-q,--quiet", c.quiet, "Suppress progress logging");
}

// defaults < profile < config file < flags.
TrainConfig resolve(const Common& c) {
  TrainConfig cfg = train_profile(c.profile);
  if (!c.config.empty()) cfg = load_train_config(c.config, cfg);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blur interpolation transformer toolkit"};
  app.require_subcommand(1);
  Common common;

  // synth
  app::SynthArgs synth_args;
  std::string capture = "rbi", mode;
  auto* synth = app.add_subcommand("synth", "Write a synthetic blur dataset");
  add_common(synth, common);
  synth->add_option("--split", synth_args.split, "Split directory name");
  synth->add_option("--scenes", synth_args.opts.scenes, "Number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--blur-per-scene", synth_args.opts.blur_per_scene, "Blurred frames per scene")
      ->check(CLI::Range(3, 1000));
  synth->add_option("--height", synth_args.opts.height, "Frame height")->check(CLI::PositiveNumber);
  synth->add_option("--width", synth_args.opts.width, "Frame width")->check(CLI::PositiveNumber);
  synth->add_option("--capture", capture, "Capture preset: rbi or adobe240")->check(CLI::IsMember({"rbi", "adobe240"}));
  synth->add_option("--mode", mode, "Blur synthesis: discrete or continuous")
      ->check(CLI::IsMember({"discrete", "continuous"}));
  synth->add_option("--bit-depth", synth_args.opts.bit_depth, "PNG bit depth")->check(CLI::IsMember({8, 16}));

  // train
  app::TrainArgs train_args;
  std::optional<std::int64_t> steps;
  std::optional<double> lr;
  auto* train = app.add_subcommand("train", "Train a model (base phase, or ensemble fine-tuning with --tse-from)");
  add_common(train, common);
  train->add_option("--data", train_args.data, "Dataset root")->required();
  train->add_option("--split", train_args.split, "Split to train on");
  train->add_option("--subset", train_args.subset, "all triplets or the centre triplet of each sequence")
      ->check(CLI::IsMember({"all", "centre"}));
  train->add_option("--resume", train_args.resume, "Training checkpoint to continue from")->check(CLI::ExistingFile);
  train->add_option("--tse-from", train_args.tse_from, "Base checkpoint to fine-tune with the ensemble head")
      ->check(CLI::ExistingFile);
  train->add_option("--steps", steps, "Override the step count of the phase")->check(CLI::PositiveNumber);
  train->add_option("--lr", lr, "Override the initial learning rate")->check(CLI::PositiveNumber);
  train->add_option("--checkpoint-every", train_args.checkpoint_every, "Checkpoint interval in steps");

  // infer
  app::InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "Render sharp frames at query times");
  add_common(infer, common);
  infer->add_option("--ckpt", infer_args.ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  infer->add_option("--data", infer_args.data, "Sequence directory or dataset root")->required();
  infer->add_option("--split", infer_args.split, "Split when --data is a dataset root");
  auto* t_list = infer->add_option("--t", infer_args.ts, "Query times in [0, 1]")->delimiter(',');
  infer->add_option("--t-count", infer_args.t_count, "Uniform grid of K times including 0 and 1")
      ->excludes(t_list)
      ->check(CLI::PositiveNumber);
  infer->add_flag("--ensemble", infer_args.ensemble, "Use the symmetric ensemble head");
  infer->add_option("--index", infer_args.index, "Only this triplet index");

  // eval
  app::EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "PSNR / SSIM per query time");
  add_common(eval, common, false);
  eval->add_option("--ckpt", eval_args.ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_args.data, "Dataset root or sequence directory")->required();
  eval->add_option("--split", eval_args.split, "Split to evaluate");
  eval->add_option("--subset", eval_args.subset, "all or centre")->check(CLI::IsMember({"all", "centre"}));
  eval->add_option("--report", eval_args.report, "JSON report path");
  eval->add_option("--curve", eval_args.curve, "CSV of the per-t curve (t,psnr,ssim)");
  eval->add_flag("--ensemble", eval_args.ensemble, "Use the symmetric ensemble head");

  // cka
  app::CkaArgs cka_args;
  std::string reorder = "none";
  auto* cka = app.add_subcommand("cka", "Channel similarity of the shared features");
  add_common(cka, common);
  cka->add_option("--ckpt", cka_args.ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  cka->add_option("--data", cka_args.data, "Dataset root or sequence directory")->required();
  cka->add_option("--split", cka_args.split, "Split to draw triplets from");
  cka->add_option("--triplets", cka_args.triplets, "Number of triplets pooled")->check(CLI::PositiveNumber);
  cka->add_option("--max-samples", cka_args.opts.max_samples, "Positions sampled per channel (0 keeps all)");
  cka->add_option("--reorder", reorder, "none or spectral")->check(CLI::IsMember({"none", "spectral"}));

  // bench
  app::BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time K queries from one shared-feature pass");
  add_common(bench, common);
  bench->add_option("--ckpt", bench_args.ckpt, "Model checkpoint (random tiny model if absent)")
      ->check(CLI::ExistingFile);
  bench->add_option("--k", bench_args.ks, "Query counts")->delimiter(',');
  bench->add_option("--size", bench_args.size, "Square input size");
  bench->add_option("--repeats", bench_args.repeats, "Repeats per K (minimum kept)")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", bench_args.warmup, "Warmup passes");
  bench->add_option("--sweep-total", bench_args.sweep_total, "Also sweep N with N + M fixed to this total");

  // repro
  app::ReproArgs repro_args;
  auto* repro = app.add_subcommand("repro", "synth, train, fine-tune, eval, cka and bench in one run");
  add_common(repro, common);
  repro->add_flag("--resume", repro_args.resume, "Continue from checkpoints left in --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  app::set_quiet(common.quiet);
  try {
    if (*synth) {
      if (capture == "adobe240") synth_args.opts.capture = CaptureConfig::adobe240();
      if (!mode.empty()) synth_args.opts.capture.mode = blur_mode_from_string(mode);
      synth_args.opts.seed = common.seed.value_or(0);
      synth_args.out = common.out;
      app::synth(synth_args);
    } else if (*train) {
      train_args.cfg = resolve(common);
      if (steps) {
        (train_args.tse_from.empty() ? train_args.cfg.optim.steps : train_args.cfg.optim.tse_steps) = *steps;
      }
      if (lr) train_args.cfg.optim.lr_start = *lr;
      train_args.cfg.validate();
      train_args.out = common.out;
      app::train(train_args);
    } else if (*infer) {
      infer_args.out = common.out;
      app::infer(infer_args);
    } else if (*eval) {
      app::eval(eval_args);
    } else if (*cka) {
      cka_args.opts.reorder = reorder_from_string(reorder);
      cka_args.opts.seed = common.seed.value_or(0);
      cka_args.out = common.out;
      app::cka(cka_args);
    } else if (*bench) {
      bench_args.seed = common.seed.value_or(0);
      bench_args.out = common.out;
      const auto j = app::bench(bench_args);
      std::cout << j.dump(2) << '\n';
    } else if (*repro) {
      repro_args.profile = common.profile;
      repro_args.seed = common.seed.value_or(0);
      repro_args.out = common.out;
      const auto report = app::repro(repro_args);
      return report["failed"].get<int>() == 0 ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
