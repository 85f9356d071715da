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

// Sub-command implementations shared by the `bit` executable and the
// acceptance runner. Every function throws ConfigError for bad inputs and
// NumericalError when training diverges.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bit/analysis.hpp"
#include "bit/dataset.hpp"
#include "bit/training.hpp"
#include "json.hpp"

namespace bit::app {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

void set_quiet(bool quiet);
void log(const std::string& msg);

/// Compiler, build type and library version, recorded in every run.json.
std::string build_id();
/// Writes dir/run.json with the command, the resolved settings and the build.
void write_run_json(const fs::path& dir, const std::string& command, const Json& resolved);

/// Triplets of every sequence under root/split (or of the single sequence at
/// `root` when it holds a meta.json). `subset` is "all" or "centre".
std::vector<BlurTriplet> load_triplets(const fs::path& root, const std::string& split, const std::string& subset);

struct SynthArgs {
  SynthOptions opts;
  std::string split = "train";
  fs::path out;
};
void synth(const SynthArgs& args);

struct TrainArgs {
  TrainConfig cfg;
  fs::path data;
  std::string split = "train";
  std::string subset = "all";
  fs::path out;
  /// Continue from this training checkpoint (same phase).
  fs::path resume;
  /// Start ensemble fine-tuning from this base checkpoint.
  fs::path tse_from;
  /// Periodic checkpoint interval in steps; 0 saves only at the end.
  std::int64_t checkpoint_every = 0;
};
/// Writes out/train_log.csv, out/{phase}.bitk (+ .json) and
/// out/{phase}_inference.bitk (+ .json). Returns the training checkpoint.
fs::path train(const TrainArgs& args);

struct InferArgs {
  fs::path ckpt;
  fs::path data;
  std::string split = "test";
  fs::path out;
  std::vector<double> ts;
  int t_count = 0;
  bool ensemble = false;
  /// Triplet index within each sequence; -1 renders all.
  std::int64_t index = -1;
};
/// Writes out/[seq/]%06d_t%.4f.png per query. Returns the files written.
std::vector<fs::path> infer(const InferArgs& args);

struct EvalArgs {
  fs::path ckpt;
  fs::path data;
  std::string split = "test";
  std::string subset = "all";
  bool ensemble = false;
  fs::path report;
  fs::path curve;
};
Json eval(const EvalArgs& args);

struct CkaArgs {
  fs::path ckpt;
  fs::path data;
  std::string split = "test";
  CkaOptions opts;
  /// Triplets whose shared features are pooled.
  std::int64_t triplets = 8;
  fs::path out;
};
CkaMap cka(const CkaArgs& args);

struct BenchArgs {
  fs::path ckpt;
  std::vector<int> ks{1, 4, 16, 60};
  std::int64_t size = 64;
  int warmup = 1;
  int repeats = 10;
  /// When positive, also sweeps N over [1, total - 1] with M = total - N.
  int sweep_total = 0;
  std::uint64_t seed = 0;
  fs::path out;
};
Json bench(const BenchArgs& args);

struct ReproArgs {
  std::string profile = "tiny";
  std::uint64_t seed = 0;
  fs::path out;
  bool resume = false;
};
/// synth -> train -> ensemble fine-tune -> eval -> cka -> bench. Writes
/// out/report.json (deterministic), out/timings.json and out/frames/*.png.
/// Returns the report.
Json repro(const ReproArgs& args);

}  // namespace bit::app
