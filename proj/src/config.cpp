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

#include "bit/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bit {

using json = nlohmann::ordered_json;

namespace {

json model_json(const BiTConfig& c) {
  return {{"n_shared", c.n_shared},     {"m_render", c.m_render},
          {"heads", c.heads},           {"channels", c.channels},
          {"window", c.window},         {"scales", c.scales},
          {"ratio", c.ratio},           {"upscale", c.upscale},
          {"mlp_ratio", c.mlp_ratio},   {"rstb_depth", c.rstb_depth},
          {"fuse_kernel", c.fuse_kernel}, {"global_residual", c.global_residual},
          {"dtype", to_string(c.dtype)}};
}

json train_json(const TrainConfig& c) {
  const auto& o = c.optim;
  return {{"seed", c.seed},
          {"phase", to_string(c.phase)},
          {"log_every", c.log_every},
          {"model", model_json(c.model)},
          {"optim",
           {{"lr_start", o.lr_start},
            {"lr_end", o.lr_end},
            {"beta1", o.beta1},
            {"beta2", o.beta2},
            {"weight_decay", o.weight_decay},
            {"eps", o.eps},
            {"steps", o.steps},
            {"tse_steps", o.tse_steps},
            {"batch", o.batch},
            {"accumulate", o.accumulate},
            {"clip_norm", o.clip_norm},
            {"crop", o.crop},
            {"augment", o.augment}}},
          {"loss", {{"lambda", c.loss.lambda}, {"dts", c.loss.dts}}}};
}

// Assigns j[key] to field when present.
template <class T>
void take(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->template get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(str_cat("config section '", where, "' must be an object"));
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= k == a;
    if (!ok) throw ConfigError(str_cat("unknown config key '", k, "' in ", where));
  }
}

void apply_model(const json& j, BiTConfig& c) {
  check_keys(j,
             {"n_shared", "m_render", "heads", "channels", "window", "scales", "ratio", "upscale", "mlp_ratio",
              "rstb_depth", "fuse_kernel", "global_residual", "dtype"},
             "model");
  take(j, "n_shared", c.n_shared);
  take(j, "m_render", c.m_render);
  take(j, "heads", c.heads);
  take(j, "channels", c.channels);
  take(j, "window", c.window);
  take(j, "scales", c.scales);
  take(j, "ratio", c.ratio);
  take(j, "upscale", c.upscale);
  take(j, "mlp_ratio", c.mlp_ratio);
  take(j, "rstb_depth", c.rstb_depth);
  take(j, "fuse_kernel", c.fuse_kernel);
  take(j, "global_residual", c.global_residual);
  if (j.contains("dtype")) {
    const auto s = j.at("dtype").get<std::string>();
    if (s == "f32") {
      c.dtype = DType::f32;
    } else if (s == "f64") {
      c.dtype = DType::f64;
    } else {
      throw ConfigError("dtype must be f32 or f64, got " + s);
    }
  }
}

void apply_train(const json& j, TrainConfig& c) {
  check_keys(j, {"seed", "phase", "log_every", "model", "optim", "loss"}, "root");
  take(j, "seed", c.seed);
  take(j, "log_every", c.log_every);
  if (j.contains("phase")) c.phase = phase_from_string(j.at("phase").get<std::string>());
  if (j.contains("model")) apply_model(j.at("model"), c.model);
  if (j.contains("optim")) {
    const auto& o = j.at("optim");
    check_keys(o,
               {"lr_start", "lr_end", "beta1", "beta2", "weight_decay", "eps", "steps", "tse_steps", "batch",
                "accumulate", "clip_norm", "crop", "augment"},
               "optim");
    take(o, "lr_start", c.optim.lr_start);
    take(o, "lr_end", c.optim.lr_end);
    take(o, "beta1", c.optim.beta1);
    take(o, "beta2", c.optim.beta2);
    take(o, "weight_decay", c.optim.weight_decay);
    take(o, "eps", c.optim.eps);
    take(o, "steps", c.optim.steps);
    take(o, "tse_steps", c.optim.tse_steps);
    take(o, "batch", c.optim.batch);
    take(o, "accumulate", c.optim.accumulate);
    take(o, "clip_norm", c.optim.clip_norm);
    take(o, "crop", c.optim.crop);
    take(o, "augment", c.optim.augment);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    check_keys(l, {"lambda", "dts"}, "loss");
    take(l, "lambda", c.loss.lambda);
    take(l, "dts", c.loss.dts);
  }
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON config: ") + e.what());
  }
}

}  // namespace

std::string to_json(const BiTConfig& cfg, int indent) { return model_json(cfg).dump(indent); }
std::string to_json(const TrainConfig& cfg, int indent) { return train_json(cfg).dump(indent); }

void merge_json(TrainConfig& cfg, const std::string& text) {
  try {
    apply_train(parse(text), cfg);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
}

void merge_json(BiTConfig& cfg, const std::string& text) {
  try {
    apply_model(parse(text), cfg);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  merge_json(base, read_text(path));
  return base;
}

TrainConfig train_profile(const std::string& name) {
  TrainConfig c;
  if (name == "tiny") {
    c.model = BiTConfig::tiny();
    c.optim.steps = 2000;
    c.optim.tse_steps = 1000;
    c.optim.batch = 4;
    c.optim.lr_start = 2e-3;
    c.optim.lr_end = 1e-5;
  } else if (name == "paper") {
    c.model = BiTConfig::paper();
    c.optim.batch = 32;
    c.optim.crop = 256;
    c.optim.augment = true;
  } else {
    throw ConfigError("unknown profile '" + name + "' (expected tiny or paper)");
  }
  c.validate();
  return c;
}

}  // namespace bit
