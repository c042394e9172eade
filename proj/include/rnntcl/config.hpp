// Copyright 2026  The rnntcl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RNNTCL_CONFIG_HPP
#define RNNTCL_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rnntcl/augment.hpp"
#include "rnntcl/error.hpp"
#include "rnntcl/features.hpp"
#include "rnntcl/io.hpp"
#include "rnntcl/random.hpp"
#include "rnntcl/rnnt_model.hpp"
#include "rnntcl/training.hpp"

namespace rnntcl {

// ------------------------------------------------------------ key = value

struct ConfigEntry {
  std::string value;
  int line = 0;
};

/// Flat "key = value" text. '#' starts a comment; blank lines are ignored.
inline std::map<std::string, ConfigEntry> parse_key_values(const std::string& text,
                                                           const std::string& origin) {
  std::map<std::string, ConfigEntry> out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    require(eq != std::string::npos, ErrorCode::kParse, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCode::kParse, where + ": empty key");
    require(out.find(key) == out.end(), ErrorCode::kParse,
            where + ": duplicate key '" + key + "'");
    out[key] = {value, line_no};
  }
  return out;
}

// --------------------------------------------------------------- settings

enum class TextMode { kTemplates, kRandom };

struct SynthSettings {
  TextMode mode = TextMode::kTemplates;
  std::string templates;
  std::string words;
  std::string slot = "<slot>";
  std::uint64_t pool_seed = 7;
  int pool_size = 500;
  int profiles_per_text = 32;
  Source source = Source::kSynthetic;
  // random mode: utterances of min_words..max_words words drawn uniformly
  int utterances = 2000;
  int min_words = 2;
  int max_words = 5;
};

struct PoolSettings {
  int air_count = 8;
  int noise_count = 8;
  double air_seconds = 0.2;
  double noise_seconds = 2.0;
};

struct RunConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::uint64_t seed = 0;
  std::string vocab;
  std::string out_dir = "out";  // resolved by parse_run_config
  ModelConfig model;
  FeatureConfig features;
  CorruptionPolicy corruption;
  std::string air_dir;
  std::string noise_dir;
  PoolSettings pools;
  SpecAugmentConfig spec_augment;
  bool use_spec_augment = true;
  std::string real_manifest;
  std::string synth_manifest;
  std::string init_checkpoint;
  double clip_norm = 5.0;
  int checkpoint_every = 0;  // mid-stage resume checkpoints, 0 disables
  std::vector<StageConfig> stages;
  SynthSettings synth;
  std::string baseline_report;
  bool require_nwer = false;

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

enum class Command { kSynth, kPools, kCorruptPreview, kFeaturesDump, kTrain, kDecode, kEval };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::kSynth: return "synth";
    case Command::kPools: return "pools";
    case Command::kCorruptPreview: return "corrupt-preview";
    case Command::kFeaturesDump: return "features-dump";
    case Command::kTrain: return "train";
    case Command::kDecode: return "decode";
    case Command::kEval: return "eval";
  }
  return "?";
}

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

namespace detail {

/// Typed lookups that record problems instead of throwing, so that every
/// error in a file is reported at once.
class ConfigReader {
 public:
  ConfigReader(const std::map<std::string, ConfigEntry>& kv, std::vector<std::string>& errors)
      : kv_(kv), errors_(errors) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::optional<std::string> raw(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    used_.insert(key);
    return it->second.value;
  }

  void string(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    auto v = raw(key);
    if (!v) return;
    T parsed{};
    const char* b = v->data();
    const char* e = b + v->size();
    auto [ptr, ec] = std::from_chars(b, e, parsed);
    if (ec != std::errc() || ptr != e || v->empty())
      error(key, "'" + *v + "' is not a valid number");
    else
      out = parsed;
  }

  void boolean(const std::string& key, bool& out) {
    auto v = raw(key);
    if (!v) return;
    if (*v == "true" || *v == "yes" || *v == "1")
      out = true;
    else if (*v == "false" || *v == "no" || *v == "0")
      out = false;
    else
      error(key, "'" + *v + "' is not a boolean");
  }

  void error(const std::string& key, const std::string& msg) {
    auto it = kv_.find(key);
    const std::string where = it == kv_.end() ? "" : " (line " + std::to_string(it->second.line) + ")";
    errors_.push_back(key + where + ": " + msg);
  }

  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  const std::map<std::string, ConfigEntry>& entries() const { return kv_; }

 private:
  const std::map<std::string, ConfigEntry>& kv_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) {
      out.emplace_back();
      continue;
    }
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

inline void read_stage(ConfigReader& r, int n, std::uint64_t master_seed, StageConfig& s) {
  const std::string p = "stage." + std::to_string(n) + ".";
  s.name = "stage" + std::to_string(n);
  s.seed = derive_seed(master_seed, 100, static_cast<std::uint64_t>(n));
  r.string(p + "name", s.name);
  if (auto mix = r.raw(p + "mix")) {
    if (*mix == "real-only") {
      s.mix.reset();
    } else {
      const auto parts = split_list(*mix);
      MixWeights w;
      bool ok = parts.size() == 2;
      if (ok) {
        auto parse = [](const std::string& t, double& v) {
          auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
          return ec == std::errc() && ptr == t.data() + t.size() && !t.empty();
        };
        ok = parse(parts[0], w.real_pct) && parse(parts[1], w.synth_pct);
      }
      if (ok && w.real_pct >= 0 && w.synth_pct >= 0 &&
          std::abs(w.real_pct + w.synth_pct - 100.0) < 1e-9)
        s.mix = w;
      else
        r.error(p + "mix", "expected 'real-only' or 'R,S' percentages summing to 100");
    }
  }
  r.boolean(p + "freeze_encoder", s.freeze_encoder);
  if (r.has(p + "elastic.lambda") || r.has(p + "elastic.scope")) {
    ElasticSettings e;
    r.number(p + "elastic.lambda", e.lambda);
    if (e.lambda < 0) r.error(p + "elastic.lambda", "must be >= 0");
    if (auto scope = r.raw(p + "elastic.scope")) {
      e.component_scope.clear();
      for (const auto& t : split_list(*scope)) {
        try {
          e.component_scope.insert(component_from_string(t));
        } catch (const Error&) {
          r.error(p + "elastic.scope", "unknown component '" + t + "'");
        }
      }
      if (e.component_scope.empty()) r.error(p + "elastic.scope", "scope is empty");
    }
    s.elastic = e;
  }
  r.number(p + "schedule.warmup_steps", s.schedule.warmup_steps);
  r.number(p + "schedule.hold_steps", s.schedule.hold_steps);
  r.number(p + "schedule.decay_steps", s.schedule.decay_steps);
  r.number(p + "schedule.peak_lr", s.schedule.peak_lr);
  s.schedule.final_lr = s.schedule.peak_lr;
  r.number(p + "schedule.final_lr", s.schedule.final_lr);
  r.number(p + "steps", s.steps);
  r.number(p + "batch_size", s.batch_size);
  r.number(p + "seed", s.seed);
  try {
    s.validate();
  } catch (const Error& e) {
    r.error(p + "*", e.what());
  }
}

template <typename Fn>
void check(std::vector<std::string>& errors, const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    errors.push_back(key + ": " + e.what());
  }
}

}  // namespace detail

/// Parses, applies overrides and validates everything the command needs.
/// All problems are gathered into a single configuration error.
inline RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                                  Command cmd, const ConfigOverrides& overrides = {},
                                  const std::string& origin = "<config>") {
  const auto kv = parse_key_values(text, origin);
  std::vector<std::string> errors;
  detail::ConfigReader r(kv, errors);
  RunConfig c;
  c.base_dir = base_dir;

  r.number("seed", c.seed);
  if (overrides.seed) c.seed = *overrides.seed;
  r.string("vocab", c.vocab);
  r.string("out_dir", c.out_dir);
  // A command-line directory is taken as given; the config's is relative to
  // the config file.
  c.out_dir = overrides.out_dir ? *overrides.out_dir : c.resolve(c.out_dir).string();

  r.number("model.enc_layers", c.model.enc_layers);
  r.number("model.enc_units", c.model.enc_units);
  r.number("model.dec_layers", c.model.dec_layers);
  r.number("model.dec_units", c.model.dec_units);
  r.number("model.proj_dim", c.model.proj_dim);
  r.number("model.joint_units", c.model.joint_units);

  r.number("features.n_mels", c.features.n_mels);
  r.number("features.window_ms", c.features.window_ms);
  r.number("features.shift_ms", c.features.shift_ms);
  r.number("features.stack_left", c.features.stack_left);
  r.number("features.downsample", c.features.downsample);
  r.number("features.log_floor", c.features.log_floor);
  if (auto n = r.raw("features.normalize")) {
    if (*n == "none")
      c.features.normalize = FeatureNorm::kNone;
    else if (*n == "utterance")
      c.features.normalize = FeatureNorm::kUtterance;
    else
      r.error("features.normalize", "expected 'none' or 'utterance'");
  }
  detail::check(errors, "features.*", [&] { c.features.validate(); });
  c.model.input_dim = c.features.stacked_dim();

  r.number("corruption.p_reverb", c.corruption.p_reverb);
  r.number("corruption.p_noise", c.corruption.p_noise);
  r.number("corruption.snr_low_db", c.corruption.snr_low_db);
  r.number("corruption.snr_high_db", c.corruption.snr_high_db);
  r.string("corruption.air_dir", c.air_dir);
  r.string("corruption.noise_dir", c.noise_dir);
  detail::check(errors, "corruption.*", [&] { c.corruption.validate(); });

  r.number("pools.air_count", c.pools.air_count);
  r.number("pools.noise_count", c.pools.noise_count);
  r.number("pools.air_seconds", c.pools.air_seconds);
  r.number("pools.noise_seconds", c.pools.noise_seconds);
  if (c.pools.air_count < 1 || c.pools.noise_count < 1 || c.pools.air_seconds <= 0 ||
      c.pools.noise_seconds <= 0)
    errors.push_back("pools.*: counts must be >= 1 and durations positive");

  r.boolean("specaugment.enabled", c.use_spec_augment);
  r.number("specaugment.n_freq_masks", c.spec_augment.n_freq_masks);
  r.number("specaugment.max_freq_fraction", c.spec_augment.max_freq_fraction);
  r.number("specaugment.max_time_mask_fraction", c.spec_augment.max_time_mask_fraction);
  r.number("specaugment.time_mask_count_fraction", c.spec_augment.time_mask_count_fraction);
  r.number("specaugment.time_mask_count_cap", c.spec_augment.time_mask_count_cap);
  detail::check(errors, "specaugment.*", [&] { c.spec_augment.validate(); });

  r.string("data.real_manifest", c.real_manifest);
  r.string("data.synth_manifest", c.synth_manifest);
  r.string("train.init_checkpoint", c.init_checkpoint);
  r.number("train.clip_norm", c.clip_norm);
  r.number("train.checkpoint_every", c.checkpoint_every);
  if (c.clip_norm < 0) r.error("train.clip_norm", "must be >= 0");
  if (c.checkpoint_every < 0) r.error("train.checkpoint_every", "must be >= 0");

  r.string("synth.templates", c.synth.templates);
  r.string("synth.words", c.synth.words);
  r.string("synth.slot", c.synth.slot);
  r.number("synth.pool_seed", c.synth.pool_seed);
  r.number("synth.pool_size", c.synth.pool_size);
  r.number("synth.profiles_per_text", c.synth.profiles_per_text);
  if (auto s = r.raw("synth.source")) {
    if (*s == "real")
      c.synth.source = Source::kReal;
    else if (*s == "synthetic")
      c.synth.source = Source::kSynthetic;
    else
      r.error("synth.source", "expected 'real' or 'synthetic'");
  }
  if (auto m = r.raw("synth.mode")) {
    if (*m == "templates")
      c.synth.mode = TextMode::kTemplates;
    else if (*m == "random")
      c.synth.mode = TextMode::kRandom;
    else
      r.error("synth.mode", "expected 'templates' or 'random'");
  }
  r.number("synth.utterances", c.synth.utterances);
  r.number("synth.min_words", c.synth.min_words);
  r.number("synth.max_words", c.synth.max_words);
  if (c.synth.utterances < 1) r.error("synth.utterances", "must be >= 1");
  if (c.synth.min_words < 1 || c.synth.max_words < c.synth.min_words)
    r.error("synth.max_words", "need 1 <= synth.min_words <= synth.max_words");
  if (c.synth.pool_size < 1) r.error("synth.pool_size", "must be >= 1");
  if (c.synth.profiles_per_text < 1 || c.synth.profiles_per_text > c.synth.pool_size)
    r.error("synth.profiles_per_text", "must lie in [1, synth.pool_size]");
  if (c.synth.slot.empty()) r.error("synth.slot", "must not be empty");

  r.string("eval.baseline_report", c.baseline_report);
  r.boolean("eval.require_nwer", c.require_nwer);

  // Stages are numbered 1..K without gaps.
  std::set<int> stage_ids;
  for (const auto& [key, entry] : kv) {
    if (key.rfind("stage.", 0) != 0) continue;
    const auto dot = key.find('.', 6);
    int n = 0;
    const auto idx = key.substr(6, dot == std::string::npos ? std::string::npos : dot - 6);
    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), n);
    if (ec == std::errc() && ptr == idx.data() + idx.size() && n >= 1 && dot != std::string::npos)
      stage_ids.insert(n);
  }
  for (int n = 1; n <= static_cast<int>(stage_ids.size()); ++n) {
    if (!stage_ids.count(n)) {
      errors.push_back("stage." + std::to_string(n) + ": stages must be numbered 1..K");
      break;
    }
    StageConfig s;
    detail::read_stage(r, n, c.seed, s);
    c.stages.push_back(s);
  }

  for (const auto& key : r.unused()) r.error(key, "unknown key");

  // Vocabulary decides the output layer.
  const auto require_file = [&](const std::string& key, const std::string& value) {
    if (value.empty())
      errors.push_back(key + ": required for '" + to_string(cmd) + "'");
    else if (!std::filesystem::exists(c.resolve(value)))
      r.error(key, "path does not exist: " + c.resolve(value).string());
  };
  const auto optional_file = [&](const std::string& key, const std::string& value) {
    if (!value.empty() && !std::filesystem::exists(c.resolve(value)))
      r.error(key, "path does not exist: " + c.resolve(value).string());
  };

  if (cmd != Command::kPools) {
    require_file("vocab", c.vocab);
    if (!c.vocab.empty() && std::filesystem::exists(c.resolve(c.vocab))) {
      detail::check(errors, "vocab", [&] {
        c.model.vocab_size = Vocabulary::from_file(c.resolve(c.vocab)).size();
        require(c.model.vocab_size >= 2, ErrorCode::kConfiguration,
                "vocabulary has no words");
      });
    }
  }
  detail::check(errors, "model.*", [&] { c.model.validate(); });

  const bool needs_pools_for_corruption = cmd == Command::kCorruptPreview;
  bool train_uses_synth = false;
  for (const auto& s : c.stages) train_uses_synth |= s.uses_synthetic();

  switch (cmd) {
    case Command::kSynth:
      if (c.synth.mode == TextMode::kTemplates) require_file("synth.templates", c.synth.templates);
      require_file("synth.words", c.synth.words);
      break;
    case Command::kTrain:
      require_file("data.real_manifest", c.real_manifest);
      if (train_uses_synth)
        require_file("data.synth_manifest", c.synth_manifest);
      else
        optional_file("data.synth_manifest", c.synth_manifest);
      optional_file("train.init_checkpoint", c.init_checkpoint);
      if (c.stages.empty()) errors.push_back("stage.1: at least one stage is required");
      break;
    case Command::kEval:
      optional_file("eval.baseline_report", c.baseline_report);
      break;
    default:
      break;
  }
  if (needs_pools_for_corruption || (cmd == Command::kTrain && train_uses_synth)) {
    if (c.corruption.p_reverb > 0) require_file("corruption.air_dir", c.air_dir);
    if (c.corruption.p_noise > 0) require_file("corruption.noise_dir", c.noise_dir);
  }

  if (!errors.empty()) {
    std::string msg = "invalid configuration " + origin + ":";
    for (const auto& e : errors) msg += "\n  " + e;
    fail(ErrorCode::kConfiguration, msg);
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path, Command cmd,
                                 const ConfigOverrides& overrides = {}) {
  require(std::filesystem::exists(path), ErrorCode::kConfiguration,
          "config file does not exist: " + path.string());
  return parse_run_config(read_file(path), path.parent_path(), cmd, overrides, path.string());
}

}  // namespace rnntcl

#endif  // RNNTCL_CONFIG_HPP
