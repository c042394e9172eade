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

#ifndef RNNTCL_COMMANDS_HPP
#define RNNTCL_COMMANDS_HPP

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rnntcl/augment.hpp"
#include "rnntcl/checkpoint.hpp"
#include "rnntcl/config.hpp"
#include "rnntcl/decode.hpp"
#include "rnntcl/error.hpp"
#include "rnntcl/evaluation.hpp"
#include "rnntcl/features.hpp"
#include "rnntcl/io.hpp"
#include "rnntcl/manifest.hpp"
#include "rnntcl/random.hpp"
#include "rnntcl/synth.hpp"
#include "rnntcl/training.hpp"

namespace rnntcl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string input;       // WAV or manifest, depending on the command
  std::string checkpoint;  // decode / eval
  std::string baseline;    // eval: baseline report
  std::string name = "eval";
  std::string resume;  // train: mid-stage or stage checkpoint to continue from
  int count = 4;       // corrupt-preview variants
};

// ------------------------------------------------------------------ synth

struct Template {
  std::vector<std::string> before;
  std::vector<std::string> after;
};

/// One template per line with exactly one slot marker; '#' lines and blank
/// lines are skipped. Every fixed word must be in the vocabulary.
inline std::vector<Template> parse_templates(const std::string& text, const std::string& slot,
                                             const Vocabulary& vocab,
                                             const std::string& origin = "<templates>") {
  std::vector<Template> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto words = split_words(line);
    if (words.empty() || words[0][0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    Template t;
    int slots = 0;
    for (const auto& w : words) {
      if (w == slot) {
        ++slots;
        continue;
      }
      try {
        vocab.id(w);
      } catch (const Error&) {
        fail(ErrorCode::kParse, where + ": word '" + w + "' is not in the vocabulary");
      }
      (slots == 0 ? t.before : t.after).push_back(w);
    }
    require(slots == 1, ErrorCode::kParse,
            where + ": template needs exactly one '" + slot + "' marker, found " +
                std::to_string(slots));
    out.push_back(std::move(t));
  }
  require(!out.empty(), ErrorCode::kParse, origin + ": no templates");
  return out;
}

inline std::vector<std::string> parse_slot_words(const std::string& text, const Vocabulary& vocab,
                                                 const std::string& origin = "<words>") {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto words = split_words(line);
    if (words.empty() || words[0][0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    require(words.size() == 1, ErrorCode::kParse, where + ": one word per line");
    try {
      vocab.id(words[0]);
    } catch (const Error&) {
      fail(ErrorCode::kParse, where + ": word '" + words[0] + "' is not in the vocabulary");
    }
    out.push_back(words[0]);
  }
  require(!out.empty(), ErrorCode::kParse, origin + ": no slot words");
  return out;
}

struct SynthItem {
  std::string id;
  std::string text;
  int profile_id = 0;
  std::uint64_t seed = 0;
};

/// Expands templates x words and assigns profiles_per_text distinct profiles
/// to each text.
inline std::vector<SynthItem> plan_synthesis(const std::vector<Template>& templates,
                                             const std::vector<std::string>& words,
                                             const SynthSettings& s, std::uint64_t seed) {
  const auto pool = sample_profiles(s.pool_seed, s.pool_size);
  std::vector<SynthItem> items;
  int text_index = 0;
  for (const auto& t : templates) {
    for (const auto& w : words) {
      std::string text;
      for (const auto& x : t.before) text += x + ' ';
      text += w;
      for (const auto& x : t.after) text += ' ' + x;
      Rng rng = make_rng(derive_seed(seed, 1, static_cast<std::uint64_t>(text_index)));
      const auto chosen = choose_profiles(pool, s.profiles_per_text, rng);
      for (std::size_t k = 0; k < chosen.size(); ++k) {
        char id[48];
        std::snprintf(id, sizeof id, "%s-%05d-%02zu", to_string(s.source), text_index, k);
        items.push_back({id, text, chosen[k].profile_id,
                         derive_seed(seed, 2, static_cast<std::uint64_t>(text_index) * 1000 + k)});
      }
      ++text_index;
    }
  }
  return items;
}

/// Random word sequences: each utterance draws its length, words and one
/// profile independently.
inline std::vector<SynthItem> plan_random(const std::vector<std::string>& words,
                                          const SynthSettings& s, std::uint64_t seed) {
  require(!words.empty(), ErrorCode::kInvalidArgument, "no words to draw from");
  std::vector<SynthItem> items;
  for (int i = 0; i < s.utterances; ++i) {
    Rng rng = make_rng(derive_seed(seed, 3, static_cast<std::uint64_t>(i)));
    const long len = uniform_int(rng, s.min_words, s.max_words);
    std::string text;
    for (long k = 0; k < len; ++k) {
      if (k > 0) text += ' ';
      text += words[static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<long>(words.size()) - 1))];
    }
    const int profile = static_cast<int>(uniform_int(rng, 0, s.pool_size - 1));
    char id[48];
    std::snprintf(id, sizeof id, "%s-%05d-00", to_string(s.source), i);
    items.push_back({id, text, profile, derive_seed(seed, 2, static_cast<std::uint64_t>(i) * 1000)});
  }
  return items;
}

/// Plans the texts described by the synth settings; file names are used in
/// error messages.
inline std::vector<SynthItem> plan_from_files(const SynthSettings& s, const Vocabulary& vocab,
                                              const std::filesystem::path& templates_path,
                                              const std::filesystem::path& words_path,
                                              std::uint64_t seed) {
  const auto words = parse_slot_words(read_file(words_path), vocab, s.words);
  if (s.mode == TextMode::kRandom) return plan_random(words, s, seed);
  const auto templates = parse_templates(read_file(templates_path), s.slot, vocab, s.templates);
  return plan_synthesis(templates, words, s, seed);
}

inline Utterance render_item(const SynthItem& it, const std::vector<VoiceProfile>& pool,
                             const Vocabulary& vocab, Source source) {
  Utterance u;
  u.id = it.id;
  u.transcript = it.text;
  u.tokens = vocab.tokenize(it.text);
  u.source = source;
  u.waveform = synthesize(u.tokens, pool.at(static_cast<std::size_t>(it.profile_id)), it.seed,
                          vocab.size());
  return u;
}

/// In-memory counterpart of the synth command (no 16-bit quantization).
inline std::vector<Utterance> render_corpus(const std::vector<SynthItem>& items,
                                            const SynthSettings& s, const Vocabulary& vocab) {
  const auto pool = sample_profiles(s.pool_seed, s.pool_size);
  std::vector<Utterance> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(render_item(it, pool, vocab, s.source));
  return out;
}

inline int cmd_synth(const RunConfig& c, std::ostream& log) {
  const auto vocab = Vocabulary::from_file(c.resolve(c.vocab));
  const auto items = plan_from_files(c.synth, vocab, c.resolve(c.synth.templates),
                                     c.resolve(c.synth.words), c.seed);
  const auto pool = sample_profiles(c.synth.pool_seed, c.synth.pool_size);
  const std::filesystem::path out = c.out_dir;
  std::vector<ManifestEntry> manifest;
  for (const auto& it : items) {
    const auto u = render_item(it, pool, vocab, c.synth.source);
    const std::string rel = "wav/" + it.id + ".wav";
    write_wav(out / rel, u.waveform);
    manifest.push_back({it.id, rel, it.text, c.synth.source});
  }
  atomic_write(out / "manifest.tsv", format_manifest(manifest));
  log << "synth: " << (c.synth.mode == TextMode::kRandom ? "random" : "templates") << ", "
      << manifest.size() << " utterances -> " << (out / "manifest.tsv").string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ pools

inline int cmd_pools(const RunConfig& c, std::ostream& log) {
  const std::filesystem::path out = c.out_dir;
  const auto airs = make_air_pool(derive_seed(c.seed, 300, 1), c.pools.air_count,
                                  c.pools.air_seconds);
  const auto noises = make_noise_pool(derive_seed(c.seed, 300, 2), c.pools.noise_count,
                                      c.pools.noise_seconds);
  char name[32];
  for (std::size_t i = 0; i < airs.size(); ++i) {
    // reverberate() restores the input peak, so the AIR scale is free.
    Waveform w{airs[i].taps, kSampleRate};
    const double pk = peak(w.samples);
    if (pk > 1.0)
      for (double& v : w.samples) v /= pk;
    std::snprintf(name, sizeof name, "air_%03zu.wav", i);
    write_wav(out / "airs" / name, w);
  }
  for (std::size_t i = 0; i < noises.size(); ++i) {
    std::snprintf(name, sizeof name, "noise_%03zu.wav", i);
    write_wav(out / "noises" / name, noises[i]);
  }
  log << "pools: " << airs.size() << " AIRs, " << noises.size() << " noise clips -> "
      << out.string() << '\n';
  return kExitOk;
}

// -------------------------------------------------------- corrupt-preview

inline std::vector<AcousticImpulseResponse> configured_airs(const RunConfig& c) {
  return c.air_dir.empty() ? std::vector<AcousticImpulseResponse>{}
                           : load_air_pool(c.resolve(c.air_dir));
}

inline std::vector<Waveform> configured_noises(const RunConfig& c) {
  return c.noise_dir.empty() ? std::vector<Waveform>{} : load_noise_pool(c.resolve(c.noise_dir));
}

inline int cmd_corrupt_preview(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  require(!o.input.empty(), ErrorCode::kConfiguration, "corrupt-preview needs --input WAV");
  require(o.count >= 1, ErrorCode::kConfiguration, "--count must be >= 1");
  const auto x = read_wav(o.input);
  const auto airs = configured_airs(c);
  const auto noises = configured_noises(c);
  const std::filesystem::path out = c.out_dir;
  std::string table = "index\treverb\tnoise\tair\tnoise_clip\tsnr_db\n";
  char buf[160];
  for (int i = 0; i < o.count; ++i) {
    const auto r = corrupt(x, c.corruption, airs, noises,
                           derive_seed(c.seed, 400, static_cast<std::uint64_t>(i)));
    std::snprintf(buf, sizeof buf, "preview_%03d.wav", i);
    write_wav(out / buf, r.audio);
    std::snprintf(buf, sizeof buf, "%d\t%d\t%d\t%d\t%d\t%.6f\n", i, r.reverberated ? 1 : 0,
                  r.noised ? 1 : 0, r.air_index, r.noise_index, r.snr_db);
    table += buf;
  }
  atomic_write(out / "preview.tsv", table);
  log << "corrupt-preview: " << o.count << " variants -> " << out.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------- features-dump

inline int cmd_features_dump(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  require(!o.input.empty(), ErrorCode::kConfiguration, "features-dump needs --input WAV");
  const auto x = read_wav(o.input);
  const LogMelExtractor extractor(c.features);
  const auto f = stack_downsample(extractor(x), c.features);
  const auto path = std::filesystem::path(c.out_dir) /
                    (std::filesystem::path(o.input).stem().string() + ".feat");
  atomic_write(path, encode_feature_dump(f));
  log << "features-dump: " << f.values.rows() << " x " << f.values.cols() << " -> "
      << path.string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ train

inline std::vector<Utterance> load_checked_corpus(const std::filesystem::path& manifest,
                                                  const Vocabulary& vocab, Source expected) {
  auto corpus = load_corpus(manifest, vocab);
  for (const auto& u : corpus)
    require(u.source == expected, ErrorCode::kConfiguration,
            manifest.string() + ": entry '" + u.id + "' is not marked " + to_string(expected));
  require(!corpus.empty(), ErrorCode::kConfiguration, manifest.string() + " is empty");
  return corpus;
}

inline std::string stage_checkpoint_name(int index, const std::string& name) {
  return "stage" + std::to_string(index + 1) + "_" + name + ".ckpt";
}

inline int cmd_train(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  const auto vocab = Vocabulary::from_file(c.resolve(c.vocab));
  auto real = load_checked_corpus(c.resolve(c.real_manifest), vocab, Source::kReal);
  std::vector<Utterance> synth;
  if (!c.synth_manifest.empty())
    synth = load_checked_corpus(c.resolve(c.synth_manifest), vocab, Source::kSynthetic);
  TrainingData data(std::move(real), std::move(synth), c.features, c.spec_augment, c.corruption,
                    configured_airs(c), configured_noises(c), c.use_spec_augment);

  TrainingState st;
  const std::filesystem::path out = c.out_dir;
  std::string log_text;
  if (!o.resume.empty()) {
    st = checkpoint_load(o.resume).state;
    require(st.model == c.model, ErrorCode::kConfiguration,
            "resume checkpoint does not match the configured model");
    require(st.stage_index <= static_cast<int>(c.stages.size()), ErrorCode::kConfiguration,
            "resume checkpoint is past the last configured stage");
    if (std::filesystem::exists(out / "train_log.txt")) log_text = read_file(out / "train_log.txt");
  } else if (!c.init_checkpoint.empty()) {
    auto init = checkpoint_load(c.resolve(c.init_checkpoint)).state;
    require(init.model == c.model, ErrorCode::kConfiguration,
            "init checkpoint does not match the configured model");
    set_freeze(init.params, false);
    st = TrainingState::fresh(c.model, std::move(init.params));
  } else {
    st = TrainingState::fresh(c.model, init_parameters(c.model, derive_seed(c.seed, 200, 0)));
  }

  nlohmann::ordered_json summary;
  summary["seed"] = c.seed;
  summary["clip_norm"] = c.clip_norm;
  summary["stages"] = nlohmann::ordered_json::array();

  RunOptions opt;
  opt.clip_norm = c.clip_norm;
  int current_stage = st.stage_index;
  bool header_pending = st.step == 0;
  opt.on_step = [&](const StepRecord& r) {
    if (header_pending) {
      const auto& s = c.stages[static_cast<std::size_t>(current_stage)];
      log_text += "# stage " + std::to_string(current_stage + 1) + " " + s.name +
                  " clip_norm " + std::to_string(c.clip_norm) + "\n";
      header_pending = false;
    }
    log_text += format_step(r) + '\n';
    if (c.checkpoint_every > 0 && st.step % c.checkpoint_every == 0 &&
        st.step < c.stages[static_cast<std::size_t>(current_stage)].steps) {
      checkpoint_save(st, {c.stages[static_cast<std::size_t>(current_stage)].name},
                      out / "resume.ckpt");
      atomic_write(out / "train_log.txt", log_text);
    }
  };

  const auto report = run_recipe(st, data, c.stages, opt, [&](const TrainingState& s, int done) {
    const auto& stage = c.stages[static_cast<std::size_t>(done)];
    const auto file = stage_checkpoint_name(done, stage.name);
    checkpoint_save(s, {stage.name}, out / file);
    atomic_write(out / "train_log.txt", log_text);
    log << "stage " << done + 1 << " (" << stage.name << ") done -> " << (out / file).string()
        << '\n';
    current_stage = done + 1;
    header_pending = true;
  });

  for (std::size_t i = 0; i < report.stages.size(); ++i) {
    const auto& r = report.stages[i];
    const int index = static_cast<int>(c.stages.size() - report.stages.size() + i);
    double tail = 0.0;
    const std::size_t n = std::min<std::size_t>(r.steps.size(), 50);
    for (std::size_t k = r.steps.size() - n; k < r.steps.size(); ++k) tail += r.steps[k].loss;
    nlohmann::ordered_json js;
    js["name"] = r.name;
    js["steps_run"] = r.steps.size();
    js["final_loss"] = r.final_loss();
    js["mean_loss_last_50"] = n ? tail / static_cast<double>(n) : 0.0;
    js["checkpoint"] = stage_checkpoint_name(index, r.name);
    summary["stages"].push_back(js);
  }
  summary["final_checkpoint"] = stage_checkpoint_name(static_cast<int>(c.stages.size()) - 1,
                                                      c.stages.back().name);
  atomic_write(out / "train_log.txt", log_text);
  atomic_write(out / "summary.json", summary.dump(2) + "\n");
  if (std::filesystem::exists(out / "resume.ckpt")) std::filesystem::remove(out / "resume.ckpt");
  return kExitOk;
}

// ---------------------------------------------------------- decode / eval

inline int cmd_decode(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  require(!o.checkpoint.empty() && !o.input.empty(), ErrorCode::kConfiguration,
          "decode needs --checkpoint and --input MANIFEST");
  const auto vocab = Vocabulary::from_file(c.resolve(c.vocab));
  const auto st = checkpoint_load(o.checkpoint).state;
  require(st.model == c.model, ErrorCode::kConfiguration,
          "checkpoint does not match the configured model");
  const auto corpus = load_corpus(o.input, vocab);
  const LogMelExtractor extractor(c.features);
  std::string text;
  for (const auto& u : corpus) {
    const auto h =
        greedy_decode(st.model, st.params, encoder_features(extractor, c.features, u.waveform));
    text += u.id + '\t' + vocab.detokenize(h.tokens) + '\n';
  }
  const auto path = std::filesystem::path(c.out_dir) / "hypotheses.tsv";
  atomic_write(path, text);
  log << "decode: " << corpus.size() << " utterances -> " << path.string() << '\n';
  return kExitOk;
}

inline int cmd_eval(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  require(!o.checkpoint.empty() && !o.input.empty(), ErrorCode::kConfiguration,
          "eval needs --checkpoint and --input MANIFEST");
  const std::string baseline = o.baseline.empty() ? (c.baseline_report.empty() ? "" : c.resolve(c.baseline_report).string()) : o.baseline;
  require(!c.require_nwer || !baseline.empty(), ErrorCode::kConfiguration,
          "NWER requested (eval.require_nwer) but no baseline report was given");
  const auto vocab = Vocabulary::from_file(c.resolve(c.vocab));
  const auto st = checkpoint_load(o.checkpoint).state;
  require(st.model == c.model, ErrorCode::kConfiguration,
          "checkpoint does not match the configured model");
  const auto corpus = load_corpus(o.input, vocab);
  auto rep = evaluate(st.model, st.params, c.features, corpus, vocab);
  if (!baseline.empty()) attach_baseline(rep, baseline, report_wer(read_file(baseline)));
  const auto path = std::filesystem::path(c.out_dir) / (o.name + ".report");
  atomic_write(path, format_report(rep));
  log << "eval: wer " << rep.total.wer;
  if (rep.nwer_value) log << " nwer " << *rep.nwer_value;
  log << " -> " << path.string() << '\n';
  return kExitOk;
}

/// Loads and validates the configuration, then runs the command. Errors map
/// to exit codes: configuration and parse problems 2, anything else 3.
inline int run_command(Command cmd, const CommandOptions& o, std::ostream& log,
                       std::ostream& err) {
  try {
    ConfigOverrides ov{o.seed, o.out};
    const auto c = load_run_config(o.config, cmd, ov);
    switch (cmd) {
      case Command::kSynth: return cmd_synth(c, log);
      case Command::kPools: return cmd_pools(c, log);
      case Command::kCorruptPreview: return cmd_corrupt_preview(c, o, log);
      case Command::kFeaturesDump: return cmd_features_dump(c, o, log);
      case Command::kTrain: return cmd_train(c, o, log);
      case Command::kDecode: return cmd_decode(c, o, log);
      case Command::kEval: return cmd_eval(c, o, log);
    }
    return kExitRuntime;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfiguration || e.code() == ErrorCode::kParse
               ? kExitConfig
               : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace rnntcl

#endif  // RNNTCL_COMMANDS_HPP
