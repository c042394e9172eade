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

#ifndef RNNTCL_TRAINING_HPP
#define RNNTCL_TRAINING_HPP

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rnntcl/augment.hpp"
#include "rnntcl/error.hpp"
#include "rnntcl/features.hpp"
#include "rnntcl/optim.hpp"
#include "rnntcl/parameters.hpp"
#include "rnntcl/random.hpp"
#include "rnntcl/rnnt_model.hpp"
#include "rnntcl/synth.hpp"

namespace rnntcl {

/// Percentages of batch slots drawn from real and synthetic data.
struct MixWeights {
  double real_pct = 100.0;
  double synth_pct = 0.0;

  void validate() const {
    require(real_pct >= 0.0 && synth_pct >= 0.0 && std::abs(real_pct + synth_pct - 100.0) < 1e-9,
            ErrorCode::kConfiguration, "mix weights must be non-negative and sum to 100");
  }
  bool operator==(const MixWeights&) const = default;
};

struct BatchSlot {
  Source source = Source::kReal;
  std::size_t index = 0;
  bool operator==(const BatchSlot&) const = default;
};

/// Each slot is real with probability real_pct / 100, otherwise synthetic;
/// the utterance is then drawn uniformly with replacement.
inline std::vector<BatchSlot> sample_batch(std::size_t real_size, std::size_t synth_size,
                                           const MixWeights& mix, int batch_size, Rng& rng) {
  mix.validate();
  require(mix.real_pct == 0.0 || real_size > 0, ErrorCode::kConfiguration,
          "real weight > 0 but the real corpus is empty");
  require(mix.synth_pct == 0.0 || synth_size > 0, ErrorCode::kConfiguration,
          "synthetic weight > 0 but the synthetic corpus is empty");
  std::vector<BatchSlot> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  const double p_real = mix.real_pct / 100.0;
  for (int i = 0; i < batch_size; ++i) {
    BatchSlot s;
    s.source = uniform01(rng) < p_real ? Source::kReal : Source::kSynthetic;
    const std::size_t n = s.source == Source::kReal ? real_size : synth_size;
    s.index = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(n) - 1));
    batch.push_back(s);
  }
  return batch;
}

inline std::vector<BatchSlot> sample_batch(const std::vector<Utterance>& real,
                                           const std::vector<Utterance>& synth,
                                           const MixWeights& mix, int batch_size, Rng& rng) {
  return sample_batch(real.size(), synth.size(), mix, batch_size, rng);
}

struct ElasticSettings {
  double lambda = 0.01;
  std::set<Component> component_scope{Component::kDecoder};
};

struct StageConfig {
  std::string name = "stage";
  std::optional<MixWeights> mix;  // empty: real data only
  bool freeze_encoder = false;
  std::optional<ElasticSettings> elastic;
  LrSchedule schedule;
  int steps = 1;
  int batch_size = 8;
  std::uint64_t seed = 0;

  MixWeights effective_mix() const { return mix.value_or(MixWeights{100.0, 0.0}); }
  bool uses_synthetic() const { return effective_mix().synth_pct > 0.0; }

  void validate() const {
    require(steps >= 1, ErrorCode::kConfiguration, "stage '" + name + "' needs steps >= 1");
    require(batch_size >= 1, ErrorCode::kConfiguration,
            "stage '" + name + "' needs batch_size >= 1");
    if (mix) mix->validate();
    schedule.validate();
    if (elastic)
      require(elastic->lambda >= 0.0 && !elastic->component_scope.empty(),
              ErrorCode::kConfiguration, "stage '" + name + "' has an invalid elastic penalty");
  }
};

/// Corpora, augmentation resources and the feature pipeline shared by all
/// stages. Clean log-Mel features of real utterances are computed once.
class TrainingData {
 public:
  TrainingData(std::vector<Utterance> real, std::vector<Utterance> synth,
               FeatureConfig features, SpecAugmentConfig spec_augment,
               CorruptionPolicy corruption, std::vector<AcousticImpulseResponse> airs,
               std::vector<Waveform> noises, bool use_spec_augment = true)
      : real_(std::move(real)),
        synth_(std::move(synth)),
        feature_cfg_(features),
        extractor_(features),
        spec_cfg_(spec_augment),
        corruption_(corruption),
        airs_(std::move(airs)),
        noises_(std::move(noises)),
        use_spec_augment_(use_spec_augment),
        real_cache_(real_.size()) {}

  const std::vector<Utterance>& real() const { return real_; }
  const std::vector<Utterance>& synthetic() const { return synth_; }
  const FeatureConfig& feature_config() const { return feature_cfg_; }

  const Utterance& utterance(const BatchSlot& s) const {
    return s.source == Source::kReal ? real_.at(s.index) : synth_.at(s.index);
  }

  /// Encoder input (one stacked frame per column) for one sampled slot.
  /// Synthetic audio is corrupted afresh on every draw; every utterance then
  /// goes through SpecAugment.
  Eigen::MatrixXd encoder_input(const BatchSlot& s, std::uint64_t aug_seed) const {
    FeatureMatrix f;
    if (s.source == Source::kReal) {
      auto& cached = real_cache_[s.index];
      if (!cached) cached = extractor_(real_.at(s.index).waveform);
      f = *cached;
    } else {
      const auto noisy = corrupt(synth_.at(s.index).waveform, corruption_, airs_, noises_,
                                 derive_seed(aug_seed, 1));
      f = extractor_(noisy.audio);
    }
    if (use_spec_augment_) f = spec_augment(f, spec_cfg_, derive_seed(aug_seed, 2));
    return stack_downsample(f, feature_cfg_).values.transpose();
  }

  /// Clean features for evaluation.
  Eigen::MatrixXd clean_encoder_input(const Waveform& w) const {
    return stack_downsample(extractor_(w), feature_cfg_).values.transpose();
  }

 private:
  std::vector<Utterance> real_;
  std::vector<Utterance> synth_;
  FeatureConfig feature_cfg_;
  LogMelExtractor extractor_;
  SpecAugmentConfig spec_cfg_;
  CorruptionPolicy corruption_;
  std::vector<AcousticImpulseResponse> airs_;
  std::vector<Waveform> noises_;
  bool use_spec_augment_;
  mutable std::vector<std::optional<FeatureMatrix>> real_cache_;
};

/// Everything needed to continue training bit-exactly.
struct TrainingState {
  ModelConfig model;
  ParameterStore params;
  AdamState adam;
  int stage_index = 0;  // stage in progress, or next stage when step == 0
  int step = 0;         // optimizer steps completed in that stage
  Rng rng;              // sampling / augmentation stream of the stage
  std::optional<ParameterSnapshot> snapshot;

  static TrainingState fresh(const ModelConfig& cfg, ParameterStore params) {
    TrainingState s;
    s.model = cfg;
    s.adam = AdamState::for_params(params);
    s.params = std::move(params);
    return s;
  }
};

struct StepRecord {
  int step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double penalty = 0.0;
  double grad_norm = 0.0;
};

inline std::string format_step(const StepRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "step %d lr %.9g loss %.9g penalty %.9g", r.step, r.lr,
                r.loss, r.penalty);
  return buf;
}

struct StageReport {
  std::string name;
  std::vector<StepRecord> steps;
  double final_loss() const { return steps.empty() ? 0.0 : steps.back().loss; }
};

struct RunOptions {
  double clip_norm = 5.0;
  /// Stop after this many steps of the current stage (for checkpoint/resume);
  /// a negative value runs to completion.
  int stop_after_step = -1;
  std::function<void(const StepRecord&)> on_step;
};

/// Prepares stage-entry state: fresh sampling stream, elastic snapshot of the
/// parameters as they stand now, freeze flags.
inline void enter_stage(TrainingState& st, const StageConfig& stage) {
  st.step = 0;
  st.rng = make_rng(stage.seed);
  st.snapshot.reset();
  if (stage.elastic)
    st.snapshot = ParameterSnapshot::take(st.params, stage.elastic->component_scope);
}

/// Executes the remaining steps of `stage`: sample, augment, extract
/// features, forward, transducer loss (+ elastic penalty), backward, clip,
/// Adam with frozen parameters skipped.
inline StageReport run_stage(TrainingState& st, const TrainingData& data,
                             const StageConfig& stage, const RunOptions& opt = {}) {
  stage.validate();
  require(!stage.uses_synthetic() || !data.synthetic().empty(), ErrorCode::kConfiguration,
          "stage '" + stage.name + "' mixes synthetic data but none is attached");
  if (st.step == 0) enter_stage(st, stage);
  set_freeze(st.params, stage.freeze_encoder);

  std::optional<ElasticPenaltyConfig> penalty;
  if (stage.elastic) {
    require(st.snapshot.has_value(), ErrorCode::kState,
            "elastic stage resumed without a snapshot");
    penalty = ElasticPenaltyConfig{stage.elastic->lambda, stage.elastic->component_scope,
                                   *st.snapshot};
  }

  StageReport report;
  report.name = stage.name;
  const MixWeights mix = stage.effective_mix();
  const double scale = 1.0 / stage.batch_size;
  while (st.step < stage.steps) {
    if (opt.stop_after_step >= 0 && st.step >= opt.stop_after_step) break;
    st.params.zero_grad();
    const auto batch = sample_batch(data.real(), data.synthetic(), mix, stage.batch_size, st.rng);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < batch.size(); ++i) seeds.push_back(st.rng());

    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto x = data.encoder_input(batch[i], seeds[i]);
      const auto& utt = data.utterance(batch[i]);
      loss += utterance_loss(st.model, st.params, x, utt.tokens, true, scale,
                             !stage.freeze_encoder)
                  .loss;
    }
    loss *= scale;
    const double pen = penalty ? elastic_penalty(st.params, *penalty) : 0.0;
    require(std::isfinite(loss) && std::isfinite(pen), ErrorCode::kDivergence,
            "non-finite loss at step " + std::to_string(st.step) + " of stage '" +
                stage.name + "'");

    StepRecord rec;
    rec.step = st.step;
    rec.lr = lr_at(st.step, stage.schedule);
    rec.loss = loss;
    rec.penalty = pen;
    rec.grad_norm = clip_grad_norm(st.params, opt.clip_norm);
    adam_step(st.params, rec.lr, st.adam);
    ++st.step;
    report.steps.push_back(rec);
    if (opt.on_step) opt.on_step(rec);
  }
  return report;
}

struct RecipeReport {
  std::vector<StageReport> stages;
};

/// Runs stages in order from st.stage_index. `after_stage` is invoked with the
/// state positioned at the start of the next stage (the natural checkpoint).
inline RecipeReport run_recipe(
    TrainingState& st, const TrainingData& data, const std::vector<StageConfig>& stages,
    const RunOptions& opt = {},
    const std::function<void(const TrainingState&, int completed_stage)>& after_stage = {}) {
  require(!stages.empty(), ErrorCode::kConfiguration, "recipe needs at least one stage");
  for (const auto& s : stages) s.validate();
  RecipeReport report;
  while (st.stage_index < static_cast<int>(stages.size())) {
    const auto& stage = stages[static_cast<std::size_t>(st.stage_index)];
    report.stages.push_back(run_stage(st, data, stage, opt));
    if (st.step < stage.steps) break;  // stopped early on request
    const int done = st.stage_index;
    ++st.stage_index;
    st.step = 0;
    st.snapshot.reset();
    if (after_stage) after_stage(st, done);
  }
  return report;
}

}  // namespace rnntcl

#endif  // RNNTCL_TRAINING_HPP
