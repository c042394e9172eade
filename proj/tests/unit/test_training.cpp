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

#include <cmath>

#include <gtest/gtest.h>

#include "rnntcl/training.hpp"
#include "support/tiny_setup.hpp"

using namespace rnntcl;
using namespace rnntcl::testing;

namespace {

double synth_fraction(MixWeights mix, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  int synth = 0;
  for (int i = 0; i < 1000; ++i)
    for (const auto& s : sample_batch(10, 10, mix, 100, rng)) synth += s.source == Source::kSynthetic;
  return synth / 100000.0;
}

Eigen::MatrixXd value(const TrainingState& st, const std::string& name) {
  return st.params.at(name).value;
}

bool component_identical(const ParameterStore& a, const ParameterStore& b, Component c) {
  for (std::size_t i = 0; i < a.entries().size(); ++i)
    if (a.entries()[i].param.component == c &&
        !(a.entries()[i].param.value.array() == b.entries()[i].param.value.array()).all())
      return false;
  return true;
}

}  // namespace

TEST(SampleBatch, MixtureFractions) {
  EXPECT_NEAR(synth_fraction({95, 5}, 1), 0.05, 0.005);
  EXPECT_NEAR(synth_fraction({98, 2}, 2), 0.02, 0.005);
  EXPECT_EQ(synth_fraction({100, 0}, 3), 0.0);
}

TEST(SampleBatch, UniformWithReplacementIndices) {
  Rng rng = make_rng(4);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i)
    for (const auto& s : sample_batch(7, 0, {100, 0}, 1, rng)) ++hits[s.index];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(SampleBatch, EmptyCorpusWithWeight) {
  Rng rng = make_rng(1);
  try {
    sample_batch(10, 0, {95, 5}, 4, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
  EXPECT_NO_THROW(sample_batch(10, 0, {100, 0}, 4, rng));
}

TEST(StageConfig, Validation) {
  auto s = tiny_stage(0);
  EXPECT_THROW(s.validate(), Error);
  s.steps = 1;
  s.mix = MixWeights{90, 5};
  EXPECT_THROW(s.validate(), Error);
}

TEST(RunStage, OneStepIsOneOptimizerStep) {
  const auto data = tiny_data();
  auto st = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 1));
  const auto report = run_stage(st, data, tiny_stage(1));
  EXPECT_EQ(report.steps.size(), 1u);
  EXPECT_EQ(st.step, 1);
  for (const auto& s : st.adam.slots) EXPECT_EQ(s.step, 1);
}

TEST(RunStage, SyntheticMixNeedsSyntheticCorpus) {
  const auto data = tiny_data(false);
  auto st = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 1));
  auto stage = tiny_stage(1);
  stage.mix = MixWeights{95, 5};
  EXPECT_THROW(run_stage(st, data, stage), Error);
}

TEST(RunStage, FreezeKeepsEncoderBitIdentical) {
  const auto data = tiny_data();
  auto st = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 2));
  const auto before = st.params;
  auto stage = tiny_stage(100);
  stage.mix = MixWeights{95, 5};
  stage.freeze_encoder = true;
  run_stage(st, data, stage);
  EXPECT_TRUE(component_identical(before, st.params, Component::kEncoder));
  EXPECT_FALSE(component_identical(before, st.params, Component::kDecoder));
  EXPECT_FALSE(component_identical(before, st.params, Component::kJoint));

  // Unfreezing resumes encoder updates.
  auto next = tiny_stage(5);
  st.step = 0;
  run_stage(st, data, next);
  EXPECT_FALSE(component_identical(before, st.params, Component::kEncoder));
}

TEST(RunStage, ZeroLambdaMatchesUnpenalized) {
  const auto data = tiny_data();
  auto a = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 3));
  auto b = a;
  auto plain = tiny_stage(30);
  auto penal = plain;
  penal.elastic = ElasticSettings{0.0, {Component::kDecoder}};
  const auto ra = run_stage(a, data, plain);
  const auto rb = run_stage(b, data, penal);
  for (std::size_t i = 0; i < ra.steps.size(); ++i) {
    EXPECT_EQ(ra.steps[i].loss, rb.steps[i].loss);
    EXPECT_EQ(rb.steps[i].penalty, 0.0);
  }
  EXPECT_TRUE(a.params.identical_to(b.params));
}

TEST(RunStage, HugeLambdaPinsDecoder) {
  const auto data = tiny_data();
  auto st = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 4));
  auto stage = tiny_stage(100, 1e-4);
  stage.elastic = ElasticSettings{1e6, {Component::kDecoder}};
  run_stage(st, data, stage);
  ASSERT_TRUE(st.snapshot.has_value());
  double linf = 0.0;
  for (const auto& [name, pre] : st.snapshot->items())
    linf = std::max(linf, (st.params.at(name).value - pre).cwiseAbs().maxCoeff());
  EXPECT_LT(linf, 1e-3);
}

TEST(RunStage, NanLossAborts) {
  const auto data = tiny_data();
  auto st = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 5));
  st.params.at("joint.output.bias").value(0, 0) = std::nan("");
  try {
    run_stage(st, data, tiny_stage(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
  }
}

TEST(RunStage, DeterministicAndStoppable) {
  const auto data = tiny_data();
  const auto init = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 6));
  auto stage = tiny_stage(20);
  stage.mix = MixWeights{50, 50};
  auto a = init, b = init, c = init;
  run_stage(a, data, stage);
  run_stage(b, data, stage);
  EXPECT_TRUE(a.params.identical_to(b.params));

  RunOptions opt;
  opt.stop_after_step = 8;
  run_stage(c, data, stage, opt);
  EXPECT_EQ(c.step, 8);
  run_stage(c, data, stage);
  EXPECT_TRUE(a.params.identical_to(c.params));
}

TEST(RunRecipe, SnapshotIsPreviousStageFinalState) {
  const auto data = tiny_data();
  auto st = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 7));
  std::vector<StageConfig> stages(4, tiny_stage(5, 1e-3));
  stages[0].mix = MixWeights{95, 5};
  stages[0].freeze_encoder = true;
  stages[1].mix = MixWeights{98, 2};
  stages[2].elastic = ElasticSettings{0.01, {Component::kDecoder}};
  stages[2].seed = 101;
  stages[3].seed = 102;

  std::vector<int> completed;
  std::optional<ParameterSnapshot> stage2_decoder;
  std::optional<ParameterSnapshot> stage3_snapshot;
  RunOptions opt;
  opt.on_step = [&](const StepRecord&) {
    if (st.stage_index == 2 && !stage3_snapshot) stage3_snapshot = st.snapshot;
  };
  run_recipe(st, data, stages, opt, [&](const TrainingState& s, int done) {
    completed.push_back(done);
    if (done == 1) stage2_decoder = ParameterSnapshot::take(s.params, {Component::kDecoder});
  });
  EXPECT_EQ(completed, (std::vector<int>{0, 1, 2, 3}));
  ASSERT_TRUE(stage2_decoder && stage3_snapshot);
  ASSERT_EQ(stage2_decoder->items().size(), stage3_snapshot->items().size());
  for (std::size_t i = 0; i < stage2_decoder->items().size(); ++i)
    EXPECT_TRUE(stage2_decoder->items()[i].second == stage3_snapshot->items()[i].second);
  EXPECT_EQ(st.stage_index, 4);
}

TEST(RunRecipe, SingleStageEqualsRunStage) {
  const auto data = tiny_data();
  auto a = TrainingState::fresh(tiny_model(), init_parameters(tiny_model(), 8));
  auto b = a;
  run_stage(a, data, tiny_stage(6));
  run_recipe(b, data, {tiny_stage(6)});
  EXPECT_TRUE(a.params.identical_to(b.params));
}

TEST(TrainingData, SyntheticIsCorruptedPerDraw) {
  const auto data = tiny_data();
  const BatchSlot s{Source::kSynthetic, 0};
  const auto a = data.encoder_input(s, 1);
  const auto b = data.encoder_input(s, 2);
  EXPECT_EQ(a.rows(), tiny_features().stacked_dim());
  EXPECT_FALSE(a.isApprox(b));
  EXPECT_TRUE(data.encoder_input(s, 1) == a);
}
