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

#include "rnntcl/optim.hpp"
#include "rnntcl/random.hpp"
#include "support/gradcheck.hpp"

using namespace rnntcl;

namespace {

ParameterStore small_store(std::uint64_t seed) {
  ParameterStore p;
  p.add("encoder.w", Component::kEncoder, 3, 2);
  p.add("decoder.w", Component::kDecoder, 2, 2);
  p.add("joint.w", Component::kJoint, 4, 1);
  Rng rng = make_rng(seed);
  for (auto& e : p.entries())
    for (Eigen::Index i = 0; i < e.param.value.size(); ++i)
      e.param.value.data()[i] = standard_normal(rng);
  return p;
}

}  // namespace

TEST(LrSchedule, Boundaries) {
  const LrSchedule s{10, 5, 20, 5e-5, 1e-5};
  EXPECT_DOUBLE_EQ(lr_at(0, s), 5e-6);
  EXPECT_DOUBLE_EQ(lr_at(9, s), 5e-5);
  EXPECT_DOUBLE_EQ(lr_at(15, s), 5e-5);  // decay start
  EXPECT_DOUBLE_EQ(lr_at(35, s), 1e-5);  // decay end
  EXPECT_DOUBLE_EQ(lr_at(1000, s), 1e-5);
  EXPECT_NEAR(lr_at(25, s), 5e-5 * std::sqrt(0.2), 1e-18);
  EXPECT_NEAR(lr_at(25, s), 2.2361e-5, 1e-9);
}

TEST(LrSchedule, ContinuousAndMonotoneAfterWarmup) {
  const LrSchedule s{50, 30, 400, 1e-3, 1e-5};
  EXPECT_NEAR(lr_at(49, s), lr_at(50, s), 1e-15);
  EXPECT_NEAR(lr_at(79, s), lr_at(80, s), 1e-15);
  EXPECT_NEAR(lr_at(479, s), lr_at(480, s), 1e-3 * 1e-2);
  for (long t = 50; t < 600; ++t) EXPECT_LE(lr_at(t + 1, s), lr_at(t, s));
}

TEST(LrSchedule, Validation) {
  EXPECT_THROW((LrSchedule{0, 0, 0, 1e-5, 1e-4}.validate()), Error);
  EXPECT_THROW((LrSchedule{-1, 0, 0, 1e-4, 1e-4}.validate()), Error);
  EXPECT_NO_THROW(LrSchedule::constant(0.1).validate());
}

TEST(Adam, FirstStepHandValue) {
  ParameterStore p;
  p.add("joint.w", Component::kJoint, 1, 1);
  p.at("joint.w").grad(0, 0) = 1.0;
  auto st = AdamState::for_params(p);
  adam_step(p, 0.1, st);
  EXPECT_NEAR(p.at("joint.w").value(0, 0), -0.0999999990, 1e-12);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto p = small_store(1);
  const auto before = p;
  auto st = AdamState::for_params(p);
  st.slots[0].m.setConstant(0.5);
  st.slots[0].v.setConstant(0.25);
  p.zero_grad();
  // Non-zero moments move parameters, so start from zero moments elsewhere.
  adam_step(p, 0.1, st);
  EXPECT_TRUE(p.entries()[1].param.value == before.entries()[1].param.value);
  EXPECT_TRUE((st.slots[0].m.array() == 0.45).all());
  EXPECT_NEAR(st.slots[0].v(0, 0), 0.24975, 1e-15);
}

TEST(Adam, FrozenSkippedAndStateUntouched) {
  auto p = small_store(2);
  set_freeze(p, true);
  const Eigen::MatrixXd enc = p.at("encoder.w").value;
  auto st = AdamState::for_params(p);
  for (int i = 0; i < 10; ++i) {
    for (auto& e : p.entries()) e.param.grad.setConstant(1.0);
    adam_step(p, 0.01, st);
  }
  EXPECT_TRUE(p.at("encoder.w").value == enc);
  EXPECT_EQ(st.slots[0].step, 0);
  EXPECT_TRUE((st.slots[0].m.array() == 0.0).all());
  EXPECT_EQ(st.slots[1].step, 10);
  set_freeze(p, false);
  p.at("encoder.w").grad.setConstant(1.0);
  adam_step(p, 0.01, st);
  EXPECT_FALSE(p.at("encoder.w").value == enc);
}

TEST(Adam, ShapeMismatchIsStateError) {
  auto p = small_store(3);
  auto st = AdamState::for_params(p);
  st.slots.pop_back();
  try {
    adam_step(p, 0.1, st);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
}

TEST(ClipGradNorm, RescalesTrainableOnly) {
  auto p = small_store(4);
  for (auto& e : p.entries()) e.param.grad.setConstant(3.0);
  const double norm = clip_grad_norm(p, 1.0);
  EXPECT_NEAR(norm, 3.0 * std::sqrt(14.0), 1e-12);
  EXPECT_NEAR(p.grad_norm(), 1.0, 1e-12);
}

TEST(ElasticPenalty, HandValues) {
  ParameterStore p;
  p.add("decoder.w", Component::kDecoder, 2, 1);
  p.add("joint.w", Component::kJoint, 1, 1);
  p.at("decoder.w").value << 0.5, -1.0;
  const auto snap = ParameterSnapshot::take(p, {Component::kDecoder});
  ElasticPenaltyConfig cfg{0.5, {Component::kDecoder}, snap};
  EXPECT_EQ(elastic_penalty(p, cfg), 0.0);
  EXPECT_TRUE((p.at("decoder.w").grad.array() == 0.0).all());
  p.at("decoder.w").value << 0.0, 0.0;
  EXPECT_DOUBLE_EQ(elastic_penalty(p, cfg), 0.625);
  EXPECT_DOUBLE_EQ(p.at("decoder.w").grad(0, 0), 2 * 0.5 * (0.0 - 0.5));
  EXPECT_DOUBLE_EQ(p.at("decoder.w").grad(1, 0), 2 * 0.5 * (0.0 + 1.0));
  EXPECT_EQ(p.at("joint.w").grad(0, 0), 0.0);
}

TEST(ElasticPenalty, GradientMatchesFiniteDifferences) {
  auto p = small_store(5);
  const auto snap = ParameterSnapshot::take(p, {Component::kDecoder, Component::kJoint});
  Rng rng = make_rng(6);
  for (auto& e : p.entries())
    for (Eigen::Index i = 0; i < e.param.value.size(); ++i)
      e.param.value.data()[i] += 0.3 * standard_normal(rng);
  ElasticPenaltyConfig cfg{0.7, {Component::kDecoder, Component::kJoint}, snap};
  p.zero_grad();
  elastic_penalty(p, cfg);
  rnntcl::testing::GradCheckResult res;
  for (const char* name : {"decoder.w", "joint.w"}) {
    Eigen::MatrixXd analytic = p.at(name).grad;
    rnntcl::testing::check_matrix(p.at(name).value, analytic, [&] { return elastic_penalty(p, cfg, false); },
                          name, res);
  }
  EXPECT_LT(res.max_abs_error, 1e-8) << res.worst;
}

TEST(ElasticPenalty, SnapshotMismatch) {
  auto p = small_store(7);
  const auto snap = ParameterSnapshot::take(p, {Component::kJoint});
  ElasticPenaltyConfig cfg{1.0, {Component::kDecoder}, snap};
  try {
    elastic_penalty(p, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
}

TEST(Snapshot, Immutable) {
  auto p = small_store(8);
  const auto snap = ParameterSnapshot::take(p, {Component::kDecoder});
  const Eigen::MatrixXd copy = snap.items()[0].second;
  p.at("decoder.w").value.setZero();
  EXPECT_TRUE(snap.items()[0].second == copy);
}
