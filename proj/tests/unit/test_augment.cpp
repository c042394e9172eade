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

#include "rnntcl/augment.hpp"
#include "rnntcl/random.hpp"

using namespace rnntcl;

namespace {

Waveform random_wave(std::uint64_t seed, std::size_t n, double scale = 0.3) {
  Rng rng = make_rng(seed);
  Waveform w;
  for (std::size_t i = 0; i < n; ++i) w.samples.push_back(scale * standard_normal(rng));
  return w;
}

double power(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

FeatureMatrix random_features(std::uint64_t seed, int T, int D) {
  Rng rng = make_rng(seed);
  FeatureMatrix f;
  f.values.resize(T, D);
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < D; ++d) f.values(t, d) = -5.0 + 2.0 * standard_normal(rng);
  return f;
}

}  // namespace

TEST(Reverberate, IdentityKernel) {
  const auto x = random_wave(1, 500);
  const auto y = reverberate(x, AcousticImpulseResponse{{1.0}});
  EXPECT_EQ(y.samples, x.samples);
}

TEST(Reverberate, HandConvolution) {
  EXPECT_EQ(convolve_truncated({1, 0, 0}, {1, 0.5}), (std::vector<double>{1, 0.5, 0}));
  EXPECT_EQ(convolve_truncated({1, 2, 3}, {0, 1}), (std::vector<double>{0, 1, 2}));
}

TEST(Reverberate, FftPathMatchesDirectSum) {
  const auto x = random_wave(2, 4000);
  const auto h = random_wave(3, 800);
  const auto y = convolve_truncated(x.samples, h.samples);  // n*m > 65536
  ASSERT_EQ(y.size(), x.size());
  for (std::size_t i = 0; i < y.size(); i += 97) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= std::min<std::size_t>(i, h.size() - 1); ++k)
      acc += h.samples[k] * x.samples[i - k];
    EXPECT_NEAR(y[i], acc, 1e-9);
  }
}

TEST(Reverberate, LengthAndPeak) {
  const auto x = random_wave(4, 1234);
  const auto airs = make_air_pool(5, 3);
  for (const auto& a : airs) {
    const auto y = reverberate(x, a);
    EXPECT_EQ(y.size(), x.size());
    EXPECT_NEAR(peak(y.samples), peak(x.samples), 1e-12);
  }
}

TEST(Reverberate, SampleRateMismatch) {
  AcousticImpulseResponse a{{1.0}, 8000};
  try {
    reverberate(random_wave(1, 10), a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(MixNoise, GainClosedForms) {
  EXPECT_DOUBLE_EQ(noise_gain(2.0, 2.0, 0.0), 1.0);
  EXPECT_NEAR(noise_gain(2.0, 2.0, 20.0), 0.1, 1e-15);
}

TEST(MixNoise, MeasuredSnrMatches) {
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_wave(100 + trial, 3000, uniform(rng, 0.01, 0.5));
    const auto noise = random_wave(200 + trial, 5000, uniform(rng, 0.01, 0.5));
    const double snr = uniform(rng, -5.0, 30.0);
    const std::size_t off = static_cast<std::size_t>(uniform_int(rng, 0, 2000));
    const auto y = mix_noise(x, noise, snr, off);
    std::vector<double> added(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) added[i] = y.samples[i] - x.samples[i];
    EXPECT_NEAR(10.0 * std::log10(power(x.samples) / power(added)), snr, 1e-6);
  }
}

TEST(MixNoise, ShortNoiseIsTiled) {
  const auto x = random_wave(1, 1000);
  const auto noise = random_wave(2, 300);
  EXPECT_EQ(mix_noise(x, noise, 10.0).size(), 1000u);
}

TEST(MixNoise, DegenerateSignals) {
  Waveform silent;
  silent.samples.assign(100, 0.0);
  for (auto [a, b] : {std::pair{silent, random_wave(1, 100)}, std::pair{random_wave(1, 100), silent}}) {
    try {
      mix_noise(a, b, 10.0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDegenerateSignal);
    }
  }
}

TEST(Corrupt, NoOpAndAlwaysPolicies) {
  const auto x = random_wave(3, 2000);
  const auto airs = make_air_pool(1, 2);
  const auto noises = make_noise_pool(2, 2, 0.5);
  CorruptionPolicy off{0.0, 0.0, 10.0, 20.0};
  EXPECT_EQ(corrupt(x, off, {}, {}, 5).audio.samples, x.samples);
  CorruptionPolicy on{1.0, 1.0, 10.0, 20.0};
  const auto r = corrupt(x, on, airs, noises, 5);
  EXPECT_TRUE(r.reverberated && r.noised);
  EXPECT_NE(r.audio.samples, x.samples);
  EXPECT_GE(r.snr_db, 10.0);
  EXPECT_LE(r.snr_db, 20.0);
  EXPECT_EQ(corrupt(x, on, airs, noises, 5).audio.samples, r.audio.samples);
}

TEST(Corrupt, EmptyPoolIsConfigurationError) {
  try {
    corrupt(random_wave(1, 100), CorruptionPolicy{}, {}, make_noise_pool(1, 1, 0.1), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
}

TEST(Corrupt, ReverbBeforeNoise) {
  const auto x = random_wave(3, 800);
  const auto airs = make_air_pool(1, 1);
  const auto noises = make_noise_pool(2, 1, 0.02);  // shorter than x: offset 0
  CorruptionPolicy on{1.0, 1.0, 15.0, 15.0};
  const auto r = corrupt(x, on, airs, noises, 77);
  auto expect = mix_noise(reverberate(x, airs[0]), noises[0], 15.0);
  const double pk = peak(expect.samples);
  if (pk > 1.0)
    for (double& v : expect.samples) v /= pk;
  ASSERT_EQ(r.audio.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i)
    EXPECT_NEAR(r.audio.samples[i], expect.samples[i], 1e-12);
}

TEST(SpecAugment, MaskBudgets) {
  SpecAugmentConfig cfg;
  EXPECT_EQ(cfg.max_freq_width(64) * cfg.n_freq_masks, 24);
  EXPECT_EQ(cfg.time_mask_count(100), 5);
  EXPECT_EQ(cfg.max_time_width(100), 5);
  EXPECT_EQ(cfg.time_mask_count(400), 10);
  EXPECT_EQ(cfg.time_mask_count(10), 1);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto r = spec_augment_with_masks(random_features(s, 100, 64), cfg, s);
    int fcover = 0, tcount = 0;
    for (const auto& m : r.masks) {
      if (m.axis == MaskRegion::Axis::kFrequency) {
        fcover += m.width;
      } else {
        ++tcount;
        EXPECT_LE(m.width, 5);
      }
    }
    EXPECT_LE(fcover, 24);
    EXPECT_EQ(tcount, 5);
  }
}

TEST(SpecAugment, UnmaskedCellsUntouched) {
  const auto f = random_features(1, 80, 64);
  const auto r = spec_augment_with_masks(f, {}, 3);
  for (int t = 0; t < 80; ++t)
    for (int d = 0; d < 64; ++d) {
      bool masked = false;
      for (const auto& m : r.masks) {
        const int x = m.axis == MaskRegion::Axis::kFrequency ? d : t;
        masked |= x >= m.start && x < m.start + m.width;
      }
      if (!masked) EXPECT_EQ(r.features.values(t, d), f.values(t, d));
    }
}

TEST(SpecAugment, ConstantRegionFilledExactly) {
  FeatureMatrix f;
  f.values = Eigen::MatrixXd::Constant(60, 64, -3.7);
  const auto r = spec_augment_with_masks(f, {}, 11);
  EXPECT_TRUE(r.features.values == f.values);
  for (const auto& m : r.masks) {
    if (m.width == 0) continue;
    EXPECT_EQ(m.variance, 0.0);
    EXPECT_EQ(m.mean, -3.7);
  }
}

TEST(SpecAugment, FillStatisticsMatchRegion) {
  // One frequency mask; time masks forced to width 0 so nothing overlaps.
  SpecAugmentConfig cfg;
  cfg.n_freq_masks = 1;
  cfg.max_time_mask_fraction = 1e-3;
  auto stats = [](const Eigen::MatrixXd& v) {
    const double mu = v.mean();
    return std::pair{mu, (v.array() - mu).square().mean()};
  };
  int checked = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto f = random_features(s, 400, 64);
    const auto r = spec_augment_with_masks(f, cfg, s);
    const auto& m = r.masks.front();
    if (m.width * 400 < 100) continue;
    const auto [ma, va] = stats(f.values.block(0, m.start, 400, m.width));
    const auto [mb, vb] = stats(r.features.values.block(0, m.start, 400, m.width));
    EXPECT_NEAR(m.mean, ma, 1e-9);
    EXPECT_NEAR(m.variance, va, 1e-9);
    EXPECT_NEAR(mb, ma, 0.1 * std::abs(ma));
    EXPECT_NEAR(vb, va, 0.1 * va);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(SpecAugment, MaskedFrameFractionBound) {
  SpecAugmentConfig cfg;
  for (int T : {7, 19, 20, 55, 100, 333}) {
    const int K = cfg.time_mask_count(T);
    const double bound = static_cast<double>(K * cfg.max_time_width(T)) / T;
    for (std::uint64_t s = 0; s < 30; ++s) {
      const auto r = spec_augment_with_masks(random_features(s, T, 8), cfg, s);
      std::vector<bool> hit(static_cast<std::size_t>(T), false);
      for (const auto& m : r.masks)
        if (m.axis == MaskRegion::Axis::kTime)
          for (int t = m.start; t < m.start + m.width; ++t) hit[static_cast<std::size_t>(t)] = true;
      const double frac = static_cast<double>(std::count(hit.begin(), hit.end(), true)) / T;
      EXPECT_LE(frac, bound + 1e-12);
    }
  }
}

TEST(Pools, DeterministicAndNonDegenerate) {
  const auto a = make_air_pool(3, 4);
  const auto b = make_air_pool(3, 4);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].taps, b[i].taps);
    EXPECT_NO_THROW(a[i].validate());
  }
  const auto n = make_noise_pool(3, 2, 1.0);
  EXPECT_EQ(n[0].size(), 16000u);
  EXPECT_GT(power(n[1].samples), 0.0);
}
