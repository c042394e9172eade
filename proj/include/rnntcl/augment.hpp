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

#ifndef RNNTCL_AUGMENT_HPP
#define RNNTCL_AUGMENT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "rnntcl/error.hpp"
#include "rnntcl/features.hpp"
#include "rnntcl/random.hpp"
#include "rnntcl/waveform.hpp"

namespace rnntcl {

struct AcousticImpulseResponse {
  std::vector<double> taps;  // taps[0] is time zero
  int sample_rate = kSampleRate;

  void validate() const {
    require(!taps.empty(), ErrorCode::kInvalidArgument, "impulse response has no taps");
    require(mean_power(taps) > 0.0, ErrorCode::kInvalidArgument,
            "impulse response has zero energy");
  }
};

/// First x.size() samples of the full linear convolution x * h.
inline std::vector<double> convolve_truncated(const std::vector<double>& x,
                                              const std::vector<double>& h) {
  const std::size_t n = x.size();
  const std::size_t m = std::min(h.size(), n);
  std::vector<double> y(n, 0.0);
  if (n == 0 || m == 0) return y;
  if (n * m <= 65536) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t kmax = std::min(m - 1, i);
      double acc = 0.0;
      for (std::size_t k = 0; k <= kmax; ++k) acc += h[k] * x[i - k];
      y[i] = acc;
    }
    return y;
  }
  std::size_t nfft = 1;
  while (nfft < n + m - 1) nfft <<= 1;
  Eigen::FFT<double> fft;
  std::vector<double> xa(nfft, 0.0), ha(nfft, 0.0);
  std::copy(x.begin(), x.end(), xa.begin());
  std::copy(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(m), ha.begin());
  std::vector<std::complex<double>> xs, hs;
  fft.fwd(xs, xa);
  fft.fwd(hs, ha);
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= hs[k];
  std::vector<double> full;
  fft.inv(full, xs);
  std::copy(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n), y.begin());
  return y;
}

/// Convolves with the impulse response, truncates to the input length and
/// rescales to the input's peak amplitude.
inline Waveform reverberate(const Waveform& x, const AcousticImpulseResponse& air) {
  require(x.sample_rate == air.sample_rate, ErrorCode::kInvalidArgument,
          "sample rate mismatch between audio and impulse response");
  air.validate();
  Waveform out{convolve_truncated(x.samples, air.taps), x.sample_rate};
  const double in_peak = peak(x.samples);
  const double out_peak = peak(out.samples);
  if (out_peak > 0.0) {
    const double g = in_peak / out_peak;
    for (double& v : out.samples) v *= g;
  }
  return out;
}

/// Noise of exactly n samples starting at offset, tiled when too short.
inline std::vector<double> fit_noise(const std::vector<double>& noise, std::size_t n,
                                     std::size_t offset = 0) {
  require(!noise.empty(), ErrorCode::kDegenerateSignal, "empty noise signal");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = noise[(offset + i) % noise.size()];
  return out;
}

inline double noise_gain(double signal_power, double noise_power, double snr_db) {
  return std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
}

/// x + g * noise, with g chosen so that the component SNR equals snr_db.
inline Waveform mix_noise(const Waveform& x, const Waveform& noise, double snr_db,
                          std::size_t offset = 0) {
  require(x.sample_rate == noise.sample_rate, ErrorCode::kInvalidArgument,
          "sample rate mismatch between audio and noise");
  const auto n = fit_noise(noise.samples, x.size(), offset);
  const double px = mean_power(x.samples);
  const double pn = mean_power(n);
  require(px > 0.0, ErrorCode::kDegenerateSignal, "signal has zero power");
  require(pn > 0.0, ErrorCode::kDegenerateSignal, "noise has zero power");
  const double g = noise_gain(px, pn, snr_db);
  Waveform out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += g * n[i];
  return out;
}

struct CorruptionPolicy {
  double p_reverb = 0.6;
  double p_noise = 0.6;
  double snr_low_db = 10.0;
  double snr_high_db = 20.0;

  void validate() const {
    require(p_reverb >= 0.0 && p_reverb <= 1.0 && p_noise >= 0.0 && p_noise <= 1.0,
            ErrorCode::kConfiguration, "corruption probabilities must lie in [0, 1]");
    require(snr_low_db <= snr_high_db, ErrorCode::kConfiguration,
            "snr_low_db must not exceed snr_high_db");
  }
};

struct CorruptionResult {
  Waveform audio;
  bool reverberated = false;
  bool noised = false;
  int air_index = -1;
  int noise_index = -1;
  double snr_db = 0.0;
};

/// One on-the-fly corruption draw: reverberation and additive noise fire
/// independently; reverberation is applied first when both fire.
inline CorruptionResult corrupt(const Waveform& x, const CorruptionPolicy& policy,
                                const std::vector<AcousticImpulseResponse>& air_pool,
                                const std::vector<Waveform>& noise_pool,
                                std::uint64_t seed) {
  policy.validate();
  require(policy.p_reverb == 0.0 || !air_pool.empty(), ErrorCode::kConfiguration,
          "reverberation enabled but the impulse-response pool is empty");
  require(policy.p_noise == 0.0 || !noise_pool.empty(), ErrorCode::kConfiguration,
          "noise addition enabled but the noise pool is empty");

  Rng rng = make_rng(seed);
  CorruptionResult r;
  r.reverberated = uniform01(rng) < policy.p_reverb;
  r.noised = uniform01(rng) < policy.p_noise;
  r.audio = x;
  if (r.reverberated) {
    r.air_index = static_cast<int>(uniform_int(rng, 0, static_cast<long>(air_pool.size()) - 1));
    r.audio = reverberate(r.audio, air_pool[static_cast<std::size_t>(r.air_index)]);
  }
  if (r.noised) {
    r.noise_index =
        static_cast<int>(uniform_int(rng, 0, static_cast<long>(noise_pool.size()) - 1));
    const auto& noise = noise_pool[static_cast<std::size_t>(r.noise_index)];
    std::size_t offset = 0;
    if (noise.size() > x.size())
      offset = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(noise.size() - x.size())));
    r.snr_db = uniform(rng, policy.snr_low_db, policy.snr_high_db);
    r.audio = mix_noise(r.audio, noise, r.snr_db, offset);
    const double pk = peak(r.audio.samples);
    if (pk > 1.0) {
      for (double& v : r.audio.samples) v /= pk;
    }
  }
  return r;
}

// ------------------------------------------------------------ SpecAugment

struct SpecAugmentConfig {
  int n_freq_masks = 2;
  double max_freq_fraction = 0.375;
  double max_time_mask_fraction = 0.05;
  double time_mask_count_fraction = 0.05;
  int time_mask_count_cap = 10;

  void validate() const {
    auto frac = [](double f) { return f > 0.0 && f <= 1.0; };
    require(frac(max_freq_fraction) && frac(max_time_mask_fraction) &&
                frac(time_mask_count_fraction),
            ErrorCode::kConfiguration, "SpecAugment fractions must lie in (0, 1]");
    require(n_freq_masks >= 0 && time_mask_count_cap >= 0, ErrorCode::kConfiguration,
            "SpecAugment counts must be non-negative");
  }

  /// Widest single frequency mask: the combined budget split evenly.
  int max_freq_width(int bins) const {
    if (n_freq_masks == 0) return 0;
    return static_cast<int>(std::floor(max_freq_fraction * bins)) / n_freq_masks;
  }
  int max_time_width(int frames) const {
    return static_cast<int>(std::floor(max_time_mask_fraction * frames));
  }
  int time_mask_count(int frames) const {
    const int proportional = static_cast<int>(std::floor(time_mask_count_fraction * frames));
    return std::max(1, std::min(proportional, time_mask_count_cap));
  }
};

struct MaskRegion {
  enum class Axis { kFrequency, kTime } axis = Axis::kFrequency;
  int start = 0;
  int width = 0;
  double mean = 0.0;
  double variance = 0.0;
};

struct SpecAugmentResult {
  FeatureMatrix features;
  std::vector<MaskRegion> masks;  // in application order
};

/// Frequency masks first, then time masks. Each masked cell is replaced by a
/// Gaussian draw whose mean and variance come from the original values inside
/// that mask; where masks overlap the later mask wins.
inline SpecAugmentResult spec_augment_with_masks(const FeatureMatrix& f,
                                                 const SpecAugmentConfig& cfg,
                                                 std::uint64_t seed) {
  cfg.validate();
  const int T = f.frames();
  const int D = f.dim();
  require(T >= 1 && D >= 2, ErrorCode::kInvalidArgument,
          "SpecAugment needs at least one frame and two bins");
  Rng rng = make_rng(seed);
  SpecAugmentResult r;
  r.features = f;

  auto apply = [&](MaskRegion m) {
    const bool freq = m.axis == MaskRegion::Axis::kFrequency;
    auto block = freq ? f.values.block(0, m.start, T, m.width)
                      : f.values.block(m.start, 0, m.width, D);
    const Eigen::Index n = block.size();
    if (n > 0) {
      // Shift by the first value so that a constant region yields exactly
      // that constant with zero variance.
      const double ref = block(0, 0);
      double s = 0.0, sq = 0.0;
      for (Eigen::Index j = 0; j < block.cols(); ++j)
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
          const double d = block(i, j) - ref;
          s += d;
          sq += d * d;
        }
      const double md = s / static_cast<double>(n);
      m.mean = ref + md;
      m.variance = std::max(0.0, sq / static_cast<double>(n) - md * md);
      const double sd = std::sqrt(m.variance);
      auto dst = freq ? r.features.values.block(0, m.start, T, m.width)
                      : r.features.values.block(m.start, 0, m.width, D);
      for (Eigen::Index j = 0; j < dst.cols(); ++j)
        for (Eigen::Index i = 0; i < dst.rows(); ++i)
          dst(i, j) = sd > 0.0 ? m.mean + sd * standard_normal(rng) : m.mean;
    }
    r.masks.push_back(m);
  };

  const int fmax = cfg.max_freq_width(D);
  for (int i = 0; i < cfg.n_freq_masks; ++i) {
    MaskRegion m;
    m.axis = MaskRegion::Axis::kFrequency;
    m.width = static_cast<int>(uniform_int(rng, 0, fmax));
    m.start = static_cast<int>(uniform_int(rng, 0, D - m.width));
    apply(m);
  }
  const int tmax = cfg.max_time_width(T);
  const int count = cfg.time_mask_count(T);
  for (int i = 0; i < count; ++i) {
    MaskRegion m;
    m.axis = MaskRegion::Axis::kTime;
    m.width = static_cast<int>(uniform_int(rng, 0, tmax));
    m.start = static_cast<int>(uniform_int(rng, 0, T - m.width));
    apply(m);
  }
  return r;
}

inline FeatureMatrix spec_augment(const FeatureMatrix& f, const SpecAugmentConfig& cfg,
                                  std::uint64_t seed) {
  return spec_augment_with_masks(f, cfg, seed).features;
}

// ------------------------------------------------------------------ pools

/// Synthetic room responses: a unit direct path followed by an exponentially
/// decaying diffuse tail with a random decay time.
inline std::vector<AcousticImpulseResponse> make_air_pool(std::uint64_t seed, int count,
                                                          double seconds = 0.2) {
  std::vector<AcousticImpulseResponse> pool;
  const auto len = static_cast<std::size_t>(seconds * kSampleRate);
  for (int i = 0; i < count; ++i) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(i), 1));
    const double rt60 = uniform(rng, 0.15, 0.5);
    const double tail = uniform(rng, 0.2, 0.5);
    const auto predelay = static_cast<std::size_t>(uniform_int(rng, 16, 160));
    AcousticImpulseResponse air;
    air.taps.assign(len, 0.0);
    air.taps[0] = 1.0;
    for (std::size_t n = predelay; n < len; ++n) {
      const double t = static_cast<double>(n) / kSampleRate;
      air.taps[n] = tail * standard_normal(rng) * std::pow(10.0, -3.0 * t / rt60);
    }
    pool.push_back(std::move(air));
  }
  return pool;
}

/// Low-passed Gaussian noise clips with random colour.
inline std::vector<Waveform> make_noise_pool(std::uint64_t seed, int count,
                                             double seconds = 2.0) {
  std::vector<Waveform> pool;
  const auto len = static_cast<std::size_t>(seconds * kSampleRate);
  for (int i = 0; i < count; ++i) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(i), 2));
    const double pole = uniform(rng, 0.0, 0.95);
    Waveform w;
    w.samples.resize(len);
    double state = 0.0;
    for (auto& s : w.samples) {
      state = pole * state + (1.0 - pole) * standard_normal(rng);
      s = state;
    }
    const double pk = peak(w.samples);
    for (auto& s : w.samples) s *= 0.5 / pk;
    pool.push_back(std::move(w));
  }
  return pool;
}

/// All .wav files in a directory, in lexicographic filename order.
inline std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::kConfiguration,
          "pool directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

inline std::vector<AcousticImpulseResponse> load_air_pool(const std::filesystem::path& dir) {
  std::vector<AcousticImpulseResponse> pool;
  for (const auto& p : list_wavs(dir)) {
    auto w = read_wav(p);
    pool.push_back({std::move(w.samples), w.sample_rate});
    pool.back().validate();
  }
  return pool;
}

inline std::vector<Waveform> load_noise_pool(const std::filesystem::path& dir) {
  std::vector<Waveform> pool;
  for (const auto& p : list_wavs(dir)) pool.push_back(read_wav(p));
  return pool;
}

}  // namespace rnntcl

#endif  // RNNTCL_AUGMENT_HPP
