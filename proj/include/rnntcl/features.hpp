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

#ifndef RNNTCL_FEATURES_HPP
#define RNNTCL_FEATURES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "rnntcl/error.hpp"
#include "rnntcl/io.hpp"
#include "rnntcl/waveform.hpp"

namespace rnntcl {

enum class FeatureNorm { kNone, kUtterance };

struct FeatureConfig {
  int n_mels = 64;
  double window_ms = 25.0;
  double shift_ms = 10.0;
  int stack_left = 2;
  int downsample = 3;
  double log_floor = 1e-10;
  FeatureNorm normalize = FeatureNorm::kNone;

  int window_samples() const { return static_cast<int>(std::lround(window_ms * kSampleRate / 1000.0)); }
  int shift_samples() const { return static_cast<int>(std::lround(shift_ms * kSampleRate / 1000.0)); }
  int stacked_dim() const { return n_mels * (stack_left + 1); }

  void validate() const {
    require(window_ms > shift_ms && shift_ms > 0.0, ErrorCode::kInvalidArgument,
            "feature window must exceed a positive shift");
    require(n_mels >= 2 && stack_left >= 0 && downsample >= 1 && log_floor > 0.0,
            ErrorCode::kInvalidArgument, "invalid feature configuration");
  }
};

/// T x D grid; row t is frame t.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  double frame_rate_ms = 10.0;

  int frames() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Precomputes the window and triangular filterbank for repeated extraction.
class LogMelExtractor {
 public:
  explicit LogMelExtractor(const FeatureConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    win_ = cfg_.window_samples();
    shift_ = cfg_.shift_samples();
    nfft_ = 512;
    while (nfft_ < win_) nfft_ *= 2;
    window_.resize(static_cast<std::size_t>(win_));
    for (int n = 0; n < win_; ++n)
      window_[static_cast<std::size_t>(n)] =
          0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (win_ - 1));

    // Area-normalized triangles, equally spaced on the mel scale over
    // [0, Nyquist].
    const int bins = nfft_ / 2 + 1;
    const double top = hz_to_mel(kSampleRate / 2.0);
    std::vector<double> edges(static_cast<std::size_t>(cfg_.n_mels) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
      edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(cfg_.n_mels + 1));
    filters_.resize(static_cast<std::size_t>(cfg_.n_mels));
    for (int m = 0; m < cfg_.n_mels; ++m) {
      const double lo = edges[static_cast<std::size_t>(m)];
      const double mid = edges[static_cast<std::size_t>(m) + 1];
      const double hi = edges[static_cast<std::size_t>(m) + 2];
      const double scale = 2.0 / (hi - lo);
      auto& f = filters_[static_cast<std::size_t>(m)];
      for (int k = 0; k < bins; ++k) {
        const double hz = static_cast<double>(k) * kSampleRate / nfft_;
        double w = 0.0;
        if (hz > lo && hz <= mid) w = (hz - lo) / (mid - lo);
        else if (hz > mid && hz < hi) w = (hi - hz) / (hi - mid);
        if (w > 0.0) {
          if (f.weights.empty()) f.first_bin = k;
          f.weights.push_back(w * scale);
        }
      }
    }
  }

  const FeatureConfig& config() const { return cfg_; }

  int frame_count(std::size_t samples) const {
    return static_cast<int>((samples - static_cast<std::size_t>(win_)) / static_cast<std::size_t>(shift_)) + 1;
  }

  FeatureMatrix operator()(const Waveform& x) const {
    require(x.sample_rate == kSampleRate, ErrorCode::kInvalidArgument,
            "expected 16 kHz audio");
    require(x.samples.size() >= static_cast<std::size_t>(win_), ErrorCode::kTooShort,
            "audio shorter than one analysis window");
    const int frames = frame_count(x.samples.size());
    FeatureMatrix out;
    out.frame_rate_ms = cfg_.shift_ms;
    out.values.resize(frames, cfg_.n_mels);

    std::vector<double> buf(static_cast<std::size_t>(nfft_));
    std::vector<std::complex<double>> spec;
    std::vector<double> power(static_cast<std::size_t>(nfft_ / 2 + 1));
    for (int t = 0; t < frames; ++t) {
      std::fill(buf.begin(), buf.end(), 0.0);
      const std::size_t start = static_cast<std::size_t>(t) * static_cast<std::size_t>(shift_);
      for (int n = 0; n < win_; ++n)
        buf[static_cast<std::size_t>(n)] =
            x.samples[start + static_cast<std::size_t>(n)] * window_[static_cast<std::size_t>(n)];
      fft_.fwd(spec, buf);
      for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
      for (int m = 0; m < cfg_.n_mels; ++m) {
        const auto& f = filters_[static_cast<std::size_t>(m)];
        double e = 0.0;
        for (std::size_t j = 0; j < f.weights.size(); ++j)
          e += f.weights[j] * power[static_cast<std::size_t>(f.first_bin) + j];
        out.values(t, m) = std::log(std::max(e, cfg_.log_floor));
      }
    }
    if (cfg_.normalize == FeatureNorm::kUtterance) normalize_utterance(out);
    return out;
  }

  /// Per-dimension mean/variance normalization over the utterance.
  static void normalize_utterance(FeatureMatrix& f) {
    const Eigen::RowVectorXd mean = f.values.colwise().mean();
    f.values.rowwise() -= mean;
    const Eigen::RowVectorXd sd =
        (f.values.array().square().colwise().mean()).sqrt().max(1e-3).matrix();
    f.values.array().rowwise() /= sd.array();
  }

 private:
  struct Filter {
    int first_bin = 0;
    std::vector<double> weights;
  };

  FeatureConfig cfg_;
  int win_ = 0, shift_ = 0, nfft_ = 0;
  std::vector<double> window_;
  std::vector<Filter> filters_;
  mutable Eigen::FFT<double> fft_;
};

inline FeatureMatrix log_mel(const Waveform& x, const FeatureConfig& cfg) {
  return LogMelExtractor(cfg)(x);
}

/// Concatenates each frame with its stack_left predecessors (first frame
/// repeated at the left edge) and keeps every downsample-th stacked frame,
/// starting at frame 0.
inline FeatureMatrix stack_downsample(const FeatureMatrix& f, const FeatureConfig& cfg) {
  const int T = f.frames();
  const int D = f.dim();
  const int ds = cfg.downsample;
  const int k = cfg.stack_left + 1;
  const int out_frames = (T + ds - 1) / ds;
  FeatureMatrix out;
  out.frame_rate_ms = f.frame_rate_ms * ds;
  out.values.resize(out_frames, static_cast<Eigen::Index>(D) * k);
  for (int r = 0; r < out_frames; ++r) {
    const int t = r * ds;
    for (int j = 0; j < k; ++j) {
      const int src = std::max(0, t - cfg.stack_left + j);
      out.values.block(r, static_cast<Eigen::Index>(j) * D, 1, D) = f.values.row(src);
    }
  }
  return out;
}

/// Dump layout: u32 frames, u32 dim, f32 frame_rate_ms, then frames*dim f32
/// values row-major, all little-endian.
inline std::string encode_feature_dump(const FeatureMatrix& f) {
  ByteWriter w;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(f.frames()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(f.dim()));
  w.put<float>(static_cast<float>(f.frame_rate_ms));
  for (int t = 0; t < f.frames(); ++t)
    for (int d = 0; d < f.dim(); ++d) w.put<float>(static_cast<float>(f.values(t, d)));
  return w.bytes();
}

inline FeatureMatrix decode_feature_dump(std::string_view bytes) {
  ByteReader r(bytes);
  const auto frames = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint32_t>();
  FeatureMatrix f;
  f.frame_rate_ms = r.get<float>();
  require(r.remaining() == static_cast<std::size_t>(frames) * dim * sizeof(float),
          ErrorCode::kCorruptFile, "feature dump size does not match its header");
  f.values.resize(frames, dim);
  for (std::uint32_t t = 0; t < frames; ++t)
    for (std::uint32_t d = 0; d < dim; ++d) f.values(t, d) = r.get<float>();
  return f;
}

}  // namespace rnntcl

#endif  // RNNTCL_FEATURES_HPP
