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

#ifndef RNNTCL_SYNTH_HPP
#define RNNTCL_SYNTH_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rnntcl/error.hpp"
#include "rnntcl/io.hpp"
#include "rnntcl/random.hpp"
#include "rnntcl/waveform.hpp"

namespace rnntcl {

/// Word-level vocabulary. Token 0 is the blank; word i (0-based line) is
/// token i + 1.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      require(!words_[i].empty() && words_[i].find_first_of(" \t\n") == std::string::npos,
              ErrorCode::kInvalidArgument, "vocabulary words must be single tokens");
      require(ids_.emplace(words_[i], static_cast<int>(i) + 1).second,
              ErrorCode::kInvalidArgument, "duplicate vocabulary word '" + words_[i] + "'");
    }
  }

  static Vocabulary from_file(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      words.push_back(line);
    }
    return Vocabulary(std::move(words));
  }

  /// Output-layer size, blank included.
  int size() const { return static_cast<int>(words_.size()) + 1; }
  bool contains(int token) const { return token >= 1 && token < size(); }

  int id(const std::string& word) const {
    auto it = ids_.find(word);
    require(it != ids_.end(), ErrorCode::kUnknownToken, "unknown word '" + word + "'");
    return it->second;
  }
  const std::string& word(int token) const {
    require(contains(token), ErrorCode::kUnknownToken,
            "unknown token id " + std::to_string(token));
    return words_[static_cast<std::size_t>(token - 1)];
  }
  const std::vector<std::string>& words() const { return words_; }

  std::vector<int> tokenize(const std::string& text) const {
    std::istringstream in(text);
    std::vector<int> out;
    std::string w;
    while (in >> w) out.push_back(id(w));
    return out;
  }
  std::string detokenize(const std::vector<int>& tokens) const {
    std::string out;
    for (int t : tokens) {
      if (!out.empty()) out += ' ';
      out += word(t);
    }
    return out;
  }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> ids_;
};

struct VoiceProfile {
  int profile_id = 0;
  double base_pitch = 150.0;  // Hz, [90, 300]
  double rate_scale = 1.0;    // [0.8, 1.25]
  std::array<double, 3> harmonic_weights{1.0, 0.5, 0.25};

  bool operator==(const VoiceProfile&) const = default;
};

inline constexpr double kMinPitch = 90.0, kMaxPitch = 300.0;
inline constexpr double kMinRate = 0.8, kMaxRate = 1.25;

/// Profile `id` of the pool identified by pool_seed; independent of how many
/// profiles are requested.
inline VoiceProfile make_profile(std::uint64_t pool_seed, int id) {
  Rng rng = make_rng(derive_seed(pool_seed, static_cast<std::uint64_t>(id)));
  VoiceProfile p;
  p.profile_id = id;
  p.base_pitch = uniform(rng, kMinPitch, kMaxPitch);
  p.rate_scale = uniform(rng, kMinRate, kMaxRate);
  for (auto& w : p.harmonic_weights) w = uniform(rng, 0.0, 1.0);
  return p;
}

inline std::vector<VoiceProfile> sample_profiles(std::uint64_t pool_seed, int count) {
  require(count >= 1, ErrorCode::kInvalidArgument, "profile count must be >= 1");
  std::vector<VoiceProfile> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(make_profile(pool_seed, i));
  return out;
}

/// Picks k distinct profiles from the pool (partial Fisher-Yates).
inline std::vector<VoiceProfile> choose_profiles(const std::vector<VoiceProfile>& pool,
                                                 int k, Rng& rng) {
  require(k >= 1 && k <= static_cast<int>(pool.size()), ErrorCode::kInvalidArgument,
          "cannot choose " + std::to_string(k) + " of " + std::to_string(pool.size()) +
              " profiles");
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<VoiceProfile> out;
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, i, static_cast<long>(idx.size()) - 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    out.push_back(pool[idx[static_cast<std::size_t>(i)]]);
  }
  return out;
}

struct SynthesisParams {
  double burst_ms = 120.0;
  double gap_ms = 20.0;
  double jitter = 0.03;
  double ramp_ms = 8.0;
  double peak = 0.5;
  double formant_gain = 1.5;
};

/// Token fundamental before the speaker scaling: semitone ladder from 220 Hz,
/// folded by octaves into [200, 2000] Hz.
inline double token_base_frequency(int token) {
  double f = 220.0 * std::pow(2.0, token / 12.0);
  while (f > 2000.0) f *= 0.5;
  while (f < 200.0) f *= 2.0;
  return f;
}

inline double token_fundamental(int token, const VoiceProfile& profile) {
  return token_base_frequency(token) * profile.base_pitch / 150.0;
}

/// Speaker-independent resonances carried by every token: one partial from a
/// lower band and one from an upper band, six slots each.
inline std::array<double, 2> token_formants(int token) {
  static constexpr std::array<double, 6> kLow{2000, 2350, 2750, 3200, 3700, 4250};
  static constexpr std::array<double, 6> kHigh{4900, 5400, 5900, 6400, 6900, 7400};
  const int idx = (token - 1) % 36;
  return {kLow[static_cast<std::size_t>(idx % 6)], kHigh[static_cast<std::size_t>(idx / 6)]};
}

/// Renders tokens as harmonic tone bursts separated by short silences.
inline Waveform synthesize(const std::vector<int>& tokens, const VoiceProfile& profile,
                           std::uint64_t seed, int vocab_size,
                           const SynthesisParams& sp = {}) {
  require(!tokens.empty(), ErrorCode::kInvalidArgument, "cannot synthesize empty token list");
  for (int t : tokens) {
    require(t >= 1 && t < vocab_size, ErrorCode::kUnknownToken,
            "token id " + std::to_string(t) + " not in vocabulary");
  }
  Rng rng = make_rng(seed);
  const double sr = kSampleRate;
  const double nyquist = sr / 2.0;
  const auto gap = static_cast<std::size_t>(std::lround(sp.gap_ms * sr / 1000.0));
  const auto ramp = static_cast<std::size_t>(std::lround(sp.ramp_ms * sr / 1000.0));

  double hmax = 0.0;
  for (double w : profile.harmonic_weights) hmax = std::max(hmax, w);

  Waveform out;
  for (std::size_t n = 0; n < tokens.size(); ++n) {
    const int tok = tokens[n];
    const double dur_ms =
        sp.burst_ms * profile.rate_scale * (1.0 + uniform(rng, -sp.jitter, sp.jitter));
    const auto len = static_cast<std::size_t>(std::lround(dur_ms * sr / 1000.0));
    const double f0 = token_fundamental(tok, profile);
    const auto formants = token_formants(tok);
    if (n > 0) out.samples.insert(out.samples.end(), gap, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / sr;
      double v = 0.0;
      for (int h = 0; h < 3; ++h) {
        const double f = f0 * (h + 1);
        if (f >= nyquist) break;
        const double w = hmax > 0.0 ? profile.harmonic_weights[static_cast<std::size_t>(h)] / hmax
                                    : 1.0;
        v += w * std::sin(2.0 * std::numbers::pi * f * t);
      }
      for (double f : formants) v += sp.formant_gain * std::sin(2.0 * std::numbers::pi * f * t);
      double env = 1.0;
      if (i < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
      if (len - 1 - i < ramp) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * (len - 1 - i) / ramp));
      out.samples.push_back(v * env);
    }
  }
  const double pk = peak(out.samples);
  if (pk > 0.0) {
    for (double& s : out.samples) s *= sp.peak / pk;
  }
  return out;
}

enum class Source { kReal, kSynthetic };

inline const char* to_string(Source s) { return s == Source::kReal ? "real" : "synthetic"; }

inline Source source_from_string(const std::string& s) {
  if (s == "real") return Source::kReal;
  if (s == "synthetic") return Source::kSynthetic;
  fail(ErrorCode::kParse, "invalid source '" + s + "'");
}

struct Utterance {
  std::string id;
  std::vector<int> tokens;
  std::string transcript;
  Source source = Source::kReal;
  Waveform waveform;
};

}  // namespace rnntcl

#endif  // RNNTCL_SYNTH_HPP
