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

#ifndef RNNTCL_WAVEFORM_HPP
#define RNNTCL_WAVEFORM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rnntcl/error.hpp"
#include "rnntcl/io.hpp"

namespace rnntcl {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool operator==(const Waveform&) const = default;
};

inline double mean_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

inline double peak(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

/// Serializes as RIFF/WAVE, 16-bit signed PCM, mono. Samples are clamped to
/// [-1, 1] before quantization.
inline std::string encode_wav(const Waveform& w) {
  ByteWriter out;
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.put_raw("RIFF", 4);
  out.put<std::uint32_t>(36 + data_bytes);
  out.put_raw("WAVE", 4);
  out.put_raw("fmt ", 4);
  out.put<std::uint32_t>(16);
  out.put<std::uint16_t>(1);  // PCM
  out.put<std::uint16_t>(1);  // mono
  out.put<std::uint32_t>(static_cast<std::uint32_t>(w.sample_rate));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(w.sample_rate) * 2);
  out.put<std::uint16_t>(2);
  out.put<std::uint16_t>(16);
  out.put_raw("data", 4);
  out.put<std::uint32_t>(data_bytes);
  for (double v : w.samples) {
    const double c = std::clamp(v, -1.0, 1.0);
    out.put<std::int16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0)));
  }
  return out.bytes();
}

inline Waveform decode_wav(std::string_view bytes, const std::string& origin = "<memory>") {
  ByteReader in(bytes);
  char tag[4];
  in.get_raw(tag, 4);
  require(std::string_view(tag, 4) == "RIFF", ErrorCode::kCorruptFile, origin + ": not RIFF");
  in.get<std::uint32_t>();
  in.get_raw(tag, 4);
  require(std::string_view(tag, 4) == "WAVE", ErrorCode::kCorruptFile, origin + ": not WAVE");

  bool have_fmt = false;
  Waveform w;
  while (in.remaining() >= 8) {
    in.get_raw(tag, 4);
    const auto size = in.get<std::uint32_t>();
    const std::string_view id(tag, 4);
    if (id == "fmt ") {
      const auto format = in.get<std::uint16_t>();
      const auto channels = in.get<std::uint16_t>();
      w.sample_rate = static_cast<int>(in.get<std::uint32_t>());
      in.get<std::uint32_t>();
      in.get<std::uint16_t>();
      const auto bits = in.get<std::uint16_t>();
      require(format == 1 && channels == 1 && bits == 16, ErrorCode::kInvalidArgument,
              origin + ": only 16-bit PCM mono is supported");
      std::vector<char> skip(size - 16);
      if (!skip.empty()) in.get_raw(skip.data(), skip.size());
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, ErrorCode::kCorruptFile, origin + ": data before fmt chunk");
      w.samples.resize(size / 2);
      for (auto& s : w.samples) s = in.get<std::int16_t>() / 32767.0;
      return w;
    } else {
      std::vector<char> skip(size + (size & 1));
      if (!skip.empty()) in.get_raw(skip.data(), skip.size());
    }
  }
  fail(ErrorCode::kCorruptFile, origin + ": no data chunk");
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w) {
  atomic_write(path, encode_wav(w));
}

inline Waveform read_wav(const std::filesystem::path& path) {
  return decode_wav(read_file(path), path.string());
}

}  // namespace rnntcl

#endif  // RNNTCL_WAVEFORM_HPP
