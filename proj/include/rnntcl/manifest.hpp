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

#ifndef RNNTCL_MANIFEST_HPP
#define RNNTCL_MANIFEST_HPP

#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rnntcl/error.hpp"
#include "rnntcl/io.hpp"
#include "rnntcl/synth.hpp"
#include "rnntcl/waveform.hpp"

namespace rnntcl {

struct ManifestEntry {
  std::string id;
  std::string audio_path;  // as written; relative to the manifest directory
  std::string transcript;
  Source source = Source::kReal;
};

/// Tab-separated: id, audio_path, transcript, source.
inline std::vector<ManifestEntry> parse_manifest(const std::string& text,
                                                 const std::string& origin = "<manifest>") {
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    require(fields.size() == 4, ErrorCode::kParse, where + ": expected 4 tab-separated fields");
    ManifestEntry e{fields[0], fields[1], fields[2], Source::kReal};
    require(!e.id.empty() && !e.audio_path.empty(), ErrorCode::kParse,
            where + ": empty id or audio path");
    require(fields[3] == "real" || fields[3] == "synthetic", ErrorCode::kParse,
            where + ": source must be 'real' or 'synthetic'");
    e.source = source_from_string(fields[3]);
    require(ids.insert(e.id).second, ErrorCode::kParse, where + ": duplicate id '" + e.id + "'");
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string format_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out;
  for (const auto& e : entries)
    out += e.id + '\t' + e.audio_path + '\t' + e.transcript + '\t' + to_string(e.source) + '\n';
  return out;
}

/// Reads the manifest and every referenced WAV file.
inline std::vector<Utterance> load_corpus(const std::filesystem::path& manifest,
                                          const Vocabulary& vocab) {
  const auto entries = parse_manifest(read_file(manifest), manifest.string());
  std::vector<Utterance> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    std::filesystem::path p(e.audio_path);
    if (p.is_relative()) p = manifest.parent_path() / p;
    Utterance u;
    u.id = e.id;
    u.transcript = e.transcript;
    u.tokens = vocab.tokenize(e.transcript);
    u.source = e.source;
    u.waveform = read_wav(p);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace rnntcl

#endif  // RNNTCL_MANIFEST_HPP
