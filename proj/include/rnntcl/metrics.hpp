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

#ifndef RNNTCL_METRICS_HPP
#define RNNTCL_METRICS_HPP

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "rnntcl/error.hpp"

namespace rnntcl {

struct WerReport {
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int reference_words = 0;
  double wer = 0.0;

  int errors() const { return substitutions + insertions + deletions; }
};

inline std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

/// Unit-cost Levenshtein alignment. When several alignments have the same
/// cost the backtrace prefers substitution, then insertion, then deletion.
inline WerReport wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  require(!ref.empty(), ErrorCode::kInvalidArgument, "reference must not be empty");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1), d[i][j - 1] + 1,
                          d[i - 1][j] + 1});

  WerReport r;
  r.reference_words = static_cast<int>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const int sub = ref[i - 1] == hyp[j - 1] ? 0 : 1;
      if (d[i][j] == d[i - 1][j - 1] + sub) {
        r.substitutions += sub;
        --i, --j;
        continue;
      }
    }
    if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      ++r.insertions;
      --j;
    } else {
      ++r.deletions;
      --i;
    }
  }
  r.wer = static_cast<double>(r.errors()) / static_cast<double>(n);
  return r;
}

inline WerReport wer(const std::string& ref, const std::string& hyp) {
  return wer(split_words(ref), split_words(hyp));
}

/// 100 * wer / baseline_wer.
inline double nwer(double wer_value, double baseline_wer) {
  require(baseline_wer > 0.0, ErrorCode::kUndefinedBaseline,
          "baseline WER must be positive for NWER");
  return 100.0 * (wer_value / baseline_wer);
}

/// (a - b) / b
inline double relative_change(double a, double b) {
  require(b > 0.0, ErrorCode::kInvalidArgument, "relative change needs a positive reference");
  return (a - b) / b;
}

}  // namespace rnntcl

#endif  // RNNTCL_METRICS_HPP
