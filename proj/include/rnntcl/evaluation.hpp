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

#ifndef RNNTCL_EVALUATION_HPP
#define RNNTCL_EVALUATION_HPP

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rnntcl/decode.hpp"
#include "rnntcl/error.hpp"
#include "rnntcl/features.hpp"
#include "rnntcl/metrics.hpp"
#include "rnntcl/synth.hpp"

namespace rnntcl {

/// Clean stacked features, one frame per column, as the encoder expects.
inline Eigen::MatrixXd encoder_features(const LogMelExtractor& extractor,
                                        const FeatureConfig& cfg, const Waveform& w) {
  return stack_downsample(extractor(w), cfg).values.transpose();
}

struct UtteranceResult {
  std::string id;
  std::string reference;
  std::string hypothesis;
  WerReport counts;
};

struct EvalReport {
  std::vector<UtteranceResult> utterances;
  WerReport total;  // corpus level: all errors over all reference words
  std::optional<std::string> baseline_name;
  std::optional<double> baseline_wer;
  std::optional<double> nwer_value;
};

inline EvalReport evaluate(const ModelConfig& model, const ParameterStore& params,
                           const FeatureConfig& features, const std::vector<Utterance>& corpus,
                           const Vocabulary& vocab) {
  require(!corpus.empty(), ErrorCode::kInvalidArgument, "evaluation corpus is empty");
  const LogMelExtractor extractor(features);
  EvalReport rep;
  for (const auto& u : corpus) {
    const auto hyp = greedy_decode(model, params, encoder_features(extractor, features, u.waveform));
    UtteranceResult r{u.id, vocab.detokenize(u.tokens), vocab.detokenize(hyp.tokens), {}};
    r.counts = wer(split_words(r.reference), split_words(r.hypothesis));
    rep.total.substitutions += r.counts.substitutions;
    rep.total.insertions += r.counts.insertions;
    rep.total.deletions += r.counts.deletions;
    rep.total.reference_words += r.counts.reference_words;
    rep.utterances.push_back(std::move(r));
  }
  rep.total.wer = static_cast<double>(rep.total.errors()) / rep.total.reference_words;
  return rep;
}

inline void attach_baseline(EvalReport& rep, const std::string& name, double baseline_wer) {
  rep.baseline_name = name;
  rep.baseline_wer = baseline_wer;
  rep.nwer_value = nwer(rep.total.wer, baseline_wer);
}

inline std::string format_report(const EvalReport& rep) {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (const auto& u : rep.utterances)
    out << "utt\t" << u.id << '\t' << u.reference << '\t' << u.hypothesis << '\t'
        << u.counts.errors() << '\n';
  out << "summary\n";
  out << "utterances " << rep.utterances.size() << '\n';
  out << "reference_words " << rep.total.reference_words << '\n';
  out << "substitutions " << rep.total.substitutions << '\n';
  out << "insertions " << rep.total.insertions << '\n';
  out << "deletions " << rep.total.deletions << '\n';
  out << "wer " << num(rep.total.wer) << '\n';
  if (rep.nwer_value) {
    out << "baseline " << *rep.baseline_name << '\n';
    out << "baseline_wer " << num(*rep.baseline_wer) << '\n';
    out << "nwer " << num(*rep.nwer_value) << '\n';
  }
  return out.str();
}

/// Corpus WER from the summary block of a report.
inline double report_wer(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool in_summary = false;
  while (std::getline(in, line)) {
    if (line == "summary") {
      in_summary = true;
      continue;
    }
    if (in_summary && line.rfind("wer ", 0) == 0) {
      try {
        return std::stod(line.substr(4));
      } catch (const std::exception&) {
        break;
      }
    }
  }
  fail(ErrorCode::kParse, "report has no summary WER line");
}

}  // namespace rnntcl

#endif  // RNNTCL_EVALUATION_HPP
