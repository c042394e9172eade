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

#ifndef RNNTCL_DECODE_HPP
#define RNNTCL_DECODE_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "rnntcl/rnnt_model.hpp"
#include "rnntcl/transducer_loss.hpp"

namespace rnntcl {

struct Hypothesis {
  std::vector<int> tokens;
  double score = 0.0;  // log-probability of the greedy path, blanks included
};

/// Frame-synchronous greedy transducer search over an abstract model.
///   logits(t, state)  -> Eigen::VectorXd over the vocabulary
///   advance(state, k) -> state after emitting label k
/// Blank (or reaching the per-frame emission cap) moves to the next frame.
template <typename State, typename LogitsFn, typename AdvanceFn>
Hypothesis greedy_search(int frames, State state, LogitsFn&& logits, AdvanceFn&& advance,
                         int max_emit_per_frame = 10) {
  Hypothesis hyp;
  for (int t = 0; t < frames; ++t) {
    for (int emitted = 0;; ++emitted) {
      const Eigen::VectorXd z = logits(t, state);
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < z.size(); ++k)
        if (z(k) > z(best)) best = k;  // ties keep the lowest id
      const double m = z.maxCoeff();
      const double lse = m + std::log((z.array() - m).exp().sum());
      if (best == kBlank || emitted >= max_emit_per_frame) {
        hyp.score += z(kBlank) - lse;
        break;
      }
      hyp.score += z(best) - lse;
      hyp.tokens.push_back(static_cast<int>(best));
      state = advance(state, static_cast<int>(best));
    }
  }
  return hyp;
}

/// x holds one stacked feature frame per column.
inline Hypothesis greedy_decode(const ModelConfig& cfg, const ParameterStore& p,
                                const Eigen::MatrixXd& x, int max_emit_per_frame = 10) {
  const Eigen::MatrixXd enc = encode(cfg, p, x);
  return greedy_search(
      static_cast<int>(enc.cols()), decoder_start(cfg, p),
      [&](int t, const DecoderState& s) { return joint_single(p, enc.col(t), s.output); },
      [&](const DecoderState& s, int k) { return decoder_step(cfg, p, &s, k); },
      max_emit_per_frame);
}

}  // namespace rnntcl

#endif  // RNNTCL_DECODE_HPP
