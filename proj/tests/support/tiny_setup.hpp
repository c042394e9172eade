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

// Small corpora and model shapes for tests that need a trainable setup.

#ifndef RNNTCL_TESTS_TINY_SETUP_HPP
#define RNNTCL_TESTS_TINY_SETUP_HPP

#include <vector>

#include "rnntcl/augment.hpp"
#include "rnntcl/random.hpp"
#include "rnntcl/rnnt_model.hpp"
#include "rnntcl/synth.hpp"
#include "rnntcl/training.hpp"

namespace rnntcl::testing {

inline std::vector<Utterance> tiny_corpus(std::uint64_t seed, int count, int vocab_size,
                                          Source source) {
  const auto pool = sample_profiles(seed, 20);
  Rng rng = make_rng(seed);
  std::vector<Utterance> out;
  for (int i = 0; i < count; ++i) {
    Utterance u;
    u.id = std::to_string(i);
    for (long k = 0, n = uniform_int(rng, 1, 2); k < n; ++k)
      u.tokens.push_back(static_cast<int>(uniform_int(rng, 1, vocab_size - 1)));
    u.source = source;
    u.waveform = synthesize(u.tokens, pool[static_cast<std::size_t>(uniform_int(rng, 0, 19))],
                            rng(), vocab_size);
    out.push_back(std::move(u));
  }
  return out;
}

inline FeatureConfig tiny_features() {
  FeatureConfig f;
  f.n_mels = 12;
  f.normalize = FeatureNorm::kUtterance;
  return f;
}

inline ModelConfig tiny_model(int vocab_size = 6) {
  ModelConfig m;
  m.enc_layers = 1;
  m.enc_units = 8;
  m.dec_layers = 1;
  m.dec_units = 8;
  m.proj_dim = 6;
  m.joint_units = 8;
  m.vocab_size = vocab_size;
  m.input_dim = tiny_features().stacked_dim();
  return m;
}

inline TrainingData tiny_data(bool with_synth = true) {
  return TrainingData(tiny_corpus(1, 12, 6, Source::kReal),
                      with_synth ? tiny_corpus(2, 6, 6, Source::kSynthetic) : std::vector<Utterance>{},
                      tiny_features(), SpecAugmentConfig{}, CorruptionPolicy{},
                      make_air_pool(3, 2), make_noise_pool(4, 2, 0.5));
}

inline StageConfig tiny_stage(int steps, double lr = 1e-2) {
  StageConfig s;
  s.name = "tiny";
  s.steps = steps;
  s.batch_size = 2;
  s.seed = 99;
  s.schedule = LrSchedule::constant(lr);
  return s;
}

}  // namespace rnntcl::testing

#endif  // RNNTCL_TESTS_TINY_SETUP_HPP
