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
#include <numbers>

#include <gtest/gtest.h>

#include "rnntcl/random.hpp"
#include "rnntcl/transducer_loss.hpp"

using namespace rnntcl;

namespace {

AlignmentLattice random_lattice(Rng& rng, int T, int U, int V) {
  LatticeGrid logits(T, U + 1, V);
  for (double& v : logits.values) v = 2.0 * standard_normal(rng);
  AlignmentLattice lat;
  lat.log_probs = log_softmax(logits);
  for (int u = 0; u < U; ++u) lat.target.push_back(static_cast<int>(uniform_int(rng, 1, V - 1)));
  return lat;
}

AlignmentLattice uniform_lattice(int T, int U, int V) {
  AlignmentLattice lat;
  lat.log_probs = LatticeGrid(T, U + 1, V, -std::log(static_cast<double>(V)));
  for (int u = 0; u < U; ++u) lat.target.push_back(1);
  return lat;
}

}  // namespace

TEST(TransducerLoss, SingleFrameNoLabels) {
  // One path: a single blank with probability 1/2.
  const auto r = transducer_loss(uniform_lattice(1, 0, 2));
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-12);
}

TEST(TransducerLoss, TwoFramesOneLabel) {
  // Two alignments of three symbols, each (1/2)^3.
  const auto r = transducer_loss(uniform_lattice(2, 1, 2));
  EXPECT_NEAR(r.loss, std::log(4.0), 1e-12);
}

TEST(TransducerLoss, PathCounts) {
  EXPECT_EQ(brute_force_loss_paths(uniform_lattice(2, 1, 2)).paths, 2u);
  EXPECT_EQ(brute_force_loss_paths(uniform_lattice(3, 2, 3)).paths, 6u);
  EXPECT_EQ(alignment_count(3, 2), 6u);
  EXPECT_EQ(alignment_count(1, 0), 1u);
}

TEST(TransducerLoss, MatchesBruteForce) {
  Rng rng = make_rng(11);
  int cases = 0;
  for (int rep = 0; rep < 5; ++rep)
    for (int T = 1; T <= 4; ++T)
      for (int U = 0; U <= 3; ++U)
        for (int V = 2; V <= 4; ++V) {
          const auto lat = random_lattice(rng, T, U, V);
          const auto fb = transducer_loss(lat);
          const auto bf = brute_force_loss_paths(lat);
          EXPECT_NEAR(fb.loss, bf.loss, 1e-9) << "T=" << T << " U=" << U << " V=" << V;
          EXPECT_EQ(bf.paths, alignment_count(T, U));
          EXPECT_GE(fb.loss, 0.0);
          ++cases;
        }
  EXPECT_GE(cases, 200);
}

TEST(TransducerLoss, AlphaBetaConsistency) {
  Rng rng = make_rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const int T = static_cast<int>(uniform_int(rng, 1, 7));
    const int U = static_cast<int>(uniform_int(rng, 0, 5));
    const auto lat = random_lattice(rng, T, U, 5);
    const auto r = transducer_loss(lat);
    const double total = -r.loss;
    EXPECT_EQ(r.alpha(0, 0), 0.0);
    EXPECT_NEAR(r.beta(0, 0), total, 1e-9);
    EXPECT_NEAR(r.alpha(T - 1, U) + lat.log_probs(T - 1, U, kBlank), total, 1e-9);
    for (int d = 0; d <= T - 1 + U; ++d) {
      double acc = kNegInf;
      for (int t = 0; t < T; ++t) {
        const int u = d - t;
        if (u < 0 || u > U) continue;
        acc = log_add(acc, r.alpha(t, u) + r.beta(t, u));
      }
      EXPECT_NEAR(acc, total, 1e-9) << "diagonal " << d;
    }
  }
}

TEST(TransducerLoss, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(23);
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    const int T = static_cast<int>(uniform_int(rng, 1, 4));
    const int U = static_cast<int>(uniform_int(rng, 0, 3));
    const int V = static_cast<int>(uniform_int(rng, 2, 4));
    auto lat = random_lattice(rng, T, U, V);
    const auto grad = forward_backward(lat).grad;
    for (std::size_t i = 0; i < lat.log_probs.values.size(); ++i) {
      const double orig = lat.log_probs.values[i];
      lat.log_probs.values[i] = orig + h;
      const double up = forward_backward(lat).loss;
      lat.log_probs.values[i] = orig - h;
      const double down = forward_backward(lat).loss;
      lat.log_probs.values[i] = orig;
      EXPECT_NEAR(grad.values[i], (up - down) / (2 * h), 1e-6);
    }
  }
}

TEST(TransducerLoss, DeterministicPathHasZeroLoss) {
  // T=3, U=2 with alignment: label, blank, label, blank, blank.
  const int T = 3, U = 2, V = 3;
  AlignmentLattice lat;
  lat.target = {1, 2};
  lat.log_probs = LatticeGrid(T, U + 1, V, -std::log(3.0));
  auto certain = [&](int t, int u, int k) {
    for (int j = 0; j < V; ++j) lat.log_probs(t, u, j) = j == k ? 0.0 : kNegInf;
  };
  certain(0, 0, 1);
  certain(0, 1, kBlank);
  certain(1, 1, 2);
  certain(1, 2, kBlank);
  certain(2, 2, kBlank);
  const auto r = transducer_loss(lat);
  EXPECT_NEAR(r.loss, 0.0, 1e-12);
  // In logit space the gradient is stationary along the certain path.
  const auto dz = log_softmax_backward(lat.log_probs, r.grad);
  for (auto [t, u] : {std::pair{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}})
    for (int k = 0; k < V; ++k) EXPECT_NEAR(dz(t, u, k), 0.0, 1e-12);
}

TEST(TransducerLoss, UnreachableCellsGetZeroGradient) {
  // The label can only be emitted at the last frame, so (0,1) and (1,1) are
  // unreachable.
  const int T = 3, U = 1, V = 2;
  AlignmentLattice lat;
  lat.target = {1};
  lat.log_probs = LatticeGrid(T, U + 1, V, std::log(0.5));
  for (int t = 0; t < 2; ++t) {
    lat.log_probs(t, 0, kBlank) = 0.0;
    lat.log_probs(t, 0, 1) = kNegInf;
  }
  const auto r = transducer_loss(lat);
  EXPECT_EQ(r.alpha(0, 1), kNegInf);
  EXPECT_EQ(r.alpha(1, 1), kNegInf);
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < V; ++k) EXPECT_EQ(r.grad(t, 1, k), 0.0);
  // Single path: blank, blank, label at t=2, final blank.
  EXPECT_NEAR(r.loss, 2.0 * std::log(2.0), 1e-12);
}

TEST(TransducerLoss, RejectsBadInput) {
  auto lat = uniform_lattice(2, 1, 2);
  lat.target = {2};
  try {
    transducer_loss(lat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  auto bad = uniform_lattice(2, 1, 2);
  bad.log_probs(1, 0, 0) += 0.1;
  try {
    transducer_loss(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidLattice);
  }
  try {
    brute_force_loss(uniform_lattice(10, 5, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLarge);
  }
}
