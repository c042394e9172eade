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

#ifndef RNNTCL_TRANSDUCER_LOSS_HPP
#define RNNTCL_TRANSDUCER_LOSS_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnntcl/error.hpp"

namespace rnntcl {

inline constexpr int kBlank = 0;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) that tolerates -inf on either side.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

/// Dense T x (U+1) x V grid, row-major with the vocabulary innermost.
struct LatticeGrid {
  int frames = 0;
  int positions = 0;  // U + 1
  int vocab = 0;
  std::vector<double> values;

  LatticeGrid() = default;
  LatticeGrid(int t, int u1, int v, double fill = 0.0)
      : frames(t), positions(u1), vocab(v),
        values(static_cast<std::size_t>(t) * u1 * v, fill) {}

  std::size_t offset(int t, int u) const {
    return (static_cast<std::size_t>(t) * positions + u) * vocab;
  }
  double& operator()(int t, int u, int k) { return values[offset(t, u) + k]; }
  double operator()(int t, int u, int k) const {
    return values[offset(t, u) + k];
  }
  std::span<double> cell(int t, int u) {
    return {values.data() + offset(t, u), static_cast<std::size_t>(vocab)};
  }
  std::span<const double> cell(int t, int u) const {
    return {values.data() + offset(t, u), static_cast<std::size_t>(vocab)};
  }
};

struct AlignmentLattice {
  LatticeGrid log_probs;
  std::vector<int> target;  // labels in [1, V), no blanks
};

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd alpha;  // T x (U+1), log domain
  Eigen::MatrixXd beta;   // T x (U+1), log domain
  LatticeGrid grad;       // dLoss / dlog_probs
  double total_log_prob() const { return -loss; }
};

/// Log-softmax of every lattice cell; shapes are preserved.
inline LatticeGrid log_softmax(const LatticeGrid& logits) {
  LatticeGrid out = logits;
  for (int t = 0; t < logits.frames; ++t) {
    for (int u = 0; u < logits.positions; ++u) {
      auto cell = out.cell(t, u);
      const double m = *std::max_element(cell.begin(), cell.end());
      double sum = 0.0;
      for (double v : cell) sum += std::exp(v - m);
      const double lse = m + std::log(sum);
      for (double& v : cell) v -= lse;
    }
  }
  return out;
}

namespace detail {

inline void check_shape(const AlignmentLattice& lat) {
  const auto& lp = lat.log_probs;
  require(lp.frames >= 1, ErrorCode::kInvalidArgument, "lattice needs T >= 1");
  require(lp.vocab >= 2, ErrorCode::kInvalidArgument, "lattice needs V >= 2");
  require(lp.positions == static_cast<int>(lat.target.size()) + 1,
          ErrorCode::kInvalidArgument,
          "lattice second axis must equal target length + 1");
  require(lp.values.size() ==
              static_cast<std::size_t>(lp.frames) * lp.positions * lp.vocab,
          ErrorCode::kInvalidArgument, "lattice storage size mismatch");
  for (int y : lat.target) {
    require(y >= 1 && y < lp.vocab, ErrorCode::kInvalidArgument,
            "target label " + std::to_string(y) + " outside [1, V)");
  }
}

inline void check_normalized(const LatticeGrid& lp, double tol) {
  for (int t = 0; t < lp.frames; ++t) {
    for (int u = 0; u < lp.positions; ++u) {
      double lse = kNegInf;
      for (double v : lp.cell(t, u)) {
        require(!std::isnan(v) && v != std::numeric_limits<double>::infinity(),
                ErrorCode::kInvalidLattice, "non-finite log-probability");
        lse = log_add(lse, v);
      }
      require(std::abs(lse) <= tol, ErrorCode::kInvalidLattice,
              "cell (" + std::to_string(t) + "," + std::to_string(u) +
                  ") is not a normalized log-distribution");
    }
  }
}

}  // namespace detail

/// Forward-backward over the alignment lattice with no normalization check.
/// The log-probabilities are treated as free inputs, which is what the
/// finite-difference tests perturb.
inline LossResult forward_backward(const AlignmentLattice& lat) {
  detail::check_shape(lat);
  const auto& lp = lat.log_probs;
  const int T = lp.frames;
  const int U = lp.positions - 1;
  const auto& y = lat.target;

  LossResult r;
  r.alpha = Eigen::MatrixXd::Constant(T, U + 1, kNegInf);
  r.beta = Eigen::MatrixXd::Constant(T, U + 1, kNegInf);

  auto& alpha = r.alpha;
  alpha(0, 0) = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double a = kNegInf;
      if (t > 0) a = alpha(t - 1, u) + lp(t - 1, u, kBlank);
      if (u > 0) a = log_add(a, alpha(t, u - 1) + lp(t, u - 1, y[u - 1]));
      alpha(t, u) = a;
    }
  }

  auto& beta = r.beta;
  beta(T - 1, U) = lp(T - 1, U, kBlank);
  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      double b = kNegInf;
      if (t < T - 1) b = beta(t + 1, u) + lp(t, u, kBlank);
      if (u < U) b = log_add(b, beta(t, u + 1) + lp(t, u, y[u]));
      beta(t, u) = b;
    }
  }

  const double total = alpha(T - 1, U) + lp(T - 1, U, kBlank);
  r.loss = -total;
  r.grad = LatticeGrid(T, U + 1, lp.vocab, 0.0);
  if (total == kNegInf) {
    r.loss = std::numeric_limits<double>::infinity();
    return r;
  }

  // Occupancy of each transition, negated.
  auto edge = [&](double a, double l, double b) {
    const double s = a + l + b;
    return s == kNegInf ? 0.0 : -std::exp(s - total);
  };
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const double a = alpha(t, u);
      if (a == kNegInf) continue;
      if (t < T - 1) {
        r.grad(t, u, kBlank) = edge(a, lp(t, u, kBlank), beta(t + 1, u));
      } else if (u == U) {
        r.grad(t, u, kBlank) = edge(a, lp(t, u, kBlank), 0.0);
      }
      if (u < U) {
        r.grad(t, u, y[u]) = edge(a, lp(t, u, y[u]), beta(t, u + 1));
      }
    }
  }
  return r;
}

/// Negative log-posterior of the target over all blank-augmented alignments.
/// Every lattice cell must be a normalized log-distribution.
inline LossResult transducer_loss(const AlignmentLattice& lat,
                                  double normalization_tol = 1e-9) {
  detail::check_shape(lat);
  detail::check_normalized(lat.log_probs, normalization_tol);
  return forward_backward(lat);
}

inline LatticeGrid loss_gradients(const AlignmentLattice& lat) {
  return transducer_loss(lat).grad;
}

inline constexpr int kBruteForceMaxSize = 14;

/// Number of alignments C(T+U-1, U) enumerated by brute_force_loss.
inline std::uint64_t alignment_count(int frames, int labels) {
  std::uint64_t c = 1;
  const int n = frames + labels - 1;
  for (int k = 1; k <= labels; ++k) c = c * (n - labels + k) / k;
  return c;
}

struct BruteForceResult {
  double loss = 0.0;
  std::uint64_t paths = 0;
};

/// Enumerates every interleaving of T-1 blanks and U labels, followed by the
/// terminating blank, and sums the path probabilities directly.
inline BruteForceResult brute_force_loss_paths(const AlignmentLattice& lat) {
  detail::check_shape(lat);
  const auto& lp = lat.log_probs;
  const int T = lp.frames;
  const int U = lp.positions - 1;
  require(T + U <= kBruteForceMaxSize, ErrorCode::kTooLarge,
          "brute force enumeration limited to T + U <= 14");

  const int slots = T - 1 + U;
  BruteForceResult out;
  double total = kNegInf;
  for (std::uint32_t mask = 0; mask < (1u << slots); ++mask) {
    if (std::popcount(mask) != U) continue;
    int t = 0, u = 0;
    double score = 0.0;
    for (int s = 0; s < slots; ++s) {
      if (mask & (1u << s)) {
        score += lp(t, u, lat.target[u]);
        ++u;
      } else {
        score += lp(t, u, kBlank);
        ++t;
      }
    }
    score += lp(T - 1, U, kBlank);
    total = log_add(total, score);
    ++out.paths;
  }
  out.loss = -total;
  return out;
}

inline double brute_force_loss(const AlignmentLattice& lat) {
  return brute_force_loss_paths(lat).loss;
}

/// Chain rule through log_softmax: dL/dz = g - softmax(z) * sum(g).
inline LatticeGrid log_softmax_backward(const LatticeGrid& log_probs,
                                        const LatticeGrid& grad_log_probs) {
  LatticeGrid out(log_probs.frames, log_probs.positions, log_probs.vocab);
  for (int t = 0; t < log_probs.frames; ++t) {
    for (int u = 0; u < log_probs.positions; ++u) {
      auto g = grad_log_probs.cell(t, u);
      auto lp = log_probs.cell(t, u);
      auto o = out.cell(t, u);
      double sum = 0.0;
      for (double v : g) sum += v;
      for (int k = 0; k < log_probs.vocab; ++k) {
        o[k] = g[k] - std::exp(lp[k]) * sum;
      }
    }
  }
  return out;
}

}  // namespace rnntcl

#endif  // RNNTCL_TRANSDUCER_LOSS_HPP
