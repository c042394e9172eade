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

#ifndef RNNTCL_OPTIM_HPP
#define RNNTCL_OPTIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnntcl/error.hpp"
#include "rnntcl/parameters.hpp"

namespace rnntcl {

/// Linear warm-up, hold, then exponential decay from peak_lr to final_lr.
struct LrSchedule {
  long warmup_steps = 0;
  long hold_steps = 0;
  long decay_steps = 0;
  double peak_lr = 1e-3;
  double final_lr = 1e-3;

  void validate() const {
    require(warmup_steps >= 0 && hold_steps >= 0 && decay_steps >= 0,
            ErrorCode::kConfiguration, "schedule step counts must be >= 0");
    require(peak_lr > 0.0 && final_lr > 0.0 && final_lr <= peak_lr,
            ErrorCode::kConfiguration, "schedule needs 0 < final_lr <= peak_lr");
  }

  static LrSchedule constant(double lr) { return {0, 0, 0, lr, lr}; }
};

inline double lr_at(long step, const LrSchedule& s) {
  if (step < s.warmup_steps)
    return s.peak_lr * static_cast<double>(step + 1) / static_cast<double>(s.warmup_steps);
  const long decay_from = s.warmup_steps + s.hold_steps;
  if (step < decay_from) return s.peak_lr;
  const double progress =
      s.decay_steps == 0 ? 1.0
                         : std::min(1.0, static_cast<double>(step - decay_from) /
                                             static_cast<double>(s.decay_steps));
  if (progress >= 1.0) return s.final_lr;
  return s.peak_lr * std::pow(s.final_lr / s.peak_lr, progress);
}

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments and step count per parameter, aligned with the
/// store's iteration order.
struct AdamState {
  struct Slot {
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;
    std::int64_t step = 0;
  };
  std::vector<Slot> slots;

  static AdamState for_params(const ParameterStore& params) {
    AdamState s;
    for (const auto& e : params.entries()) {
      const auto& v = e.param.value;
      s.slots.push_back({Eigen::MatrixXd::Zero(v.rows(), v.cols()),
                         Eigen::MatrixXd::Zero(v.rows(), v.cols()), 0});
    }
    return s;
  }
};

/// Bias-corrected Adam over every non-frozen parameter. Frozen parameters and
/// their moments are left untouched.
inline void adam_step(ParameterStore& params, double lr, AdamState& state,
                      const AdamHyper& hyper = {}) {
  require(state.slots.size() == params.size(), ErrorCode::kState,
          "optimizer state does not match the parameter store");
  auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& p = entries[i].param;
    auto& s = state.slots[i];
    require(s.m.rows() == p.value.rows() && s.m.cols() == p.value.cols() &&
                s.v.rows() == p.value.rows() && s.v.cols() == p.value.cols(),
            ErrorCode::kState, "optimizer moment shape mismatch for " + entries[i].name);
    if (p.frozen) continue;
    ++s.step;
    s.m = hyper.beta1 * s.m + (1.0 - hyper.beta1) * p.grad;
    s.v = hyper.beta2 * s.v + (1.0 - hyper.beta2) * p.grad.cwiseProduct(p.grad);
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(s.step));
    p.value.array() -=
        lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + hyper.epsilon);
  }
}

/// Rescales all trainable gradients so their global L2 norm is at most
/// max_norm. Returns the norm before clipping.
inline double clip_grad_norm(ParameterStore& params, double max_norm) {
  const double norm = params.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& e : params.entries())
      if (!e.param.frozen) e.param.grad *= s;
  }
  return norm;
}

struct ElasticPenaltyConfig {
  double lambda = 0.01;
  std::set<Component> component_scope{Component::kDecoder};
  ParameterSnapshot snapshot;
};

/// lambda * sum (pre - cur)^2 over the scoped parameters. When
/// accumulate_grad is set, 2 lambda (cur - pre) is added to each scoped
/// gradient.
inline double elastic_penalty(ParameterStore& params, const ElasticPenaltyConfig& cfg,
                              bool accumulate_grad = true) {
  require(cfg.lambda >= 0.0, ErrorCode::kConfiguration, "elastic lambda must be >= 0");
  std::size_t scoped = 0;
  for (const auto& e : params.entries())
    if (cfg.component_scope.count(e.param.component)) ++scoped;
  require(scoped == cfg.snapshot.items().size(), ErrorCode::kConfiguration,
          "snapshot does not cover the scoped parameters");

  double j = 0.0;
  for (const auto& [name, pre] : cfg.snapshot.items()) {
    require(params.contains(name), ErrorCode::kConfiguration,
            "snapshot parameter '" + name + "' missing from the model");
    auto& p = params.at(name);
    require(cfg.component_scope.count(p.component) > 0, ErrorCode::kConfiguration,
            "snapshot parameter '" + name + "' outside the penalty scope");
    require(p.value.rows() == pre.rows() && p.value.cols() == pre.cols(),
            ErrorCode::kConfiguration, "snapshot shape mismatch for '" + name + "'");
    j += (pre - p.value).squaredNorm();
    if (accumulate_grad) p.grad += (2.0 * cfg.lambda) * (p.value - pre);
  }
  return cfg.lambda * j;
}

}  // namespace rnntcl

#endif  // RNNTCL_OPTIM_HPP
