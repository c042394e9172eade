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

#ifndef RNNTCL_LSTM_HPP
#define RNNTCL_LSTM_HPP

#include <string>

#include <Eigen/Dense>

#include "rnntcl/error.hpp"

namespace rnntcl {

// Gate rows are stacked [input; forget; cell candidate; output], each H rows.

struct LstmWeights {
  const Eigen::MatrixXd& input;      // 4H x In
  const Eigen::MatrixXd& recurrent;  // 4H x H
  const Eigen::MatrixXd& bias;       // 4H x 1
};

struct LstmWeightGrads {
  Eigen::MatrixXd& input;
  Eigen::MatrixXd& recurrent;
  Eigen::MatrixXd& bias;
};

/// Activations kept from a forward pass over a sequence (one column per step).
struct LstmSequenceCache {
  Eigen::MatrixXd x;       // In x T
  Eigen::MatrixXd gates;   // 4H x T, post-activation
  Eigen::MatrixXd c;       // H x T
  Eigen::MatrixXd tanh_c;  // H x T
  Eigen::MatrixXd h;       // H x T
  Eigen::VectorXd h0;
  Eigen::VectorXd c0;
};

struct LstmInputGrads {
  Eigen::MatrixXd x;  // In x T
  Eigen::VectorXd h0;
  Eigen::VectorXd c0;
};

namespace detail {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline void check_lstm_shapes(const LstmWeights& w, Eigen::Index in_dim,
                              Eigen::Index hidden) {
  const bool ok = w.input.rows() == 4 * hidden && w.input.cols() == in_dim &&
                  w.recurrent.rows() == 4 * hidden &&
                  w.recurrent.cols() == hidden && w.bias.rows() == 4 * hidden &&
                  w.bias.cols() == 1;
  require(ok, ErrorCode::kShape,
          "LSTM weight shapes do not match input " + std::to_string(in_dim) +
              " / hidden " + std::to_string(hidden));
}

}  // namespace detail

inline Eigen::Index lstm_hidden_size(const LstmWeights& w) {
  return w.recurrent.cols();
}

/// Runs the recurrence over the columns of x starting from (h0, c0).
inline LstmSequenceCache lstm_forward(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& h0,
                                      const Eigen::VectorXd& c0,
                                      const LstmWeights& w) {
  const Eigen::Index H = lstm_hidden_size(w);
  detail::check_lstm_shapes(w, x.rows(), H);
  require(h0.size() == H && c0.size() == H, ErrorCode::kShape,
          "LSTM initial state size mismatch");
  const Eigen::Index T = x.cols();

  LstmSequenceCache cache;
  cache.x = x;
  cache.h0 = h0;
  cache.c0 = c0;
  cache.gates = w.input * x;
  cache.gates.colwise() += w.bias.col(0);
  cache.c.resize(H, T);
  cache.tanh_c.resize(H, T);
  cache.h.resize(H, T);

  Eigen::VectorXd h = h0;
  Eigen::VectorXd c = c0;
  for (Eigen::Index t = 0; t < T; ++t) {
    auto z = cache.gates.col(t);
    z.noalias() += w.recurrent * h;
    for (Eigen::Index k = 0; k < H; ++k) {
      z(k) = detail::sigmoid(z(k));
      z(H + k) = detail::sigmoid(z(H + k));
      z(2 * H + k) = std::tanh(z(2 * H + k));
      z(3 * H + k) = detail::sigmoid(z(3 * H + k));
    }
    for (Eigen::Index k = 0; k < H; ++k) {
      c(k) = z(H + k) * c(k) + z(k) * z(2 * H + k);
      const double tc = std::tanh(c(k));
      cache.tanh_c(k, t) = tc;
      h(k) = z(3 * H + k) * tc;
    }
    cache.c.col(t) = c;
    cache.h.col(t) = h;
  }
  return cache;
}

/// Backpropagates dh (H x T, gradient w.r.t. every output h_t) plus optional
/// gradients on the final state. Weight gradients are accumulated into g.
inline LstmInputGrads lstm_backward(const LstmSequenceCache& cache,
                                    const Eigen::MatrixXd& dh,
                                    const LstmWeights& w, LstmWeightGrads g,
                                    const Eigen::VectorXd* dh_last = nullptr,
                                    const Eigen::VectorXd* dc_last = nullptr) {
  const Eigen::Index H = lstm_hidden_size(w);
  const Eigen::Index T = cache.x.cols();
  Eigen::MatrixXd dz(4 * H, T);
  Eigen::VectorXd dh_next =
      dh_last ? Eigen::VectorXd(*dh_last) : Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next =
      dc_last ? Eigen::VectorXd(*dc_last) : Eigen::VectorXd::Zero(H);

  for (Eigen::Index t = T - 1; t >= 0; --t) {
    auto z = cache.gates.col(t);
    auto d = dz.col(t);
    for (Eigen::Index k = 0; k < H; ++k) {
      const double i = z(k), f = z(H + k), gg = z(2 * H + k), o = z(3 * H + k);
      const double tc = cache.tanh_c(k, t);
      const double c_prev = t > 0 ? cache.c(k, t - 1) : cache.c0(k);
      const double dht = dh(k, t) + dh_next(k);
      const double dc = dc_next(k) + dht * o * (1.0 - tc * tc);
      d(k) = dc * gg * i * (1.0 - i);
      d(H + k) = dc * c_prev * f * (1.0 - f);
      d(2 * H + k) = dc * i * (1.0 - gg * gg);
      d(3 * H + k) = dht * tc * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    dh_next.noalias() = w.recurrent.transpose() * d;
  }

  Eigen::MatrixXd h_prev(H, T);
  if (T > 0) {
    h_prev.col(0) = cache.h0;
    if (T > 1) h_prev.rightCols(T - 1) = cache.h.leftCols(T - 1);
  }
  g.input.noalias() += dz * cache.x.transpose();
  g.recurrent.noalias() += dz * h_prev.transpose();
  g.bias.col(0) += dz.rowwise().sum();

  LstmInputGrads out;
  out.x.noalias() = w.input.transpose() * dz;
  out.h0 = dh_next;
  out.c0 = dc_next;
  return out;
}

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// One step of the recurrence.
inline LstmState lstm_cell(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                           const Eigen::VectorXd& c_prev, const LstmWeights& w) {
  auto cache = lstm_forward(x, h_prev, c_prev, w);
  return {cache.h.col(0), cache.c.col(0)};
}

}  // namespace rnntcl

#endif  // RNNTCL_LSTM_HPP
