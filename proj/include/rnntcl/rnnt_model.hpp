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

#ifndef RNNTCL_RNNT_MODEL_HPP
#define RNNTCL_RNNT_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnntcl/error.hpp"
#include "rnntcl/lstm.hpp"
#include "rnntcl/parameters.hpp"
#include "rnntcl/random.hpp"
#include "rnntcl/transducer_loss.hpp"

namespace rnntcl {

struct ModelConfig {
  int enc_layers = 2;
  int enc_units = 64;
  int dec_layers = 1;
  int dec_units = 64;
  int proj_dim = 48;
  int joint_units = 64;
  int vocab_size = 31;  // includes blank
  int input_dim = 192;

  void validate() const {
    require(enc_layers >= 1 && enc_units >= 1 && dec_layers >= 1 &&
                dec_units >= 1 && proj_dim >= 1 && joint_units >= 1 &&
                input_dim >= 1,
            ErrorCode::kInvalidArgument, "model dimensions must all be >= 1");
    require(vocab_size >= 2, ErrorCode::kInvalidArgument,
            "vocab_size must include blank and at least one label");
  }

  bool operator==(const ModelConfig&) const = default;
};

namespace names {
inline std::string lstm(const char* part, int layer) {
  return std::string(part) + ".lstm" + std::to_string(layer);
}
}  // namespace names

inline constexpr double kInitRange = 0.05;

/// Builds the full parameter set: uniform(-0.05, 0.05) weights, zero biases
/// except the LSTM forget gates, which start at 1.
inline ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParameterStore p;
  auto add_lstm = [&](const char* part, Component tag, int layer, int in, int hid) {
    const auto prefix = names::lstm(part, layer);
    p.add(prefix + ".weight_ih", tag, 4 * hid, in);
    p.add(prefix + ".weight_hh", tag, 4 * hid, hid);
    p.add(prefix + ".bias", tag, 4 * hid, 1);
  };
  for (int l = 0; l < cfg.enc_layers; ++l)
    add_lstm("encoder", Component::kEncoder, l, l == 0 ? cfg.input_dim : cfg.enc_units,
             cfg.enc_units);
  p.add("encoder.proj.weight", Component::kEncoder, cfg.proj_dim, cfg.enc_units);
  p.add("encoder.proj.bias", Component::kEncoder, cfg.proj_dim, 1);
  p.add("embedding.weight", Component::kEmbedding, cfg.vocab_size, cfg.dec_units);
  for (int l = 0; l < cfg.dec_layers; ++l)
    add_lstm("decoder", Component::kDecoder, l, cfg.dec_units, cfg.dec_units);
  p.add("decoder.proj.weight", Component::kDecoder, cfg.proj_dim, cfg.dec_units);
  p.add("decoder.proj.bias", Component::kDecoder, cfg.proj_dim, 1);
  p.add("joint.hidden.weight", Component::kJoint, cfg.joint_units, cfg.proj_dim);
  p.add("joint.hidden.bias", Component::kJoint, cfg.joint_units, 1);
  p.add("joint.output.weight", Component::kJoint, cfg.vocab_size, cfg.joint_units);
  p.add("joint.output.bias", Component::kJoint, cfg.vocab_size, 1);

  Rng rng = make_rng(seed);
  for (auto& e : p.entries()) {
    const bool is_bias = e.name.ends_with(".bias");
    if (!is_bias) {
      for (Eigen::Index j = 0; j < e.param.value.cols(); ++j)
        for (Eigen::Index i = 0; i < e.param.value.rows(); ++i)
          e.param.value(i, j) = uniform(rng, -kInitRange, kInitRange);
    } else if (e.name.find(".lstm") != std::string::npos) {
      const Eigen::Index h = e.param.value.rows() / 4;
      e.param.value.block(h, 0, h, 1).setOnes();
    }
  }
  return p;
}

inline LstmWeights lstm_weights(const ParameterStore& p, const std::string& prefix) {
  return {p.at(prefix + ".weight_ih").value, p.at(prefix + ".weight_hh").value,
          p.at(prefix + ".bias").value};
}

inline LstmWeightGrads lstm_grads(ParameterStore& p, const std::string& prefix) {
  return {p.at(prefix + ".weight_ih").grad, p.at(prefix + ".weight_hh").grad,
          p.at(prefix + ".bias").grad};
}

// ---------------------------------------------------------------- encoder

struct EncoderPass {
  std::vector<LstmSequenceCache> layers;
  Eigen::MatrixXd output;  // proj_dim x T, one column per frame
};

/// x holds one feature frame per column (input_dim x T).
inline EncoderPass encode_with_cache(const ModelConfig& cfg, const ParameterStore& p,
                                     const Eigen::MatrixXd& x) {
  require(x.rows() == cfg.input_dim, ErrorCode::kShape,
          "feature dimension " + std::to_string(x.rows()) + " != input_dim " +
              std::to_string(cfg.input_dim));
  EncoderPass pass;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.enc_units);
  const Eigen::MatrixXd* in = &x;
  for (int l = 0; l < cfg.enc_layers; ++l) {
    pass.layers.push_back(
        lstm_forward(*in, zero, zero, lstm_weights(p, names::lstm("encoder", l))));
    in = &pass.layers.back().h;
  }
  pass.output = p.at("encoder.proj.weight").value * (*in);
  pass.output.colwise() += p.at("encoder.proj.bias").value.col(0);
  return pass;
}

inline Eigen::MatrixXd encode(const ModelConfig& cfg, const ParameterStore& p,
                              const Eigen::MatrixXd& x) {
  return encode_with_cache(cfg, p, x).output;
}

/// Returns d loss / d x.
inline Eigen::MatrixXd encode_backward(const ModelConfig& cfg, ParameterStore& p,
                                       const EncoderPass& pass,
                                       const Eigen::MatrixXd& d_output) {
  const auto& top = pass.layers.back().h;
  p.at("encoder.proj.weight").grad.noalias() += d_output * top.transpose();
  p.at("encoder.proj.bias").grad.col(0) += d_output.rowwise().sum();
  Eigen::MatrixXd d = p.at("encoder.proj.weight").value.transpose() * d_output;
  for (int l = cfg.enc_layers - 1; l >= 0; --l) {
    const auto prefix = names::lstm("encoder", l);
    d = lstm_backward(pass.layers[l], d, lstm_weights(p, prefix), lstm_grads(p, prefix)).x;
  }
  return d;
}

// ---------------------------------------------------------------- decoder

struct DecoderPass {
  std::vector<int> inputs;  // blank followed by the labels
  std::vector<LstmSequenceCache> layers;
  Eigen::MatrixXd output;  // proj_dim x (U+1)
};

inline DecoderPass predict_with_cache(const ModelConfig& cfg, const ParameterStore& p,
                                      std::span<const int> labels) {
  DecoderPass pass;
  pass.inputs.push_back(kBlank);
  for (int y : labels) {
    require(y != kBlank, ErrorCode::kInvalidArgument, "blank inside label sequence");
    require(y > 0 && y < cfg.vocab_size, ErrorCode::kInvalidArgument,
            "label " + std::to_string(y) + " outside vocabulary");
    pass.inputs.push_back(y);
  }
  const auto& table = p.at("embedding.weight").value;
  Eigen::MatrixXd x(cfg.dec_units, static_cast<Eigen::Index>(pass.inputs.size()));
  for (std::size_t u = 0; u < pass.inputs.size(); ++u)
    x.col(static_cast<Eigen::Index>(u)) = table.row(pass.inputs[u]).transpose();

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.dec_units);
  const Eigen::MatrixXd* in = &x;
  for (int l = 0; l < cfg.dec_layers; ++l) {
    pass.layers.push_back(
        lstm_forward(*in, zero, zero, lstm_weights(p, names::lstm("decoder", l))));
    in = &pass.layers.back().h;
  }
  pass.output = p.at("decoder.proj.weight").value * (*in);
  pass.output.colwise() += p.at("decoder.proj.bias").value.col(0);
  return pass;
}

inline Eigen::MatrixXd predict(const ModelConfig& cfg, const ParameterStore& p,
                               std::span<const int> labels) {
  return predict_with_cache(cfg, p, labels).output;
}

inline void predict_backward(const ModelConfig& cfg, ParameterStore& p,
                             const DecoderPass& pass, const Eigen::MatrixXd& d_output) {
  const auto& top = pass.layers.back().h;
  p.at("decoder.proj.weight").grad.noalias() += d_output * top.transpose();
  p.at("decoder.proj.bias").grad.col(0) += d_output.rowwise().sum();
  Eigen::MatrixXd d = p.at("decoder.proj.weight").value.transpose() * d_output;
  for (int l = cfg.dec_layers - 1; l >= 0; --l) {
    const auto prefix = names::lstm("decoder", l);
    d = lstm_backward(pass.layers[l], d, lstm_weights(p, prefix), lstm_grads(p, prefix)).x;
  }
  auto& table_grad = p.at("embedding.weight").grad;
  for (std::size_t u = 0; u < pass.inputs.size(); ++u)
    table_grad.row(pass.inputs[u]) += d.col(static_cast<Eigen::Index>(u)).transpose();
}

/// Incremental decoder used by greedy search.
struct DecoderState {
  std::vector<LstmState> layers;
  Eigen::VectorXd output;  // proj_dim
};

inline DecoderState decoder_step(const ModelConfig& cfg, const ParameterStore& p,
                                 const DecoderState* prev, int token) {
  DecoderState next;
  Eigen::VectorXd x = p.at("embedding.weight").value.row(token).transpose();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.dec_units);
  for (int l = 0; l < cfg.dec_layers; ++l) {
    const auto& h = prev ? prev->layers[l].h : zero;
    const auto& c = prev ? prev->layers[l].c : zero;
    next.layers.push_back(lstm_cell(x, h, c, lstm_weights(p, names::lstm("decoder", l))));
    x = next.layers.back().h;
  }
  next.output = p.at("decoder.proj.weight").value * x + p.at("decoder.proj.bias").value.col(0);
  return next;
}

inline DecoderState decoder_start(const ModelConfig& cfg, const ParameterStore& p) {
  return decoder_step(cfg, p, nullptr, kBlank);
}

// ------------------------------------------------------------------ joint

struct JointPass {
  Eigen::Index frames = 0;
  Eigen::Index positions = 0;
  Eigen::MatrixXd hidden;  // joint_units x (T*(U+1)), post-tanh; column t*(U+1)+u
  LatticeGrid logits;
};

/// logits[t,u,:] = W_out tanh(W_j (H[:,t] + G[:,u]) + b_j) + b_out
inline JointPass joint_with_cache(const ParameterStore& p, const Eigen::MatrixXd& enc,
                                  const Eigen::MatrixXd& dec) {
  require(enc.rows() == dec.rows(), ErrorCode::kShape,
          "encoder and decoder projections differ in size");
  const auto& wj = p.at("joint.hidden.weight").value;
  const auto& bj = p.at("joint.hidden.bias").value;
  const auto& wo = p.at("joint.output.weight").value;
  const auto& bo = p.at("joint.output.bias").value;
  require(wj.cols() == enc.rows(), ErrorCode::kShape, "joint input size mismatch");

  JointPass pass;
  pass.frames = enc.cols();
  pass.positions = dec.cols();
  const Eigen::MatrixXd a = wj * enc;
  Eigen::MatrixXd b = wj * dec;
  b.colwise() += bj.col(0);
  pass.hidden.resize(wj.rows(), pass.frames * pass.positions);
  for (Eigen::Index t = 0; t < pass.frames; ++t)
    for (Eigen::Index u = 0; u < pass.positions; ++u)
      pass.hidden.col(t * pass.positions + u) = (a.col(t) + b.col(u)).array().tanh();

  pass.logits = LatticeGrid(static_cast<int>(pass.frames), static_cast<int>(pass.positions),
                            static_cast<int>(wo.rows()));
  Eigen::Map<Eigen::MatrixXd> out(pass.logits.values.data(), wo.rows(), pass.hidden.cols());
  out.noalias() = wo * pass.hidden;
  out.colwise() += bo.col(0);
  return pass;
}

inline LatticeGrid joint(const ParameterStore& p, const Eigen::MatrixXd& enc,
                         const Eigen::MatrixXd& dec) {
  return joint_with_cache(p, enc, dec).logits;
}

/// Logits at a single (frame, decoder state) pair, as used by greedy search.
inline Eigen::VectorXd joint_single(const ParameterStore& p, const Eigen::VectorXd& enc_t,
                                    const Eigen::VectorXd& dec_u) {
  const Eigen::VectorXd z =
      (p.at("joint.hidden.weight").value * (enc_t + dec_u) + p.at("joint.hidden.bias").value.col(0))
          .array()
          .tanh();
  return p.at("joint.output.weight").value * z + p.at("joint.output.bias").value.col(0);
}

struct JointInputGrads {
  Eigen::MatrixXd enc;  // proj x T
  Eigen::MatrixXd dec;  // proj x (U+1)
};

inline JointInputGrads joint_backward(ParameterStore& p, const JointPass& pass,
                                      const Eigen::MatrixXd& enc, const Eigen::MatrixXd& dec,
                                      const LatticeGrid& d_logits) {
  const auto& wj = p.at("joint.hidden.weight").value;
  const auto& wo = p.at("joint.output.weight").value;
  Eigen::Map<const Eigen::MatrixXd> dl(d_logits.values.data(), wo.rows(), pass.hidden.cols());

  p.at("joint.output.weight").grad.noalias() += dl * pass.hidden.transpose();
  p.at("joint.output.bias").grad.col(0) += dl.rowwise().sum();
  Eigen::MatrixXd dpre = wo.transpose() * dl;
  dpre.array() *= 1.0 - pass.hidden.array().square();
  p.at("joint.hidden.bias").grad.col(0) += dpre.rowwise().sum();

  Eigen::MatrixXd da = Eigen::MatrixXd::Zero(wj.rows(), pass.frames);
  Eigen::MatrixXd db = Eigen::MatrixXd::Zero(wj.rows(), pass.positions);
  for (Eigen::Index t = 0; t < pass.frames; ++t)
    for (Eigen::Index u = 0; u < pass.positions; ++u) {
      const auto col = dpre.col(t * pass.positions + u);
      da.col(t) += col;
      db.col(u) += col;
    }
  p.at("joint.hidden.weight").grad.noalias() += da * enc.transpose() + db * dec.transpose();
  return {wj.transpose() * da, wj.transpose() * db};
}

// ------------------------------------------------------- full utterance

struct UtteranceLoss {
  double loss = 0.0;
  int frames = 0;
};

/// Forward pass, transducer loss and (optionally) gradient accumulation for a
/// single utterance. Gradients are scaled by `scale` before accumulation.
/// With encoder_grads = false the encoder backward pass is skipped entirely.
inline UtteranceLoss utterance_loss(const ModelConfig& cfg, ParameterStore& p,
                                    const Eigen::MatrixXd& x, std::span<const int> labels,
                                    bool accumulate, double scale = 1.0,
                                    bool encoder_grads = true) {
  const auto enc = encode_with_cache(cfg, p, x);
  const auto dec = predict_with_cache(cfg, p, labels);
  const auto jp = joint_with_cache(p, enc.output, dec.output);

  AlignmentLattice lat;
  lat.log_probs = log_softmax(jp.logits);
  lat.target.assign(labels.begin(), labels.end());
  auto result = forward_backward(lat);
  UtteranceLoss out{result.loss, static_cast<int>(x.cols())};
  if (!accumulate) return out;

  LatticeGrid d_logits = log_softmax_backward(lat.log_probs, result.grad);
  for (double& v : d_logits.values) v *= scale;
  const auto dj = joint_backward(p, jp, enc.output, dec.output, d_logits);
  predict_backward(cfg, p, dec, dj.dec);
  if (encoder_grads) encode_backward(cfg, p, enc, dj.enc);
  return out;
}

}  // namespace rnntcl

#endif  // RNNTCL_RNNT_MODEL_HPP
