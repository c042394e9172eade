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

#ifndef RNNTCL_CHECKPOINT_HPP
#define RNNTCL_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "rnntcl/error.hpp"
#include "rnntcl/io.hpp"
#include "rnntcl/training.hpp"

namespace rnntcl {

inline constexpr std::string_view kCheckpointMagic = "RNNTCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StageMeta {
  std::string stage_name;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void put_matrix(ByteWriter& w, const Eigen::MatrixXd& m) {
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
  w.put_raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

inline Eigen::MatrixXd get_matrix(ByteReader& r) {
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  require(rows < (1u << 24) && cols < (1u << 24) && rows * cols <= r.remaining() / sizeof(double),
          ErrorCode::kCorruptFile, "implausible matrix shape in checkpoint");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  r.get_raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
  return m;
}

}  // namespace detail

/// Layout: magic, u32 version, u64 payload size, u64 FNV-1a of payload,
/// payload. All integers and doubles little-endian.
inline std::string encode_checkpoint(const TrainingState& st, const StageMeta& meta) {
  ByteWriter w;
  const auto& m = st.model;
  for (int v : {m.enc_layers, m.enc_units, m.dec_layers, m.dec_units, m.proj_dim,
                m.joint_units, m.vocab_size, m.input_dim})
    w.put<std::int32_t>(v);
  w.put<std::int32_t>(st.stage_index);
  w.put<std::int32_t>(st.step);
  w.put_string(meta.stage_name);
  w.put_string(rng_state(st.rng));

  const auto& entries = st.params.entries();
  require(st.adam.slots.size() == entries.size(), ErrorCode::kState,
          "optimizer state does not match the parameter store");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    w.put_string(e.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.param.component));
    w.put<std::uint8_t>(e.param.frozen ? 1 : 0);
    detail::put_matrix(w, e.param.value);
    w.put<std::int64_t>(st.adam.slots[i].step);
    detail::put_matrix(w, st.adam.slots[i].m);
    detail::put_matrix(w, st.adam.slots[i].v);
  }
  w.put<std::uint8_t>(st.snapshot ? 1 : 0);
  if (st.snapshot) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(st.snapshot->items().size()));
    for (const auto& [name, value] : st.snapshot->items()) {
      w.put_string(name);
      detail::put_matrix(w, value);
    }
  }

  ByteWriter file;
  file.put_raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  file.put<std::uint32_t>(kCheckpointVersion);
  file.put<std::uint64_t>(w.bytes().size());
  file.put<std::uint64_t>(detail::fnv1a(w.bytes()));
  file.put_raw(w.bytes().data(), w.bytes().size());
  return file.bytes();
}

struct LoadedCheckpoint {
  TrainingState state;
  StageMeta meta;
};

/// Parses into fresh objects; nothing is returned unless the whole file is
/// valid.
inline LoadedCheckpoint decode_checkpoint(std::string_view bytes) {
  ByteReader head(bytes);
  char magic[8];
  head.get_raw(magic, sizeof magic);
  require(std::string_view(magic, 8) == kCheckpointMagic, ErrorCode::kCorruptFile,
          "not a checkpoint file");
  const auto version = head.get<std::uint32_t>();
  require(version == kCheckpointVersion, ErrorCode::kVersion,
          "unsupported checkpoint version " + std::to_string(version));
  const auto size = head.get<std::uint64_t>();
  const auto sum = head.get<std::uint64_t>();
  require(head.remaining() == size, ErrorCode::kCorruptFile, "checkpoint size mismatch");
  const auto payload = bytes.substr(head.position());
  require(detail::fnv1a(payload) == sum, ErrorCode::kCorruptFile, "checkpoint checksum mismatch");

  ByteReader r(payload);
  LoadedCheckpoint out;
  auto& st = out.state;
  auto& m = st.model;
  for (int* v : {&m.enc_layers, &m.enc_units, &m.dec_layers, &m.dec_units, &m.proj_dim,
                 &m.joint_units, &m.vocab_size, &m.input_dim})
    *v = r.get<std::int32_t>();
  m.validate();
  st.stage_index = r.get<std::int32_t>();
  st.step = r.get<std::int32_t>();
  out.meta.stage_name = r.get_string();
  restore_rng_state(st.rng, r.get_string());

  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto name = r.get_string();
    const auto tag = r.get<std::uint8_t>();
    require(tag <= static_cast<std::uint8_t>(Component::kEmbedding), ErrorCode::kCorruptFile,
            "bad component tag");
    const bool frozen = r.get<std::uint8_t>() != 0;
    auto value = detail::get_matrix(r);
    auto& p = st.params.add(name, static_cast<Component>(tag), value.rows(), value.cols());
    p.value = std::move(value);
    p.frozen = frozen;
    AdamState::Slot slot;
    slot.step = r.get<std::int64_t>();
    slot.m = detail::get_matrix(r);
    slot.v = detail::get_matrix(r);
    require(slot.m.rows() == p.value.rows() && slot.m.cols() == p.value.cols() &&
                slot.v.rows() == p.value.rows() && slot.v.cols() == p.value.cols(),
            ErrorCode::kCorruptFile, "optimizer moment shape mismatch");
    st.adam.slots.push_back(std::move(slot));
  }
  if (r.get<std::uint8_t>() != 0) {
    const auto k = r.get<std::uint32_t>();
    std::vector<ParameterSnapshot::Item> items;
    for (std::uint32_t i = 0; i < k; ++i) {
      auto name = r.get_string();
      items.emplace_back(std::move(name), detail::get_matrix(r));
    }
    st.snapshot = ParameterSnapshot(std::move(items));
  }
  require(r.remaining() == 0, ErrorCode::kCorruptFile, "trailing bytes in checkpoint");
  return out;
}

inline void checkpoint_save(const TrainingState& st, const StageMeta& meta,
                            const std::filesystem::path& path) {
  atomic_write(path, encode_checkpoint(st, meta));
}

inline LoadedCheckpoint checkpoint_load(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace rnntcl

#endif  // RNNTCL_CHECKPOINT_HPP
