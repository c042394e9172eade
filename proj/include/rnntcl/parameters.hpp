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

#ifndef RNNTCL_PARAMETERS_HPP
#define RNNTCL_PARAMETERS_HPP

#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rnntcl/error.hpp"

namespace rnntcl {

enum class Component { kEncoder, kDecoder, kJoint, kEmbedding };

inline const char* to_string(Component c) {
  switch (c) {
    case Component::kEncoder: return "encoder";
    case Component::kDecoder: return "decoder";
    case Component::kJoint: return "joint";
    case Component::kEmbedding: return "embedding";
  }
  return "?";
}

inline Component component_from_string(const std::string& s) {
  if (s == "encoder") return Component::kEncoder;
  if (s == "decoder") return Component::kDecoder;
  if (s == "joint") return Component::kJoint;
  if (s == "embedding") return Component::kEmbedding;
  fail(ErrorCode::kInvalidArgument, "unknown component tag '" + s + "'");
}

struct Parameter {
  Component component = Component::kEncoder;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool frozen = false;
};

/// Named, component-tagged arrays with paired gradients. Iteration follows
/// insertion order so that initialization and serialization are reproducible.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Parameter param;
  };

  Parameter& add(const std::string& name, Component component, Eigen::Index rows,
                 Eigen::Index cols) {
    require(!index_.count(name), ErrorCode::kInvalidArgument,
            "duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.push_back(
        {name, Parameter{component, Eigen::MatrixXd::Zero(rows, cols),
                         Eigen::MatrixXd::Zero(rows, cols), false}});
    return entries_.back().param;
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  Parameter& at(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorCode::kInvalidArgument,
            "no parameter named '" + name + "'");
    return entries_[it->second].param;
  }
  const Parameter& at(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->at(name);
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.param.value.size());
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.param.grad.setZero();
  }

  double grad_norm(bool include_frozen = false) const {
    double sq = 0.0;
    for (const auto& e : entries_) {
      if (e.param.frozen && !include_frozen) continue;
      sq += e.param.grad.squaredNorm();
    }
    return std::sqrt(sq);
  }

  /// Exact equality of names, tags, shapes and values.
  bool identical_to(const ParameterStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& a = entries_[i];
      const auto& b = other.entries_[i];
      if (a.name != b.name || a.param.component != b.param.component) return false;
      if (a.param.value.rows() != b.param.value.rows() ||
          a.param.value.cols() != b.param.value.cols())
        return false;
      if (!(a.param.value.array() == b.param.value.array()).all()) return false;
    }
    return true;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Marks every encoder-tagged parameter as excluded from updates (or clears
/// the mark).
inline void set_freeze(ParameterStore& params, bool freeze_encoder) {
  for (auto& e : params.entries()) {
    if (e.param.component == Component::kEncoder) e.param.frozen = freeze_encoder;
  }
}

/// Immutable copy of selected parameter values.
class ParameterSnapshot {
 public:
  using Item = std::pair<std::string, Eigen::MatrixXd>;

  ParameterSnapshot() : items_(std::make_shared<const std::vector<Item>>()) {}

  static ParameterSnapshot take(const ParameterStore& params,
                                const std::set<Component>& scope) {
    std::vector<Item> items;
    for (const auto& e : params.entries()) {
      if (scope.count(e.param.component)) items.emplace_back(e.name, e.param.value);
    }
    return ParameterSnapshot(std::move(items));
  }

  explicit ParameterSnapshot(std::vector<Item> items)
      : items_(std::make_shared<const std::vector<Item>>(std::move(items))) {}

  const std::vector<Item>& items() const { return *items_; }
  bool empty() const { return items_->empty(); }

 private:
  std::shared_ptr<const std::vector<Item>> items_;
};

}  // namespace rnntcl

#endif  // RNNTCL_PARAMETERS_HPP
