// Copyright 2026 The sn2 Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SN2_SYNC_HPP
#define SN2_SYNC_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sn2/error.hpp"
#include "sn2/graph.hpp"

namespace sn2 {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

// Layered view of a pmDAG. Layer 0 holds the roots; each later layer holds
// the nodes released in that peeling round plus every node still needed
// downstream. Within a layer, nodes are sorted by graph index.
class Synchronization {
 public:
  Synchronization(PmDag g, std::vector<std::vector<std::size_t>> layers) : graph_(std::move(g)), layers_(std::move(layers)) {
    first_.assign(graph_.size(), npos);
    pos_.assign(layers_.size(), std::vector<std::size_t>(graph_.size(), npos));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      for (std::size_t k = 0; k < layers_[l].size(); ++k) {
        auto n = layers_[l][k];
        pos_[l][n] = k;
        if (first_[n] == npos) first_[n] = l;
      }
    }
  }

  const PmDag& graph() const { return graph_; }
  std::size_t depth() const { return layers_.size(); }
  const std::vector<std::vector<std::size_t>>& layers() const { return layers_; }
  const std::vector<std::size_t>& layer(std::size_t l) const { return layers_.at(l); }

  std::size_t first_appearance(std::size_t node) const { return first_.at(node); }

  // Column of `node` within layer l, or npos.
  std::size_t position(std::size_t l, std::size_t node) const { return pos_.at(l).at(node); }
  bool contains(std::size_t l, std::size_t node) const { return position(l, node) != npos; }

  // A node is new in layer l when this is its first appearance; otherwise it
  // is carried from layer l-1.
  bool is_new(std::size_t l, std::size_t node) const { return first_.at(node) == l; }

  std::vector<std::size_t> layer_parents(std::size_t l, std::size_t node) const {
    if (l == 0 || !contains(l, node)) throw Error(ErrorCode::InvalidArgument, "node not in layer " + std::to_string(l));
    if (is_new(l, node)) {
      auto ps = graph_.parents(node);
      return {ps.begin(), ps.end()};
    }
    return {node};
  }

  std::vector<std::size_t> new_nodes(std::size_t l) const {
    std::vector<std::size_t> out;
    for (auto n : layers_.at(l))
      if (is_new(l, n)) out.push_back(n);
    return out;
  }

 private:
  PmDag graph_;
  std::vector<std::vector<std::size_t>> layers_;
  std::vector<std::size_t> first_;
  std::vector<std::vector<std::size_t>> pos_;
};

inline std::size_t first_appearance(const Synchronization& s, std::string_view node) {
  return s.first_appearance(s.graph().index_of(node));
}

// Greedy peeling releases every root of the remainder at once. A custom plan
// lists, for every round after the root layer, which remainder roots to
// release.
struct SyncPlan {
  bool greedy = true;
  std::vector<std::vector<std::string>> rounds;

  static SyncPlan greedy_max() { return {}; }
  static SyncPlan custom(std::vector<std::vector<std::string>> r) { return {false, std::move(r)}; }
};

inline Synchronization synchronize(const PmDag& g, const SyncPlan& plan = SyncPlan::greedy_max()) {
  if (!g.is_strict()) throw Error(ErrorCode::NotPmDag, "synchronization requires every latent to be a root");
  const std::size_t n = g.size();
  std::vector<char> remaining(n, 1), processed(n, 0);

  auto remainder_roots = [&] {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (!remaining[i]) continue;
      bool ready = true;
      for (auto p : g.parents(i))
        if (remaining[p]) { ready = false; break; }
      if (ready) out.push_back(i);
    }
    return out;
  };

  std::vector<std::vector<std::size_t>> layers;
  std::vector<std::size_t> release = remainder_roots();
  std::size_t round = 0;
  while (!release.empty()) {
    for (auto s : release) remaining[s] = 0;
    std::vector<char> needed(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      if (remaining[i])
        for (auto p : g.parents(i)) needed[p] = 1;
    std::vector<std::size_t> layer;
    std::vector<char> in_release(n, 0);
    for (auto s : release) in_release[s] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      bool carried = processed[i] && (g.is_visible(i) || needed[i]);
      if (in_release[i] || carried) layer.push_back(i);
    }
    layers.push_back(std::move(layer));
    for (auto s : release) processed[s] = 1;

    auto roots = remainder_roots();
    if (plan.greedy) {
      release = std::move(roots);
    } else if (roots.empty()) {
      if (round < plan.rounds.size()) throw Error(ErrorCode::InvalidCustomPlan, "plan has more rounds than the graph needs");
      release.clear();
    } else {
      if (round >= plan.rounds.size()) throw Error(ErrorCode::InvalidCustomPlan, "plan ends before every node is released");
      const auto& chosen = plan.rounds[round];
      if (chosen.empty()) throw Error(ErrorCode::InvalidCustomPlan, "round " + std::to_string(round + 1) + " is empty");
      release.clear();
      for (const auto& name : chosen) {
        auto i = g.index_of(name);
        if (!std::binary_search(roots.begin(), roots.end(), i))
          throw Error(ErrorCode::InvalidCustomPlan, "'" + name + "' is not a root of the remainder", {name});
        release.push_back(i);
      }
      std::sort(release.begin(), release.end());
      release.erase(std::unique(release.begin(), release.end()), release.end());
    }
    ++round;
  }
  return Synchronization(g, std::move(layers));
}

// trainable(l) marks the free weights of layer l; constant(l) holds the fixed
// values (1 on identity carries, 0 elsewhere). Index 0 is unused.
struct MaskSet {
  std::vector<Eigen::MatrixXd> trainable;
  std::vector<Eigen::MatrixXd> constant;

  std::size_t trainable_count() const {
    double total = 0;
    for (const auto& m : trainable) total += m.sum();
    return static_cast<std::size_t>(total);
  }
};

inline MaskSet build_masks(const Synchronization& s) {
  MaskSet m;
  m.trainable.resize(s.depth());
  m.constant.resize(s.depth());
  for (std::size_t l = 1; l < s.depth(); ++l) {
    const auto& prev = s.layer(l - 1);
    const auto& cur = s.layer(l);
    m.trainable[l] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(prev.size()), static_cast<Eigen::Index>(cur.size()));
    m.constant[l] = m.trainable[l];
    for (std::size_t j = 0; j < cur.size(); ++j) {
      auto node = cur[j];
      if (s.is_new(l, node)) {
        for (auto p : s.graph().parents(node))
          m.trainable[l](static_cast<Eigen::Index>(s.position(l - 1, p)), static_cast<Eigen::Index>(j)) = 1.0;
      } else {
        m.constant[l](static_cast<Eigen::Index>(s.position(l - 1, node)), static_cast<Eigen::Index>(j)) = 1.0;
      }
    }
  }
  return m;
}

// Where each canonical edge lives in the layered weight stack.
struct EdgeSlot {
  std::size_t layer;
  Eigen::Index row;
  Eigen::Index col;
};

inline std::vector<EdgeSlot> edge_slots(const Synchronization& s) {
  std::vector<EdgeSlot> out;
  out.reserve(s.graph().edge_count());
  for (auto [p, c] : s.graph().edges()) {
    auto l = s.first_appearance(c);
    out.push_back({l, static_cast<Eigen::Index>(s.position(l - 1, p)), static_cast<Eigen::Index>(s.position(l, c))});
  }
  return out;
}

inline std::string dump(const Synchronization& s, const MaskSet& m) {
  std::ostringstream os;
  const auto& g = s.graph();
  os << "depth " << s.depth() << "\n";
  for (std::size_t l = 0; l < s.depth(); ++l) {
    os << "layer " << l << ":";
    for (auto n : s.layer(l)) os << " " << g.name(n) << (s.is_new(l, n) ? "" : "*");
    os << "\n";
  }
  for (std::size_t l = 1; l < s.depth(); ++l) {
    os << "mask " << l << " (rows layer " << l - 1 << ", cols layer " << l << ")\n";
    for (Eigen::Index i = 0; i < m.trainable[l].rows(); ++i) {
      os << "  " << g.name(s.layer(l - 1)[static_cast<std::size_t>(i)]) << ":";
      for (Eigen::Index j = 0; j < m.trainable[l].cols(); ++j)
        os << " " << (m.trainable[l](i, j) != 0 ? "w" : m.constant[l](i, j) != 0 ? "1" : "0");
      os << "\n";
    }
  }
  return os.str();
}

// Layered drawing: solid edges where a node first appears, dashed carries.
inline std::string to_dot(const Synchronization& s) {
  std::ostringstream os;
  const auto& g = s.graph();
  auto id = [&](std::size_t l, std::size_t n) { return "\"" + g.name(n) + "@" + std::to_string(l) + "\""; };
  os << "digraph sync {\n  rankdir=TB;\n";
  for (std::size_t l = 0; l < s.depth(); ++l) {
    os << "  { rank=same;";
    for (auto n : s.layer(l))
      os << " " << id(l, n) << " [label=\"" << g.name(n) << "\"" << (g.is_latent(n) ? ", style=dashed" : "") << "];";
    os << " }\n";
  }
  for (std::size_t l = 1; l < s.depth(); ++l) {
    for (auto n : s.layer(l)) {
      if (s.is_new(l, n)) {
        for (auto p : g.parents(n)) os << "  " << id(l - 1, p) << " -> " << id(l, n) << ";\n";
      } else {
        os << "  " << id(l - 1, n) << " -> " << id(l, n) << " [style=dashed];\n";
      }
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace sn2

#endif  // SN2_SYNC_HPP
