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

#ifndef SN2_GRAPH_HPP
#define SN2_GRAPH_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sn2/error.hpp"

namespace sn2 {

enum class Role { visible, latent };

inline std::string_view to_string(Role r) { return r == Role::visible ? "visible" : "latent"; }

struct NodeId {
  std::string name;
  Role role = Role::visible;

  bool operator==(const NodeId&) const = default;
};

using NamedEdge = std::pair<std::string, std::string>;

class PmDag;
PmDag validate(std::vector<NodeId> nodes, const std::vector<NamedEdge>& edges, bool strict = true);

// Latent-variable DAG with visible/latent roles. Instances come out of
// validate(), so the edge relation is acyclic and every root is latent.
// When every latent is also a root the graph is a pmDAG (is_strict()).
//
// Node indices follow the node list; parent and child lists are sorted by
// index, which is the parent ordering every weight vector indexes against.
class PmDag {
 public:
  PmDag() = default;

  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodeId>& nodes() const { return nodes_; }
  const NodeId& node(std::size_t i) const { return nodes_.at(i); }
  const std::string& name(std::size_t i) const { return nodes_.at(i).name; }
  bool is_visible(std::size_t i) const { return nodes_[i].role == Role::visible; }
  bool is_latent(std::size_t i) const { return nodes_[i].role == Role::latent; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view name) const {
    auto i = find(name);
    if (!i) throw Error(ErrorCode::UnknownNode, "no node named '" + std::string(name) + "'", {std::string(name)});
    return *i;
  }

  std::span<const std::size_t> parents(std::size_t i) const { return parents_.at(i); }
  std::span<const std::size_t> children(std::size_t i) const { return children_.at(i); }
  bool is_root(std::size_t i) const { return parents_.at(i).empty(); }

  bool has_edge(std::size_t parent, std::size_t child) const {
    const auto& p = parents_.at(child);
    return std::binary_search(p.begin(), p.end(), parent);
  }
  bool has_edge(std::string_view parent, std::string_view child) const {
    auto p = find(parent), c = find(child);
    return p && c && has_edge(*p, *c);
  }

  std::vector<std::size_t> roots() const { return select([&](std::size_t i) { return is_root(i); }); }
  std::vector<std::size_t> non_roots() const { return select([&](std::size_t i) { return !is_root(i); }); }
  std::vector<std::size_t> visibles() const { return select([&](std::size_t i) { return is_visible(i); }); }
  std::vector<std::size_t> latents() const { return select([&](std::size_t i) { return is_latent(i); }); }

  std::vector<std::string> visible_names() const {
    std::vector<std::string> out;
    for (auto i : visibles()) out.push_back(nodes_[i].name);
    return out;
  }

  // Every latent is a root.
  bool is_strict() const {
    for (std::size_t i = 0; i < size(); ++i)
      if (is_latent(i) && !is_root(i)) return false;
    return true;
  }

  // Canonical edge order: children in node order, each child's parents in
  // node order. Flat weight vectors index against this list.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count_);
    for (std::size_t c = 0; c < size(); ++c)
      for (auto p : parents_[c]) out.emplace_back(p, c);
    return out;
  }

  std::vector<NamedEdge> named_edges() const {
    std::vector<NamedEdge> out;
    for (auto [p, c] : edges()) out.emplace_back(nodes_[p].name, nodes_[c].name);
    return out;
  }

  std::size_t edge_count() const { return edge_count_; }

  // Kahn's algorithm, always releasing the lowest-index ready node.
  std::vector<std::size_t> topological_order() const {
    std::vector<std::size_t> indegree(size());
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < size(); ++i) {
      indegree[i] = parents_[i].size();
      if (indegree[i] == 0) ready.push(i);
    }
    std::vector<std::size_t> order;
    order.reserve(size());
    while (!ready.empty()) {
      auto n = ready.top();
      ready.pop();
      order.push_back(n);
      for (auto c : children_[n])
        if (--indegree[c] == 0) ready.push(c);
    }
    return order;
  }

  bool operator==(const PmDag& o) const { return nodes_ == o.nodes_ && parents_ == o.parents_; }

 private:
  friend PmDag validate(std::vector<NodeId>, const std::vector<NamedEdge>&, bool);
  friend PmDag make_unchecked(std::vector<NodeId>, const std::vector<std::pair<std::size_t, std::size_t>>&);

  template <class Pred>
  std::vector<std::size_t> select(Pred pred) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (pred(i)) out.push_back(i);
    return out;
  }

  std::vector<NodeId> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::size_t edge_count_ = 0;
};

// Builds the adjacency without any checks; duplicates in `edges` collapse.
inline PmDag make_unchecked(std::vector<NodeId> nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  PmDag g;
  g.nodes_ = std::move(nodes);
  g.parents_.assign(g.nodes_.size(), {});
  g.children_.assign(g.nodes_.size(), {});
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) g.index_.emplace(g.nodes_[i].name, i);
  for (auto [p, c] : edges) {
    g.parents_[c].push_back(p);
    g.children_[p].push_back(c);
  }
  g.edge_count_ = 0;
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    for (auto* list : {&g.parents_[i], &g.children_[i]}) {
      std::sort(list->begin(), list->end());
      list->erase(std::unique(list->begin(), list->end()), list->end());
    }
    g.edge_count_ += g.parents_[i].size();
  }
  return g;
}

namespace detail {

// Returns the node path of one directed cycle (first node repeated at the end),
// or an empty vector when the graph is acyclic.
inline std::vector<std::size_t> find_cycle(const std::vector<std::vector<std::size_t>>& children) {
  const std::size_t n = children.size();
  enum : char { white, gray, black };
  std::vector<char> color(n, white);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> next_child(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    if (color[start] != white) continue;
    stack.push_back(start);
    color[start] = gray;
    while (!stack.empty()) {
      auto u = stack.back();
      if (next_child[u] < children[u].size()) {
        auto v = children[u][next_child[u]++];
        if (color[v] == gray) {
          auto it = std::find(stack.begin(), stack.end(), v);
          std::vector<std::size_t> path(it, stack.end());
          path.push_back(v);
          return path;
        }
        if (color[v] == white) {
          color[v] = gray;
          stack.push_back(v);
        }
      } else {
        color[u] = black;
        stack.pop_back();
      }
    }
  }
  return {};
}

}  // namespace detail

// Checks acyclicity, that every root is latent and, when `strict`, that every
// latent is a root. Node order is preserved.
inline PmDag validate(std::vector<NodeId> nodes, const std::vector<NamedEdge>& edges, bool strict) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!index.emplace(nodes[i].name, i).second)
      throw Error(ErrorCode::DuplicateNode, "duplicate node '" + nodes[i].name + "'", {nodes[i].name});
  }
  std::vector<std::pair<std::size_t, std::size_t>> idx_edges;
  idx_edges.reserve(edges.size());
  for (const auto& [p, c] : edges) {
    auto ip = index.find(p);
    auto ic = index.find(c);
    if (ip == index.end()) throw Error(ErrorCode::UnknownNode, "edge references unknown node '" + p + "'", {p});
    if (ic == index.end()) throw Error(ErrorCode::UnknownNode, "edge references unknown node '" + c + "'", {c});
    idx_edges.emplace_back(ip->second, ic->second);
  }
  PmDag g = make_unchecked(std::move(nodes), idx_edges);

  std::vector<std::vector<std::size_t>> children(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) children[i].assign(g.children(i).begin(), g.children(i).end());
  if (auto cycle = detail::find_cycle(children); !cycle.empty()) {
    std::vector<std::string> path;
    std::string text;
    for (auto i : cycle) {
      path.push_back(g.name(i));
      text += (text.empty() ? "" : "->") + g.name(i);
    }
    throw Error(ErrorCode::CycleDetected, "cycle " + text, std::move(path));
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_root(i) && g.is_visible(i))
      throw Error(ErrorCode::VisibleRoot, "visible node '" + g.name(i) + "' has no parents", {g.name(i)});
    if (strict && g.is_latent(i) && !g.is_root(i))
      throw Error(ErrorCode::NonRootLatent, "latent node '" + g.name(i) + "' has parents", {g.name(i)});
  }
  return g;
}

struct NodeQuery {
  std::vector<std::string> parents;
  std::vector<std::string> children;
  bool is_root = false;
};

inline NodeQuery query(const PmDag& g, std::string_view node) {
  auto i = g.index_of(node);
  NodeQuery q;
  for (auto p : g.parents(i)) q.parents.push_back(g.name(p));
  for (auto c : g.children(i)) q.children.push_back(g.name(c));
  q.is_root = g.is_root(i);
  return q;
}

namespace detail {

struct EditableGraph {
  std::vector<NodeId> nodes;
  std::set<std::pair<std::string, std::string>> edges;

  explicit EditableGraph(const PmDag& g) : nodes(g.nodes()) {
    for (auto& e : g.named_edges()) edges.insert(e);
  }

  bool has(const std::string& name) const {
    return std::any_of(nodes.begin(), nodes.end(), [&](const NodeId& n) { return n.name == name; });
  }

  std::string fresh_name(const std::string& base) const {
    if (!has(base)) return base;
    for (int k = 2;; ++k) {
      auto candidate = base + "_" + std::to_string(k);
      if (!has(candidate)) return candidate;
    }
  }

  std::vector<std::string> parents_of(const std::string& n) const {
    std::vector<std::string> out;
    for (auto& [p, c] : edges)
      if (c == n) out.push_back(p);
    return out;
  }

  std::vector<std::string> children_of(const std::string& n) const {
    std::vector<std::string> out;
    for (auto& [p, c] : edges)
      if (p == n) out.push_back(c);
    return out;
  }

  void remove_node(const std::string& n) {
    std::erase_if(nodes, [&](const NodeId& x) { return x.name == n; });
    std::erase_if(edges, [&](const auto& e) { return e.first == n || e.second == n; });
  }

  PmDag build() const {
    return validate(nodes, std::vector<NamedEdge>(edges.begin(), edges.end()), /*strict=*/false);
  }
};

// Resolves target names and returns their indices in node-list order.
inline std::vector<std::size_t> resolve_sorted(const PmDag& g, const std::vector<std::string>& targets) {
  std::vector<std::size_t> idx;
  for (auto& t : targets) idx.push_back(g.index_of(t));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

}  // namespace detail

// Aux-map entries: target name -> name of the latent node added for it.
using AuxMap = std::vector<std::pair<std::string, std::string>>;

struct Augmented {
  PmDag graph;
  AuxMap aux;
};

// Adds a fresh latent parent "__aux_<target>" to every target.
inline Augmented augment(const PmDag& g, const std::vector<std::string>& targets) {
  auto order = detail::resolve_sorted(g, targets);
  detail::EditableGraph eg(g);
  AuxMap aux;
  for (auto t : order) {
    const auto& target = g.name(t);
    auto aux_name = eg.fresh_name("__aux_" + target);
    eg.nodes.push_back({aux_name, Role::latent});
    eg.edges.insert({aux_name, target});
    aux.emplace_back(target, aux_name);
  }
  if (order.empty()) return {g, {}};
  return {eg.build(), std::move(aux)};
}

enum class ExogenizeMode { deterministic, indeterministic };

// Deterministic mode removes each non-root latent target and wires its parents
// to its children. Indeterministic mode first augments the target, so a fresh
// root takes its place.
inline PmDag exogenize(const PmDag& g, const std::vector<std::string>& latents, ExogenizeMode mode) {
  auto order = detail::resolve_sorted(g, latents);
  for (auto t : order) {
    if (!g.is_latent(t)) throw Error(ErrorCode::NotLatent, "'" + g.name(t) + "' is not latent", {g.name(t)});
    if (mode == ExogenizeMode::deterministic && g.is_root(t))
      throw Error(ErrorCode::RootTarget, "'" + g.name(t) + "' is a root", {g.name(t)});
  }
  if (order.empty()) return g;
  detail::EditableGraph eg(g);
  for (auto t : order) {
    const auto& target = g.name(t);
    if (mode == ExogenizeMode::indeterministic) {
      auto aux_name = eg.fresh_name("__aux_" + target);
      eg.nodes.push_back({aux_name, Role::latent});
      eg.edges.insert({aux_name, target});
    }
    auto ps = eg.parents_of(target);
    auto cs = eg.children_of(target);
    eg.remove_node(target);
    for (auto& p : ps)
      for (auto& c : cs) eg.edges.insert({p, c});
  }
  return eg.build();
}

// Removes each latent-root target whose children are covered by the children
// of some other root present at the time it is processed.
inline PmDag coalesce(const PmDag& g, const std::vector<std::string>& latents) {
  auto order = detail::resolve_sorted(g, latents);
  for (auto t : order)
    if (!g.is_latent(t) || !g.is_root(t))
      throw Error(ErrorCode::NotLatentRoot, "'" + g.name(t) + "' is not a latent root", {g.name(t)});
  if (order.empty()) return g;
  detail::EditableGraph eg(g);
  for (auto t : order) {
    const auto& target = g.name(t);
    auto mine = eg.children_of(target);
    std::sort(mine.begin(), mine.end());
    bool covered = false;
    for (auto& other : eg.nodes) {
      if (other.name == target || !eg.parents_of(other.name).empty()) continue;
      auto theirs = eg.children_of(other.name);
      std::sort(theirs.begin(), theirs.end());
      if (std::includes(theirs.begin(), theirs.end(), mine.begin(), mine.end())) {
        covered = true;
        break;
      }
    }
    if (covered) eg.remove_node(target);
  }
  return eg.build();
}

struct Mutilated {
  PmDag graph;
  AuxMap aux;
};

// Cuts every edge into each visible target and attaches a fresh latent parent
// "__mut_<target>". A target whose sole parent is already its own mutilation
// node is left as is.
inline Mutilated mutilate(const PmDag& g, const std::vector<std::string>& targets) {
  auto order = detail::resolve_sorted(g, targets);
  for (auto t : order)
    if (!g.is_visible(t)) throw Error(ErrorCode::NotVisible, "'" + g.name(t) + "' is not visible", {g.name(t)});
  if (order.empty()) return {g, {}};
  detail::EditableGraph eg(g);
  AuxMap aux;
  for (auto t : order) {
    const auto& target = g.name(t);
    auto ps = eg.parents_of(target);
    const auto base = "__mut_" + target;
    if (ps.size() == 1 && (ps[0] == base || ps[0].starts_with(base + "_")) && g.find(ps[0])) {
      auto p = g.index_of(ps[0]);
      if (g.is_latent(p) && g.is_root(p) && g.children(p).size() == 1) {
        aux.emplace_back(target, ps[0]);
        continue;
      }
    }
    std::erase_if(eg.edges, [&](const auto& e) { return e.second == target; });
    auto aux_name = eg.fresh_name("__mut_" + target);
    eg.nodes.push_back({aux_name, Role::latent});
    eg.edges.insert({aux_name, target});
    aux.emplace_back(target, aux_name);
  }
  return {eg.build(), std::move(aux)};
}

// Marginalized-DAG test: pmDAG whose root child-sets form an anti-chain
// under inclusion.
inline bool is_mdag(const PmDag& g) {
  if (!g.is_strict()) return false;
  auto rs = g.roots();
  for (auto a : rs) {
    for (auto b : rs) {
      if (a == b) continue;
      auto ca = g.children(a);
      auto cb = g.children(b);
      if (std::includes(cb.begin(), cb.end(), ca.begin(), ca.end())) return false;
    }
  }
  return true;
}

inline bool is_correlation_scenario(const PmDag& g) {
  for (auto v : g.visibles())
    for (auto p : g.parents(v))
      if (!g.is_latent(p) || !g.is_root(p)) return false;
  return true;
}

// g1 is a sub-DAG of g2: same visible set, latents and edges of g1 contained in g2's.
inline bool is_subdag(const PmDag& g1, const PmDag& g2) {
  auto vis1 = g1.visible_names();
  auto vis2 = g2.visible_names();
  std::sort(vis1.begin(), vis1.end());
  std::sort(vis2.begin(), vis2.end());
  if (vis1 != vis2) return false;
  for (auto l : g1.latents()) {
    auto j = g2.find(g1.name(l));
    if (!j || !g2.is_latent(*j)) return false;
  }
  for (auto [p, c] : g1.named_edges()) {
    auto jp = g2.find(p);
    auto jc = g2.find(c);
    if (!jp || !jc || !g2.has_edge(*jp, *jc)) return false;
  }
  return true;
}

// Linear structural parameters: for each node, one weight per parent in the
// graph's parent order. Roots carry empty vectors; their variance is 1.
struct StructuralParams {
  std::vector<std::vector<double>> weights;

  static StructuralParams zeros(const PmDag& g) {
    StructuralParams p;
    p.weights.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) p.weights[i].assign(g.parents(i).size(), 0.0);
    return p;
  }

  // `flat` follows PmDag::edges().
  static StructuralParams from_edges(const PmDag& g, std::span<const double> flat) {
    if (flat.size() != g.edge_count())
      throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(g.edge_count()) + " edge weights");
    StructuralParams p = zeros(g);
    std::size_t k = 0;
    for (std::size_t c = 0; c < g.size(); ++c)
      for (auto& w : p.weights[c]) w = flat[k++];
    return p;
  }

  std::vector<double> to_edges() const {
    std::vector<double> flat;
    for (auto& w : weights) flat.insert(flat.end(), w.begin(), w.end());
    return flat;
  }

  bool fits(const PmDag& g) const {
    if (weights.size() != g.size()) return false;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (weights[i].size() != g.parents(i).size()) return false;
    return true;
  }

  void check(const PmDag& g) const {
    if (!fits(g)) throw Error(ErrorCode::ShapeMismatch, "parameters do not match the graph's parent lists");
  }

  double weight(const PmDag& g, std::size_t parent, std::size_t child) const {
    auto ps = g.parents(child);
    auto it = std::lower_bound(ps.begin(), ps.end(), parent);
    if (it == ps.end() || *it != parent) return 0.0;
    return weights[child][static_cast<std::size_t>(it - ps.begin())];
  }

  double& weight_ref(const PmDag& g, std::size_t parent, std::size_t child) {
    auto ps = g.parents(child);
    auto it = std::lower_bound(ps.begin(), ps.end(), parent);
    if (it == ps.end() || *it != parent)
      throw Error(ErrorCode::UnknownNode, "no edge " + g.name(parent) + "->" + g.name(child));
    return weights[child][static_cast<std::size_t>(it - ps.begin())];
  }
};

struct ExogenizedSystem {
  PmDag graph;
  StructuralParams params;
};

// Deterministic exogenization of one non-root latent, composing the linear
// maps: each child C of L gets weight w(P,C) + w(L,C) * w(P,L) on every parent
// P of L.
inline ExogenizedSystem exogenize_params(const PmDag& g, const StructuralParams& params, std::string_view latent) {
  params.check(g);
  auto l = g.index_of(latent);
  if (!g.is_latent(l)) throw Error(ErrorCode::NotLatent, "'" + g.name(l) + "' is not latent", {g.name(l)});
  if (g.is_root(l)) throw Error(ErrorCode::RootTarget, "'" + g.name(l) + "' is a root", {g.name(l)});

  PmDag out = exogenize(g, {std::string(latent)}, ExogenizeMode::deterministic);
  StructuralParams composed = StructuralParams::zeros(out);
  for (std::size_t c2 = 0; c2 < out.size(); ++c2) {
    auto c = g.index_of(out.name(c2));
    auto ps2 = out.parents(c2);
    for (std::size_t k = 0; k < ps2.size(); ++k) {
      auto p = g.index_of(out.name(ps2[k]));
      double w = g.has_edge(p, c) ? params.weight(g, p, c) : 0.0;
      if (g.has_edge(l, c) && g.has_edge(p, l)) w += params.weight(g, l, c) * params.weight(g, p, l);
      composed.weights[c2][k] = w;
    }
  }
  return {std::move(out), std::move(composed)};
}

}  // namespace sn2

#endif  // SN2_GRAPH_HPP
