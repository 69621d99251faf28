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

#ifndef SN2_HARNESS_HPP
#define SN2_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sn2/error.hpp"
#include "sn2/fit.hpp"
#include "sn2/graph.hpp"
#include "sn2/layered.hpp"
#include "sn2/model.hpp"
#include "sn2/reduced.hpp"
#include "sn2/sync.hpp"

namespace sn2 {

struct GenSpec {
  std::size_t v = 16;
  double l_star = 0.0;  // latent abundance in [0, 1)
  double e_star = 0.5;  // edge density in [0, 1]
  std::uint64_t seed = 0;
};

struct GenSizes {
  std::size_t latents = 0;
  std::size_t requested_edges = 0;  // density formula, rounded
  std::size_t pool = 0;             // every admissible edge
  std::size_t edges = 0;            // what the generator will place
  bool clamped = false;
};

inline GenSizes generator_sizes(const GenSpec& s) {
  if (s.v == 0) throw Error(ErrorCode::InvalidArgument, "need at least one visible node");
  if (!(s.l_star >= 0 && s.l_star < 1)) throw Error(ErrorCode::InvalidArgument, "latent abundance must lie in [0, 1)");
  if (!(s.e_star >= 0 && s.e_star <= 1)) throw Error(ErrorCode::InvalidArgument, "edge density must lie in [0, 1]");
  const double v = static_cast<double>(s.v);
  GenSizes z;
  z.latents = static_cast<std::size_t>(std::llround(s.l_star / (1.0 - s.l_star) * v + v));
  const double l = static_cast<double>(z.latents);
  z.requested_edges = static_cast<std::size_t>(std::llround((l * v + v * (v - 1) / 2 + v) * s.e_star));
  z.pool = z.latents * s.v + s.v * (s.v - 1) / 2;
  z.edges = std::min(std::max(z.requested_edges, s.v), z.pool);
  z.clamped = z.edges != z.requested_edges;
  return z;
}

struct Generated {
  PmDag graph;
  GenSizes sizes;
};

// Visible nodes V0..V{v-1}; latents E0..E{v-1} are the per-visible noise
// terms, L0.. the rest. Extra edges are drawn uniformly without replacement
// from latent->visible pairs and from visible pairs oriented along a random
// order of the visibles.
inline Generated random_pmdag(const GenSpec& spec) {
  auto sizes = generator_sizes(spec);
  const std::size_t v = spec.v;
  std::mt19937_64 rng(spec.seed);
  std::vector<NodeId> nodes;
  for (std::size_t i = 0; i < v; ++i) nodes.push_back({"V" + std::to_string(i), Role::visible});
  for (std::size_t i = 0; i < sizes.latents; ++i)
    nodes.push_back({i < v ? "E" + std::to_string(i) : "L" + std::to_string(i - v), Role::latent});

  std::vector<std::size_t> order(v);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < v; ++i) edges.emplace_back(v + i, i);
  std::vector<std::pair<std::size_t, std::size_t>> pool;
  pool.reserve(sizes.pool - v);
  for (std::size_t k = 0; k < sizes.latents; ++k)
    for (std::size_t j = 0; j < v; ++j)
      if (k != j) pool.emplace_back(v + k, j);
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = a + 1; b < v; ++b) pool.emplace_back(order[a], order[b]);

  const std::size_t extra = sizes.edges - v;
  for (std::size_t k = 0; k < extra; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
    edges.push_back(pool[k]);
  }
  return {make_unchecked(std::move(nodes), edges), sizes};
}

inline const std::vector<std::string>& canonical_names() {
  static const std::vector<std::string> names = {"backdoor", "frontdoor", "m", "napkin", "iv", "bow", "extended_bow", "bad_m"};
  return names;
}

// Treatment X and outcome Y in every graph.
inline bool canonically_identifiable(const std::string& name) {
  return name == "backdoor" || name == "frontdoor" || name == "m" || name == "napkin" || name == "iv";
}

// Pre-marginalized canonical graphs: every visible V has its own noise root
// E_V, and each hidden confounder is a root U_* pointing at the nodes it
// confounds.
inline PmDag canonical(const std::string& name) {
  std::vector<std::string> vis;
  std::vector<NamedEdge> direct;
  std::vector<std::pair<std::string, std::vector<std::string>>> conf;
  if (name == "backdoor") {
    vis = {"X", "Y", "Z"};
    direct = {{"Z", "X"}, {"Z", "Y"}, {"X", "Y"}};
  } else if (name == "frontdoor") {
    vis = {"X", "Y", "Z"};
    direct = {{"X", "Z"}, {"Z", "Y"}};
    conf = {{"U_XY", {"X", "Y"}}};
  } else if (name == "m") {
    vis = {"X", "Y", "Z"};
    direct = {{"X", "Y"}};
    conf = {{"U_XZ", {"X", "Z"}}, {"U_ZY", {"Z", "Y"}}};
  } else if (name == "napkin") {
    vis = {"X", "Y", "W", "R"};
    direct = {{"W", "R"}, {"R", "X"}, {"X", "Y"}};
    conf = {{"U_WX", {"W", "X"}}, {"U_WY", {"W", "Y"}}};
  } else if (name == "iv") {
    vis = {"X", "Y", "Z"};
    direct = {{"Z", "X"}, {"X", "Y"}};
    conf = {{"U_XY", {"X", "Y"}}};
  } else if (name == "bow") {
    vis = {"X", "Y"};
    direct = {{"X", "Y"}};
    conf = {{"U_XY", {"X", "Y"}}};
  } else if (name == "extended_bow") {
    vis = {"X", "Y", "Z"};
    direct = {{"Z", "X"}, {"X", "Y"}};
    conf = {{"U_XY", {"X", "Y"}}, {"U_ZY", {"Z", "Y"}}};
  } else if (name == "bad_m") {
    vis = {"X", "Y", "Z"};
    direct = {{"X", "Y"}};
    conf = {{"U_XZ", {"X", "Z"}}, {"U_ZY", {"Z", "Y"}}, {"U_XY", {"X", "Y"}}};
  } else {
    throw Error(ErrorCode::UnknownName, "unknown canonical graph '" + name + "'", {name});
  }
  std::vector<NodeId> nodes;
  std::vector<NamedEdge> edges = direct;
  for (const auto& v : vis) nodes.push_back({v, Role::visible});
  for (const auto& [u, targets] : conf) {
    nodes.push_back({u, Role::latent});
    for (const auto& t : targets) edges.emplace_back(u, t);
  }
  for (const auto& v : vis) {
    nodes.push_back({"E_" + v, Role::latent});
    edges.emplace_back("E_" + v, v);
  }
  return validate(std::move(nodes), edges, true);
}

struct GroundTruth {
  StructuralParams params;
  CovMatrix cov;  // visible block
};

// Standard-normal weights; the exact induced covariance, or the biased sample
// covariance of `samples` draws when given.
inline GroundTruth ground_truth(const PmDag& g, std::uint64_t seed, std::optional<std::size_t> samples = std::nullopt) {
  auto params = StructuralParams::from_edges(g, random_edge_weights(g.edge_count(), seed));
  if (!samples) return {params, visible_cov(g, params)};
  MatrixXd load = root_loadings(g, params);
  auto vis = g.visibles();
  MatrixXd vload(load.rows(), static_cast<Eigen::Index>(vis.size()));
  for (std::size_t k = 0; k < vis.size(); ++k) vload.col(static_cast<Eigen::Index>(k)) = load.col(static_cast<Eigen::Index>(vis[k]));
  std::mt19937_64 rng(derive_seed(seed, 0x73616d70ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd roots(static_cast<Eigen::Index>(*samples), load.rows());
  for (Eigen::Index i = 0; i < roots.rows(); ++i)
    for (Eigen::Index j = 0; j < roots.cols(); ++j) roots(i, j) = normal(rng);
  return {params, sample_covariance(roots * vload, g.visible_names())};
}

struct BenchRow {
  std::size_t v;
  double l_star;
  double e_star;
  Method method;
  std::string phase;  // "forward" or "backward"
  double mean_seconds;
};

// Times forward and backward passes of each method on freshly generated
// graphs; one row per (grid point, method, phase).
inline std::vector<BenchRow> bench(const std::vector<std::size_t>& vs, const std::vector<double>& l_stars, const std::vector<double>& e_stars,
                                   const std::vector<Method>& methods, int repetitions, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  for (auto v : vs)
    for (auto ls : l_stars)
      for (auto es : e_stars) {
        std::vector<double> fwd(methods.size(), 0.0), bwd(methods.size(), 0.0);
        for (int r = 0; r < repetitions; ++r) {
          GenSpec spec{v, ls, es, derive_seed(seed, v * 1000003 + static_cast<std::uint64_t>(ls * 1000) * 1009 + static_cast<std::uint64_t>(es * 1000), static_cast<std::uint64_t>(r))};
          auto gen = random_pmdag(spec);
          auto s = synchronize(gen.graph);
          auto masks = build_masks(s);
          auto w = random_edge_weights(gen.graph.edge_count(), derive_seed(spec.seed, 1));
          auto stack = make_weights(s, masks, w);
          const auto n = static_cast<Eigen::Index>(s.layer(s.depth() - 1).size());
          MatrixXd seed_grad = MatrixXd::Identity(n, n);
          for (std::size_t k = 0; k < methods.size(); ++k) {
            auto t0 = clock::now();
            switch (methods[k]) {
              case Method::covariance: {
                auto f = forward_cov(s, stack);
                auto t1 = clock::now();
                auto gr = backward_cov(s, masks, stack, f, seed_grad);
                auto t2 = clock::now();
                fwd[k] += std::chrono::duration<double>(t1 - t0).count();
                bwd[k] += std::chrono::duration<double>(t2 - t1).count();
                break;
              }
              case Method::accumulation: {
                auto f = forward_acc(s, stack);
                auto t1 = clock::now();
                auto gr = backward_acc(s, masks, stack, f, seed_grad);
                auto t2 = clock::now();
                fwd[k] += std::chrono::duration<double>(t1 - t0).count();
                bwd[k] += std::chrono::duration<double>(t2 - t1).count();
                break;
              }
              case Method::reduced: {
                auto f = forward_reduced(s, w);
                auto t1 = clock::now();
                auto gr = backward_reduced(s, f, seed_grad);
                auto t2 = clock::now();
                fwd[k] += std::chrono::duration<double>(t1 - t0).count();
                bwd[k] += std::chrono::duration<double>(t2 - t1).count();
                break;
              }
            }
          }
        }
        for (std::size_t k = 0; k < methods.size(); ++k) {
          rows.push_back({v, ls, es, methods[k], "forward", fwd[k] / repetitions});
          rows.push_back({v, ls, es, methods[k], "backward", bwd[k] / repetitions});
        }
      }
  return rows;
}

}  // namespace sn2

#endif  // SN2_HARNESS_HPP
