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

#ifndef SN2_MODEL_HPP
#define SN2_MODEL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sn2/error.hpp"
#include "sn2/gauss.hpp"
#include "sn2/graph.hpp"

namespace sn2 {

// splitmix64 finalizer; derives independent streams from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ stream) ^ index);
}

// One standard-normal weight per edge, in canonical edge order.
inline std::vector<double> random_edge_weights(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(count);
  for (auto& x : w) x = normal(rng);
  return w;
}

// Loading matrix: column N holds the path-weight sums from every root to N.
// Rows are indexed by the graph's roots in node order.
inline MatrixXd root_loadings(const PmDag& g, const StructuralParams& params) {
  params.check(g);
  auto roots = g.roots();
  std::vector<Eigen::Index> row(g.size(), -1);
  for (std::size_t k = 0; k < roots.size(); ++k) row[roots[k]] = static_cast<Eigen::Index>(k);
  MatrixXd b = MatrixXd::Zero(static_cast<Eigen::Index>(roots.size()), static_cast<Eigen::Index>(g.size()));
  for (auto n : g.topological_order()) {
    const auto col = static_cast<Eigen::Index>(n);
    if (g.is_root(n)) {
      b(row[n], col) = 1.0;
      continue;
    }
    auto ps = g.parents(n);
    for (std::size_t k = 0; k < ps.size(); ++k) b.col(col) += params.weights[n][k] * b.col(static_cast<Eigen::Index>(ps[k]));
  }
  return b;
}

// Covariance over every node, roots standard normal.
inline CovMatrix joint_cov(const PmDag& g, const StructuralParams& params) {
  MatrixXd b = root_loadings(g, params);
  std::vector<std::string> labels;
  for (const auto& n : g.nodes()) labels.push_back(n.name);
  return {std::move(labels), b.transpose() * b};
}

inline CovMatrix restrict_cov(const CovMatrix& c, const std::vector<std::string>& keep) {
  std::vector<Eigen::Index> idx;
  for (const auto& k : keep) {
    auto it = std::find(c.labels.begin(), c.labels.end(), k);
    if (it == c.labels.end()) throw Error(ErrorCode::UnknownNode, "no label '" + k + "'", {k});
    idx.push_back(static_cast<Eigen::Index>(it - c.labels.begin()));
  }
  CovMatrix out{keep, MatrixXd(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()))};
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j)
      out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.data(idx[i], idx[j]);
  return out;
}

inline CovMatrix visible_cov(const PmDag& g, const StructuralParams& params) {
  return restrict_cov(joint_cov(g, params), g.visible_names());
}

// Rescales a system whose roots have variances `root_variance` (indexed by
// node; non-root entries ignored) into one with unit-variance roots.
inline StructuralParams standardize(const PmDag& g, const StructuralParams& params, const std::vector<double>& root_variance) {
  params.check(g);
  if (root_variance.size() != g.size()) throw Error(ErrorCode::ShapeMismatch, "one variance per node expected");
  for (auto r : g.roots())
    if (root_variance[r] < 0) throw Error(ErrorCode::NegativeVariance, "root '" + g.name(r) + "' has negative variance", {g.name(r)});
  StructuralParams out = params;
  for (std::size_t c = 0; c < g.size(); ++c) {
    auto ps = g.parents(c);
    for (std::size_t k = 0; k < ps.size(); ++k)
      if (g.is_root(ps[k])) out.weights[c][k] *= std::sqrt(root_variance[ps[k]]);
  }
  return out;
}

}  // namespace sn2

#endif  // SN2_MODEL_HPP
