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

// Fixtures and independent oracles shared by the test binaries.

#ifndef SN2_TESTS_SUPPORT_HPP
#define SN2_TESTS_SUPPORT_HPP

#include <Eigen/Dense>
#include <cmath>
#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "sn2/sn2.hpp"

namespace sn2::testing {

// A latent confounder A of X and Y, plus X -> Y.
inline PmDag bow() {
  return validate({{"A", Role::latent}, {"X", Role::visible}, {"Y", Role::visible}}, {{"A", "X"}, {"A", "Y"}, {"X", "Y"}});
}

// Random strict pmDAG with at most 10 nodes and a noise root per visible.
inline PmDag small_random_graph(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_v(2, 5);
  std::uniform_real_distribution<double> pick_e(0.0, 1.0);
  std::size_t v = static_cast<std::size_t>(pick_v(rng));
  double l_star = (v <= 4 && pick_e(rng) < 0.5) ? 1.0 / 3.0 : 0.0;
  return random_pmdag({v, l_star, pick_e(rng), rng()}).graph;
}

// A random graph with one extra latent mediator "M" that has parents and
// children, so it is a non-root latent. Not strict.
inline PmDag with_mediator(std::uint64_t seed) {
  auto g = small_random_graph(seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto order = g.topological_order();
  std::vector<std::size_t> rank(g.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = k;
  // Parents come before the cut in topological order, children after it.
  std::size_t last_visible = 0;
  for (auto v : g.visibles()) last_visible = std::max(last_visible, rank[v]);
  std::uniform_int_distribution<std::size_t> cut_pick(1, last_visible);
  const std::size_t cut = cut_pick(rng);
  std::bernoulli_distribution coin(0.5);
  auto nodes = g.nodes();
  auto edges = g.named_edges();
  nodes.push_back({"M", Role::latent});
  bool any_parent = false, any_child = false;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto n = order[k];
    if (k < cut && (coin(rng) || (!any_parent && k + 1 == cut))) {
      edges.emplace_back(g.name(n), "M");
      any_parent = true;
    }
    if (k >= cut && g.is_visible(n) && (coin(rng) || !any_child)) {
      edges.emplace_back("M", g.name(n));
      any_child = true;
    }
  }
  return validate(std::move(nodes), edges, false);
}

inline MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  MatrixXd s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += ridge;
  return 0.5 * (s + s.transpose());
}

inline MatrixXd random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  return 0.5 * (a + a.transpose());
}

// Central finite difference of a scalar function of the edge vector.
template <class F>
double central_difference(F&& f, std::vector<double> w, std::size_t k, double h) {
  const double base = w[k];
  w[k] = base + h;
  const double up = f(w);
  w[k] = base - h;
  const double down = f(w);
  return (up - down) / (2 * h);
}

// Richardson extrapolation of two central differences; fourth-order accurate,
// so a large step keeps rounding noise small on ill-conditioned losses.
template <class F>
double richardson_difference(F&& f, const std::vector<double>& w, std::size_t k, double h) {
  const double coarse = central_difference(f, w, k, h);
  const double fine = central_difference(f, w, k, h / 2);
  return (4 * fine - coarse) / 3;
}

inline double relative_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline bool close_mixed(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); }

}  // namespace sn2::testing

#endif  // SN2_TESTS_SUPPORT_HPP
