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

#ifndef SN2_REDUCED_HPP
#define SN2_REDUCED_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "sn2/error.hpp"
#include "sn2/layered.hpp"
#include "sn2/sync.hpp"

namespace sn2 {

// Memory-bounded solver state. Every covariance entry is computed once and
// kept in node-by-visible tables: a pair's covariance does not change once
// both nodes exist, so no per-layer copies are needed.
//
// sigma(P, Q) and lambda(P, Q) are indexed by any node P and a visible Q.
// Latent-latent covariances are never stored: latents are independent roots.
struct ReducedState {
  MatrixXd sigma;
  MatrixXd lambda;
  std::vector<Eigen::Index> vcol;    // node -> column, -1 for latents
  std::vector<std::size_t> offset;   // node -> first edge index of its parents
  std::vector<double> weights;       // canonical edge order
  MatrixXd sigma_final;              // over the last layer

  double cov(std::size_t p, std::size_t q) const {
    const auto i = static_cast<Eigen::Index>(p);
    const auto j = static_cast<Eigen::Index>(q);
    if (vcol[q] >= 0 && !std::isnan(sigma(i, vcol[q]))) return sigma(i, vcol[q]);
    if (vcol[p] >= 0) return sigma(j, vcol[p]);
    return p == q ? 1.0 : 0.0;
  }

  // lambda for a new column node, sigma for a carried one.
  double lambda_or_cov(const Synchronization& s, std::size_t l, std::size_t p, std::size_t u) const {
    if (s.is_new(l, u)) return lambda(static_cast<Eigen::Index>(p), vcol[u]);
    return cov(p, u);
  }
};

namespace detail {

inline void write_once(MatrixXd& table, Eigen::Index r, Eigen::Index c, double value, bool verify) {
  double& slot = table(r, c);
  if (std::isnan(slot)) {
    slot = value;
  } else if (verify && std::abs(slot - value) > 1e-9 * std::max(1.0, std::abs(value))) {
    throw Error(ErrorCode::InvalidArgument, "covariance table entry changed after it was written");
  }
}

}  // namespace detail

// With `verify`, every rewrite of an existing entry is checked against the
// stored value.
inline ReducedState forward_reduced(const Synchronization& s, std::span<const double> edge_weights, StorageMeter* meter = nullptr,
                                    bool verify = false) {
  const auto& g = s.graph();
  if (edge_weights.size() != g.edge_count())
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(g.edge_count()) + " edge weights");
  const std::size_t n = g.size();
  ReducedState st;
  st.weights.assign(edge_weights.begin(), edge_weights.end());
  st.vcol.assign(n, -1);
  st.offset.assign(n, 0);
  Eigen::Index nv = 0;
  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.is_visible(i)) st.vcol[i] = nv++;
    st.offset[i] = off;
    off += g.parents(i).size();
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  st.sigma = MatrixXd::Constant(static_cast<Eigen::Index>(n), nv, nan);
  st.lambda = MatrixXd::Constant(static_cast<Eigen::Index>(n), nv, nan);
  if (meter) meter->acquire(static_cast<std::size_t>(st.sigma.size() + st.lambda.size()));

  for (std::size_t l = 1; l < s.depth(); ++l) {
    auto fresh = s.new_nodes(l);
    for (auto q : fresh) {
      auto ps = g.parents(q);
      const double* w = st.weights.data() + st.offset[q];
      for (auto p : s.layer(l - 1)) {
        double acc = 0;
        for (std::size_t k = 0; k < ps.size(); ++k) acc += w[k] * st.cov(ps[k], p);
        detail::write_once(st.lambda, static_cast<Eigen::Index>(p), st.vcol[q], acc, verify);
      }
    }
    for (auto q : fresh) {
      const auto qc = st.vcol[q];
      for (auto p : s.layer(l)) {
        double value;
        if (!s.is_new(l, p)) {
          value = st.lambda(static_cast<Eigen::Index>(p), qc);
        } else {
          auto ps = g.parents(p);
          const double* w = st.weights.data() + st.offset[p];
          value = 0;
          for (std::size_t k = 0; k < ps.size(); ++k) value += w[k] * st.lambda(static_cast<Eigen::Index>(ps[k]), qc);
        }
        detail::write_once(st.sigma, static_cast<Eigen::Index>(p), qc, value, verify);
        if (st.vcol[p] >= 0) detail::write_once(st.sigma, static_cast<Eigen::Index>(q), st.vcol[p], st.sigma(static_cast<Eigen::Index>(p), qc), verify);
      }
    }
  }

  const auto& last = s.layer(s.depth() - 1);
  const auto m = static_cast<Eigen::Index>(last.size());
  st.sigma_final.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) st.sigma_final(i, j) = st.cov(last[static_cast<std::size_t>(i)], last[static_cast<std::size_t>(j)]);
  if (meter) meter->acquire(static_cast<std::size_t>(st.sigma_final.size()));
  return st;
}

// Per-edge gradients (canonical order). Per-layer gradient tables hold only
// columns of visible nodes and are released as soon as the next one exists.
inline std::vector<double> backward_reduced(const Synchronization& s, const ReducedState& st, const MatrixXd& seed,
                                            StorageMeter* meter = nullptr) {
  detail::check_seed(s, seed);
  const auto& g = s.graph();
  std::vector<double> grad(g.edge_count(), 0.0);

  // Visible columns of one layer, and their index within that layer.
  auto visible_columns = [&](std::size_t l) {
    std::vector<std::size_t> cols;
    for (auto node : s.layer(l))
      if (g.is_visible(node)) cols.push_back(node);
    return cols;
  };
  std::vector<Eigen::Index> local(g.size(), -1);
  auto index_columns = [&](const std::vector<std::size_t>& cols) {
    for (std::size_t k = 0; k < cols.size(); ++k) local[cols[k]] = static_cast<Eigen::Index>(k);
  };

  std::size_t l = s.depth() - 1;
  auto cols = visible_columns(l);
  MatrixXd gl(static_cast<Eigen::Index>(s.layer(l).size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) gl.col(static_cast<Eigen::Index>(c)) = 0.5 * (seed.col(static_cast<Eigen::Index>(s.position(l, cols[c]))) + seed.row(static_cast<Eigen::Index>(s.position(l, cols[c]))).transpose());
  if (meter) meter->acquire(static_cast<std::size_t>(gl.size()));

  for (; l >= 1; --l) {
    const auto& cur = s.layer(l);
    const auto& prev = s.layer(l - 1);
    index_columns(cols);
    auto fresh = s.new_nodes(l);

    for (auto q : fresh) {
      auto ps = g.parents(q);
      const auto qc = local[q];
      for (std::size_t k = 0; k < ps.size(); ++k) {
        double acc = 0;
        for (std::size_t u = 0; u < cur.size(); ++u) acc += st.lambda_or_cov(s, l, ps[k], cur[u]) * gl(static_cast<Eigen::Index>(u), qc);
        grad[st.offset[q] + k] = 2.0 * acc;
      }
    }
    if (l == 1) break;

    auto pcols = visible_columns(l - 1);
    // h(U, R) = sum over U' of G(U, U') W(R, U'), R visible in the previous layer.
    MatrixXd h(static_cast<Eigen::Index>(cur.size()), static_cast<Eigen::Index>(pcols.size()));
    for (std::size_t r = 0; r < pcols.size(); ++r) h.col(static_cast<Eigen::Index>(r)) = gl.col(local[pcols[r]]);
    std::vector<Eigen::Index> plocal(g.size(), -1);
    for (std::size_t k = 0; k < pcols.size(); ++k) plocal[pcols[k]] = static_cast<Eigen::Index>(k);
    for (auto u : fresh) {
      auto ps = g.parents(u);
      const double* w = st.weights.data() + st.offset[u];
      for (std::size_t k = 0; k < ps.size(); ++k)
        if (plocal[ps[k]] >= 0) h.col(plocal[ps[k]]) += w[k] * gl.col(local[u]);
    }
    if (meter) meter->acquire(static_cast<std::size_t>(h.size()));

    // G_prev(P, R) = sum over U of W(P, U) h(U, R).
    MatrixXd gp = MatrixXd::Zero(static_cast<Eigen::Index>(prev.size()), static_cast<Eigen::Index>(pcols.size()));
    for (std::size_t pi = 0; pi < prev.size(); ++pi) {
      auto p = prev[pi];
      if (s.contains(l, p) && !s.is_new(l, p)) gp.row(static_cast<Eigen::Index>(pi)) = h.row(static_cast<Eigen::Index>(s.position(l, p)));
    }
    for (auto u : fresh) {
      auto ps = g.parents(u);
      const double* w = st.weights.data() + st.offset[u];
      const auto ur = static_cast<Eigen::Index>(s.position(l, u));
      for (std::size_t k = 0; k < ps.size(); ++k) gp.row(static_cast<Eigen::Index>(s.position(l - 1, ps[k]))) += w[k] * h.row(ur);
    }
    if (meter) {
      meter->acquire(static_cast<std::size_t>(gp.size()));
      meter->release(static_cast<std::size_t>(h.size() + gl.size()));
    }
    for (auto c : cols) local[c] = -1;
    gl = std::move(gp);
    cols = std::move(pcols);
  }
  if (meter) meter->release(static_cast<std::size_t>(gl.size()));
  return grad;
}

}  // namespace sn2

#endif  // SN2_REDUCED_HPP
