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

#ifndef SN2_IDENTIFY_HPP
#define SN2_IDENTIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sn2/error.hpp"
#include "sn2/fit.hpp"
#include "sn2/gauss.hpp"
#include "sn2/graph.hpp"
#include "sn2/model.hpp"

namespace sn2 {

struct InterventionQuery {
  std::vector<std::string> targets;
  std::vector<double> values;  // aligned with targets
  std::vector<std::string> effects;
};

// Distribution of the effects after fixing every target to its value.
inline GaussianDist interventional_dist(const PmDag& g, const StructuralParams& params, const InterventionQuery& q) {
  params.check(g);
  if (q.values.size() != q.targets.size()) throw Error(ErrorCode::ShapeMismatch, "one value per intervention target expected");
  for (const auto& e : q.effects) {
    auto i = g.index_of(e);
    if (!g.is_visible(i)) throw Error(ErrorCode::NotVisible, "'" + e + "' is not visible", {e});
  }
  auto cut = mutilate(g, q.targets);
  const PmDag& mg = cut.graph;

  std::vector<std::optional<double>> fixed(mg.size());
  for (std::size_t k = 0; k < q.targets.size(); ++k) fixed[mg.index_of(q.targets[k])] = q.values[k];

  auto roots = mg.roots();
  std::vector<Eigen::Index> row(mg.size(), -1);
  for (std::size_t k = 0; k < roots.size(); ++k) row[roots[k]] = static_cast<Eigen::Index>(k);
  MatrixXd load = MatrixXd::Zero(static_cast<Eigen::Index>(roots.size()), static_cast<Eigen::Index>(mg.size()));
  VectorXd mean = VectorXd::Zero(static_cast<Eigen::Index>(mg.size()));
  for (auto n : mg.topological_order()) {
    const auto col = static_cast<Eigen::Index>(n);
    if (fixed[n]) {
      mean(col) = *fixed[n];
      continue;
    }
    if (mg.is_root(n)) {
      load(row[n], col) = 1.0;
      continue;
    }
    const auto orig = g.index_of(mg.name(n));
    for (auto p : mg.parents(n)) {
      const double w = params.weight(g, g.index_of(mg.name(p)), orig);
      load.col(col) += w * load.col(static_cast<Eigen::Index>(p));
      mean(col) += w * mean(static_cast<Eigen::Index>(p));
    }
  }

  GaussianDist d;
  const auto m = static_cast<Eigen::Index>(q.effects.size());
  d.mean.resize(m);
  d.cov.labels = q.effects;
  d.cov.data.resize(m, m);
  std::vector<Eigen::Index> idx;
  for (const auto& e : q.effects) idx.push_back(static_cast<Eigen::Index>(mg.index_of(e)));
  for (Eigen::Index i = 0; i < m; ++i) {
    d.mean(i) = mean(idx[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m; ++j)
      d.cov.data(i, j) = load.col(idx[static_cast<std::size_t>(i)]).dot(load.col(idx[static_cast<std::size_t>(j)]));
  }
  return d;
}

// max(KL(p||q), KL(q||p)); +infinity when either side is degenerate.
inline double symmetric_kl(const GaussianDist& p, const GaussianDist& q) {
  try {
    return std::max(kl_gaussian(p, q), kl_gaussian(q, p));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularQ) return std::numeric_limits<double>::infinity();
    throw;
  }
}

inline bool check_fit(const PmDag& g, const CovMatrix& target, const FitResult& fit, double tol_fit) {
  if (std::isinf(tol_fit) && tol_fit > 0) return true;
  auto names = g.visible_names();
  MatrixXd t = restrict_cov(target, names).data;
  MatrixXd model = restrict_cov(fit.model_cov, names).data;
  try {
    return kl_zero_mean(model, t) <= tol_fit;
  } catch (const Error&) {
    return false;
  }
}

struct IdentifyConfig {
  FitConfig fit{};
  int iterations = 10;
  double tol_fit = 1e-5;
  double tol_id = 1e-2;
  int retry_cap = 5;       // attempts per slot
  bool all_pairs = false;  // compare every pair instead of against the reference
  std::uint64_t seed = 0;
};

enum class Verdict { not_inducible, not_identifiable, presumed_identifiable };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::not_inducible: return "NotInducible";
    case Verdict::not_identifiable: return "NotIdentifiable";
    case Verdict::presumed_identifiable: return "PresumedIdentifiable";
  }
  return "?";
}

struct IdentRun {
  std::uint64_t seed = 0;
  int attempts = 0;
  FitResult fit;
  GaussianDist effect;
  double divergence = 0;  // against the reference run
};

struct IdentVerdict {
  Verdict outcome = Verdict::not_inducible;
  double max_divergence = 0;
  std::size_t witness_a = 0;  // index into runs; 0 is the reference
  std::size_t witness_b = 0;
  std::vector<IdentRun> runs;
  int fits_used = 0;
};

inline std::uint64_t slot_seed(std::uint64_t master, int slot, int attempt) {
  return derive_seed(master, static_cast<std::uint64_t>(slot) + 1, static_cast<std::uint64_t>(attempt));
}

// Fits the reference, then `iterations` more systems with fresh seeds, and
// compares their interventional distributions. The strongest disagreement
// found is reported as the witness.
inline IdentVerdict identify(const PmDag& g, const CovMatrix& target, const InterventionQuery& query, const IdentifyConfig& cfg) {
  if (cfg.iterations < 1 || cfg.retry_cap < 1) throw Error(ErrorCode::InvalidArgument, "iterations and retry cap must be positive");
  for (const auto& t : query.targets)
    if (!g.is_visible(g.index_of(t))) throw Error(ErrorCode::NotVisible, "'" + t + "' is not visible", {t});
  MatrixXd t = prepare_target(g, target);
  Objective obj(synchronize(g, cfg.fit.plan), t, cfg.fit.loss, cfg.fit.method);
  FitConfig fc = cfg.fit;
  fc.kl_threshold = std::min(fc.kl_threshold, cfg.tol_fit);
  CovMatrix aligned{g.visible_names(), t};

  IdentVerdict v;
  auto run_slot = [&](int slot) -> std::optional<IdentRun> {
    for (int a = 0; a < cfg.retry_cap; ++a) {
      IdentRun run;
      run.seed = slot_seed(cfg.seed, slot, a);
      run.attempts = a + 1;
      run.fit = fit_run(obj, g, fc, run.seed);
      ++v.fits_used;
      if (check_fit(g, aligned, run.fit, cfg.tol_fit)) {
        run.effect = interventional_dist(g, run.fit.params, query);
        return run;
      }
    }
    return std::nullopt;
  };

  auto ref = run_slot(0);
  if (!ref) {
    v.outcome = Verdict::not_inducible;
    return v;
  }
  v.runs.push_back(std::move(*ref));
  for (int i = 1; i <= cfg.iterations; ++i) {
    auto run = run_slot(i);
    if (!run)
      throw Error(ErrorCode::FitBudgetExhausted, "slot " + std::to_string(i) + " did not converge within " + std::to_string(cfg.retry_cap) + " attempts");
    run->divergence = symmetric_kl(v.runs[0].effect, run->effect);
    if (run->divergence > v.max_divergence) {
      v.max_divergence = run->divergence;
      v.witness_a = 0;
      v.witness_b = v.runs.size();
    }
    v.runs.push_back(std::move(*run));
  }
  if (cfg.all_pairs) {
    for (std::size_t a = 1; a < v.runs.size(); ++a)
      for (std::size_t b = a + 1; b < v.runs.size(); ++b) {
        double d = symmetric_kl(v.runs[a].effect, v.runs[b].effect);
        if (d > v.max_divergence) {
          v.max_divergence = d;
          v.witness_a = a;
          v.witness_b = b;
        }
      }
  }
  v.outcome = v.max_divergence > cfg.tol_id ? Verdict::not_identifiable : Verdict::presumed_identifiable;
  return v;
}

}  // namespace sn2

#endif  // SN2_IDENTIFY_HPP
