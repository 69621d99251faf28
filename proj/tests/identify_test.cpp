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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"

namespace sn2 {
namespace {

using Eigen::MatrixXd;
using testing::bow;

StructuralParams bow_params(double a, double b, double c) {
  auto g = bow();
  return StructuralParams::from_edges(g, std::vector<double>{a, b, c});
}

PmDag one_confounder() {
  return validate({{"L", Role::latent}, {"E_X", Role::latent}, {"E_Y", Role::latent}, {"E_Z", Role::latent}, {"X", Role::visible},
                   {"Y", Role::visible}, {"Z", Role::visible}},
                  {{"L", "X"}, {"L", "Y"}, {"L", "Z"}, {"E_X", "X"}, {"E_Y", "Y"}, {"E_Z", "Z"}});
}

CovMatrix correlation_target(double r) {
  CovMatrix c{{"X", "Y", "Z"}, MatrixXd::Identity(3, 3)};
  c.data(0, 1) = c.data(1, 0) = r;
  c.data(0, 2) = c.data(2, 0) = r;
  c.data(1, 2) = c.data(2, 1) = -r;
  return c;
}

IdentifyConfig quick_config(std::uint64_t seed) {
  IdentifyConfig cfg;
  cfg.fit.restarts = 1;
  cfg.fit.optimizer.lr = 1e-2;
  cfg.iterations = 4;
  cfg.seed = seed;
  return cfg;
}

TEST(Interventional, BowDoZero) {
  auto d = interventional_dist(bow(), bow_params(0.7, -1.5, 2.0), {{"X"}, {0.0}, {"Y"}});
  EXPECT_DOUBLE_EQ(d.mean(0), 0.0);
  EXPECT_NEAR(d.cov.data(0, 0), 2.25, 1e-14);
  auto unit = interventional_dist(bow(), bow_params(1, 1, 1), {{"X"}, {0.0}, {"Y"}});
  EXPECT_NEAR(unit.cov.data(0, 0), 1.0, 1e-14);
}

TEST(Interventional, BowDoOneShiftsMean) {
  auto d = interventional_dist(bow(), bow_params(0.7, -1.5, 2.0), {{"X"}, {1.0}, {"Y"}});
  EXPECT_NEAR(d.mean(0), 2.0, 1e-14);
  EXPECT_NEAR(d.cov.data(0, 0), 2.25, 1e-14);
}

TEST(Interventional, EmptyTargetsGiveObservationalMargin) {
  for (std::uint64_t k = 0; k < 20; ++k) {
    auto g = testing::small_random_graph(k + 40);
    auto p = StructuralParams::from_edges(g, random_edge_weights(g.edge_count(), k));
    auto names = g.visible_names();
    auto d = interventional_dist(g, p, {{}, {}, names});
    auto obs = visible_cov(g, p);
    EXPECT_TRUE(d.mean.isZero());
    for (Eigen::Index i = 0; i < d.cov.data.rows(); ++i)
      for (Eigen::Index j = 0; j < d.cov.data.cols(); ++j) EXPECT_TRUE(testing::close_mixed(d.cov.data(i, j), obs.data(i, j), 1e-12));
  }
}

TEST(Interventional, RejectsBadQueries) {
  auto p = bow_params(1, 1, 1);
  EXPECT_THROW(interventional_dist(bow(), p, {{"Q"}, {0.0}, {"Y"}}), Error);
  try {
    interventional_dist(bow(), p, {{"X"}, {0.0}, {"A"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotVisible);
  }
}

TEST(Interventional, BowWitnessesAgreeObservationally) {
  // Both systems induce [[1,1],[1,2]] yet disagree under do(X=0).
  auto g = bow();
  auto p1 = bow_params(1, 1, 0), p2 = bow_params(1, 0, 1);
  EXPECT_TRUE(visible_cov(g, p1).data.isApprox(visible_cov(g, p2).data));
  auto d1 = interventional_dist(g, p1, {{"X"}, {0.0}, {"Y"}});
  auto d2 = interventional_dist(g, p2, {{"X"}, {0.0}, {"Y"}});
  EXPECT_DOUBLE_EQ(d1.cov.data(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(d2.cov.data(0, 0), 0.0);
  EXPECT_TRUE(std::isinf(symmetric_kl(d1, d2)));
}

TEST(CheckFit, Cases) {
  auto g = canonical("backdoor");
  auto truth = ground_truth(g, 1);
  FitResult exact;
  exact.params = truth.params;
  exact.model_cov = joint_cov(g, truth.params);
  EXPECT_TRUE(check_fit(g, truth.cov, exact, 1e-5));

  auto h = one_confounder();
  FitConfig cfg;
  cfg.restarts = 2;
  cfg.optimizer.lr = 1e-2;
  auto target = correlation_target(0.4);
  auto r = fit(h, target, cfg);
  EXPECT_FALSE(check_fit(h, target, r, 1e-5));
  EXPECT_TRUE(check_fit(h, target, r, std::numeric_limits<double>::infinity()));
}

TEST(Identify, BowIsNotIdentifiable) {
  auto g = canonical("bow");
  auto truth = ground_truth(g, 3);
  auto v = identify(g, truth.cov, {{"X"}, {0.0}, {"Y"}}, quick_config(11));
  EXPECT_EQ(v.outcome, Verdict::not_identifiable);
  EXPECT_GT(v.max_divergence, 1e-2);
}

TEST(Identify, BackdoorIsPresumedIdentifiable) {
  auto g = canonical("backdoor");
  auto truth = ground_truth(g, 3);
  auto v = identify(g, truth.cov, {{"X"}, {0.0}, {"Y"}}, quick_config(12));
  EXPECT_EQ(v.outcome, Verdict::presumed_identifiable);
  EXPECT_LE(v.max_divergence, 1e-2);
  EXPECT_EQ(v.runs.size(), 5u);
}

TEST(Identify, InfeasibleTargetIsNotInducible) {
  auto cfg = quick_config(13);
  cfg.retry_cap = 2;
  auto v = identify(one_confounder(), correlation_target(0.4), {{"X"}, {0.0}, {"Y"}}, cfg);
  EXPECT_EQ(v.outcome, Verdict::not_inducible);
  EXPECT_TRUE(v.runs.empty());
  EXPECT_EQ(v.fits_used, 2);
}

TEST(Identify, WitnessReplays) {
  auto g = canonical("bow");
  auto truth = ground_truth(g, 5);
  auto cfg = quick_config(21);
  InterventionQuery q{{"X"}, {0.0}, {"Y"}};
  auto v = identify(g, truth.cov, q, cfg);
  ASSERT_EQ(v.outcome, Verdict::not_identifiable);
  FitConfig fc = cfg.fit;
  fc.kl_threshold = std::min(fc.kl_threshold, cfg.tol_fit);
  auto a = fit_with_seed(g, truth.cov, fc, v.runs[v.witness_a].seed);
  auto b = fit_with_seed(g, truth.cov, fc, v.runs[v.witness_b].seed);
  EXPECT_TRUE(check_fit(g, truth.cov, a, cfg.tol_fit));
  EXPECT_TRUE(check_fit(g, truth.cov, b, cfg.tol_fit));
  EXPECT_EQ(a.edge_weights, v.runs[v.witness_a].fit.edge_weights);
  double d = symmetric_kl(interventional_dist(g, a.params, q), interventional_dist(g, b.params, q));
  EXPECT_GT(d, cfg.tol_id);
  EXPECT_DOUBLE_EQ(d, v.max_divergence);
}

TEST(Identify, MaxDivergenceMonotoneInIterations) {
  auto g = canonical("frontdoor");
  auto truth = ground_truth(g, 6);
  double prev = -1;
  for (int i : {1, 2, 4}) {
    auto cfg = quick_config(31);
    cfg.iterations = i;
    cfg.tol_id = std::numeric_limits<double>::infinity();
    auto v = identify(g, truth.cov, {{"X"}, {0.0}, {"Y"}}, cfg);
    EXPECT_GE(v.max_divergence, prev);
    prev = v.max_divergence;
  }
}

TEST(Identify, SeedsAreIndexDerived) {
  EXPECT_EQ(slot_seed(9, 0, 0), derive_seed(9, 1, 0));
  EXPECT_NE(slot_seed(9, 1, 0), slot_seed(9, 0, 1));
  EXPECT_THROW(identify(bow(), CovMatrix{{"X", "Y"}, MatrixXd::Identity(2, 2)}, {{"A"}, {0.0}, {"Y"}}, quick_config(1)), Error);
}

}  // namespace
}  // namespace sn2
