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
#include <functional>
#include <random>
#include <sstream>

#include "support.hpp"

namespace sn2 {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

GaussianDist zero_mean(const MatrixXd& c) {
  return {VectorXd::Zero(c.rows()), {std::vector<std::string>(static_cast<std::size_t>(c.rows()), "v"), c}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ParseError;
}

TEST(SampleCovariance, HandComputed) {
  MatrixXd obs(2, 2);
  obs << 1, -1, -1, 1;
  auto c = sample_covariance(obs, {"X", "Y"});
  MatrixXd expect(2, 2);
  expect << 1, -1, -1, 1;
  EXPECT_TRUE(c.data.isApprox(expect));
  EXPECT_TRUE(sample_covariance(MatrixXd::Constant(5, 3, 2.0), {"a", "b", "c"}).data.isZero());
  EXPECT_EQ(code_of([] { sample_covariance(MatrixXd::Zero(1, 2), {"a", "b"}); }), ErrorCode::TooFewRows);
}

TEST(SampleCovariance, MonteCarloWithinFourStandardErrors) {
  std::mt19937_64 rng(7);
  MatrixXd target = testing::random_spd(3, rng);
  Eigen::LLT<MatrixXd> llt(target);
  MatrixXd lower = llt.matrixL();
  const int m = 1000000;
  std::normal_distribution<double> normal;
  MatrixXd z(m, 3);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < 3; ++j) z(i, j) = normal(rng);
  auto c = sample_covariance(z * lower.transpose(), {"a", "b", "c"});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((target(i, j) * target(i, j) + target(i, i) * target(j, j)) / m);
      EXPECT_LE(std::abs(c.data(i, j) - target(i, j)), 4 * se);
    }
}

TEST(Kl, ClosedFormValues) {
  MatrixXd i2 = MatrixXd::Identity(2, 2);
  EXPECT_DOUBLE_EQ(kl_gaussian(zero_mean(i2), zero_mean(i2)), 0.0);
  MatrixXd d = i2;
  d(0, 0) = 2;
  EXPECT_NEAR(kl_gaussian(zero_mean(d), zero_mean(i2)), 0.5 * (3 - 2 - std::log(2.0)), 1e-14);
  auto shifted = zero_mean(i2);
  shifted.mean << 1, 0;
  EXPECT_NEAR(kl_gaussian(shifted, zero_mean(i2)), 0.5, 1e-14);
}

TEST(Kl, SingularArguments) {
  MatrixXd sing(2, 2);
  sing << 1, 1, 1, 1;
  EXPECT_EQ(code_of([&] { kl_gaussian(zero_mean(MatrixXd::Identity(2, 2)), zero_mean(sing)); }), ErrorCode::SingularQ);
  EXPECT_TRUE(std::isinf(kl_gaussian(zero_mean(sing), zero_mean(MatrixXd::Identity(2, 2)))));
}

TEST(Kl, NonNegativeOnRandomPairs) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    auto n = 2 + k % 5;
    auto p = testing::random_spd(n, rng);
    auto q = testing::random_spd(n, rng);
    EXPECT_GE(kl_gaussian(zero_mean(p), zero_mean(q)), 0.0);
    EXPECT_NEAR(kl_gaussian(zero_mean(p), zero_mean(p)), 0.0, 1e-12);
  }
}

TEST(ErrKl, Values) {
  MatrixXd i3 = MatrixXd::Identity(3, 3);
  EXPECT_NEAR(err_kl(i3, i3), 3.0, 1e-14);
  MatrixXd d = MatrixXd::Identity(2, 2);
  d(0, 0) = 2;
  EXPECT_NEAR(err_kl(d, MatrixXd::Identity(2, 2)), 3 - std::log(2.0), 1e-14);
  EXPECT_TRUE(grad_err_kl(d, d).isZero(1e-14));
  MatrixXd g = grad_err_kl(d, MatrixXd::Identity(2, 2));
  EXPECT_NEAR(g(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(g(1, 1), 0.0, 1e-14);
  MatrixXd sing = MatrixXd::Zero(2, 2);
  EXPECT_EQ(code_of([&] { err_kl(d, sing); }), ErrorCode::SingularTarget);
  EXPECT_EQ(code_of([&] { err_kl(sing, d); }), ErrorCode::SingularModel);
}

TEST(ErrKl, IdentityWithDivergence) {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 30; ++k) {
    auto n = 2 + k % 4;
    auto s = testing::random_spd(n, rng);
    auto t = testing::random_spd(n, rng);
    double lhs = err_kl(s, t) - err_kl(t, t);
    double rhs = 2 * kl_gaussian(zero_mean(s), zero_mean(t));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(ErrKl, MinimizedAtTarget) {
  std::mt19937_64 rng(17);
  auto t = testing::random_spd(3, rng);
  const double at = err_kl(t, t);
  for (int k = 0; k < 200; ++k) {
    MatrixXd p = t + 0.05 * testing::random_symmetric(3, rng);
    if (Eigen::LLT<MatrixXd>(p).info() != Eigen::Success) continue;
    EXPECT_GE(err_kl(p, t), at - 1e-12);
  }
}

// Central differences on symmetric perturbations of entry (i, j).
template <class F>
MatrixXd fd_matrix(F&& f, const MatrixXd& s, double h) {
  const auto n = s.rows();
  MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      MatrixXd up = s, down = s;
      up(i, j) += h;
      down(i, j) -= h;
      out(i, j) = (f(up) - f(down)) / (2 * h);
    }
  return out;
}

TEST(Gradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 100; ++k) {
    auto n = 2 + k % 5;
    auto s = testing::random_spd(n, rng);
    auto t = testing::random_spd(n, rng);
    const double h = 1e-5 * s.diagonal().mean();
    // The derivative over an unconstrained matrix argument; entries of the
    // symmetric gradient are compared directly.
    auto fd_kl = fd_matrix([&](const MatrixXd& x) { return detail::trace_solve(target_factor(t), x) - std::log(x.determinant()); }, s, h);
    auto fd_bha = fd_matrix(
        [&](const MatrixXd& x) { return std::log((x + t).determinant()) - n * std::log(2.0) - 0.5 * std::log(x.determinant()); }, s, h);
    auto gk = grad_err_kl(s, t);
    auto gb = grad_err_bha(s, t);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        EXPECT_LE(testing::relative_error(gk(i, j), fd_kl(j, i)), 1e-6);
        EXPECT_LE(testing::relative_error(gb(i, j), fd_bha(j, i)), 1e-6);
      }
  }
}

TEST(ErrBha, Values) {
  MatrixXd i2 = MatrixXd::Identity(2, 2);
  EXPECT_NEAR(err_bha(i2, i2), 1.0, 1e-14);
  EXPECT_TRUE(grad_err_bha(i2, i2).isZero(1e-14));
  MatrixXd neg = -i2;
  EXPECT_EQ(code_of([&] { err_bha(i2, neg); }), ErrorCode::SingularSum);
}

TEST(ArgminSymmetry, BothDirectionsRecoverTarget) {
  // Gradient descent over a Cholesky parameterization of a free SPD matrix.
  std::mt19937_64 rng(23);
  auto t = testing::random_spd(3, rng);
  for (int direction = 0; direction < 2; ++direction) {
    MatrixXd l = MatrixXd::Identity(3, 3);
    for (int it = 0; it < 20000; ++it) {
      MatrixXd s = l * l.transpose();
      MatrixXd si = s.inverse(), ti = t.inverse();
      // d/ds of 2*KL(s||t) = ti - si;  of 2*KL(t||s) = si - si t si.
      MatrixXd gs = direction == 0 ? MatrixXd(ti - si) : MatrixXd(si - si * t * si);
      MatrixXd gl = 2 * gs * l;
      l -= 0.05 * gl.triangularView<Eigen::Lower>().toDenseMatrix();
    }
    EXPECT_LE((l * l.transpose() - t).norm(), 1e-6);
  }
}

TEST(SpdFactor, Values) {
  auto id = spd_factor(MatrixXd::Identity(3, 3));
  EXPECT_TRUE(id.lower.isIdentity());
  EXPECT_DOUBLE_EQ(id.log_det, 0.0);
  MatrixXd a(2, 2);
  a << 4, 2, 2, 2;
  auto f = spd_factor(a);
  MatrixXd l(2, 2);
  l << 2, 0, 1, 1;
  EXPECT_TRUE(f.lower.isApprox(l));
  EXPECT_NEAR(f.log_det, std::log(4.0), 1e-14);
  MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  EXPECT_EQ(code_of([&] { spd_factor(bad); }), ErrorCode::NotPositiveDefinite);
}

TEST(SpdFactor, JitterRescuesSemidefinite) {
  MatrixXd psd(2, 2);
  psd << 1, 1, 1, 1;
  auto f = spd_factor(psd);
  EXPECT_GT(f.jitter, 0.0);
  EXPECT_LE(f.jitter, 1e-6);
  EXPECT_THROW(spd_factor(psd, false), Error);
}

TEST(Csv, RoundTripAndValidation) {
  CovMatrix c{{"X", "Y"}, MatrixXd(2, 2)};
  c.data << 2, 0.5, 0.5, 1;
  std::stringstream ss;
  write_cov_csv(ss, c);
  auto back = parse_cov_csv(ss);
  EXPECT_EQ(back.labels, c.labels);
  EXPECT_TRUE(back.data.isApprox(c.data));
  std::stringstream asym("X,Y\n1,0.5\n0.6,1\n");
  EXPECT_THROW(parse_cov_csv(asym), Error);
  std::stringstream ragged("X,Y\n1,0.5\n");
  EXPECT_EQ(code_of([&] { parse_cov_csv(ragged); }), ErrorCode::ParseError);
}

}  // namespace
}  // namespace sn2
