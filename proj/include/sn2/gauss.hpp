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

#ifndef SN2_GAUSS_HPP
#define SN2_GAUSS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sn2/error.hpp"

namespace sn2 {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct CovMatrix {
  std::vector<std::string> labels;
  MatrixXd data;

  std::size_t size() const { return labels.size(); }

  // Throws unless square, labelled, symmetric to `sym_tol` (relative to the
  // largest entry) and PSD to -1e-10 * trace.
  void check(double sym_tol = 1e-12) const {
    if (data.rows() != data.cols() || static_cast<std::size_t>(data.rows()) != labels.size())
      throw Error(ErrorCode::ShapeMismatch, "covariance dimension does not match label count");
    const double scale = std::max(1.0, data.cwiseAbs().maxCoeff());
    if ((data - data.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
      throw Error(ErrorCode::InvalidArgument, "covariance is not symmetric");
    if (data.size() == 0) return;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(data, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, data.trace()))
      throw Error(ErrorCode::NotPositiveDefinite, "covariance has a negative eigenvalue");
  }
};

struct GaussianDist {
  VectorXd mean;
  CovMatrix cov;
};

// Biased estimator (divides by m).
inline CovMatrix sample_covariance(const MatrixXd& observations, std::vector<std::string> labels) {
  if (observations.rows() < 2) throw Error(ErrorCode::TooFewRows, "need at least two observations");
  if (static_cast<std::size_t>(observations.cols()) != labels.size())
    throw Error(ErrorCode::ShapeMismatch, "label count does not match column count");
  MatrixXd centered = observations.rowwise() - observations.colwise().mean();
  MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(observations.rows());
  return {std::move(labels), 0.5 * (cov + cov.transpose())};
}

struct SpdFactor {
  MatrixXd lower;
  double log_det = 0;
  double jitter = 0;  // diagonal shift that was needed
};

// Cholesky factor. With `escalate`, failing matrices are retried with a
// diagonal shift of 1e-12 * trace / n, growing x10 up to 1e-6 * trace / n.
inline SpdFactor spd_factor(const MatrixXd& sigma, bool escalate = true) {
  const auto n = sigma.rows();
  if (n != sigma.cols()) throw Error(ErrorCode::ShapeMismatch, "matrix is not square");
  auto attempt = [&](double jitter) -> std::optional<SpdFactor> {
    MatrixXd shifted = sigma;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) return std::nullopt;
    MatrixXd lower = llt.matrixL();
    const auto& d = lower.diagonal();
    if ((d.array() <= 0).any() || !d.allFinite()) return std::nullopt;
    return SpdFactor{lower, 2.0 * d.array().log().sum(), jitter};
  };
  if (auto f = attempt(0.0)) return *f;
  if (escalate && n > 0) {
    const double base = std::abs(sigma.trace()) / static_cast<double>(n);
    for (double rel = 1e-12; rel <= 1e-6 * 1.0000001; rel *= 10)
      if (auto f = attempt(rel * base)) return *f;
  }
  throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
}

namespace detail {

inline std::optional<SpdFactor> try_factor(const MatrixXd& m) {
  try {
    return spd_factor(m, false);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline MatrixXd inverse_from(const SpdFactor& f) {
  const auto n = f.lower.rows();
  MatrixXd inv = MatrixXd::Identity(n, n);
  f.lower.triangularView<Eigen::Lower>().solveInPlace(inv);
  f.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
  return 0.5 * (inv + inv.transpose());
}

// tr(A^{-1} B) from A's factor.
inline double trace_solve(const SpdFactor& a, const MatrixXd& b) {
  MatrixXd x = a.lower.triangularView<Eigen::Lower>().solve(b);
  x = a.lower.transpose().triangularView<Eigen::Upper>().solve(x);
  return x.trace();
}

}  // namespace detail

// KL(p || q). A semidefinite p gives +infinity.
inline double kl_gaussian(const GaussianDist& p, const GaussianDist& q) {
  const auto n = q.cov.data.rows();
  if (p.cov.data.rows() != n || p.mean.size() != n || q.mean.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "distribution dimensions differ");
  auto fq = detail::try_factor(q.cov.data);
  if (!fq) throw Error(ErrorCode::SingularQ, "reference covariance is not invertible");
  auto fp = detail::try_factor(p.cov.data);
  if (!fp) return std::numeric_limits<double>::infinity();
  VectorXd diff = q.mean - p.mean;
  VectorXd z = fq->lower.triangularView<Eigen::Lower>().solve(diff);
  double kl = 0.5 * (detail::trace_solve(*fq, p.cov.data) + z.squaredNorm() - static_cast<double>(n) + fq->log_det - fp->log_det);
  return std::max(kl, 0.0);
}

// Zero-mean convenience.
inline double kl_zero_mean(const MatrixXd& p, const MatrixXd& q) {
  GaussianDist gp{VectorXd::Zero(p.rows()), {std::vector<std::string>(static_cast<std::size_t>(p.rows())), p}};
  GaussianDist gq{VectorXd::Zero(q.rows()), {std::vector<std::string>(static_cast<std::size_t>(q.rows())), q}};
  return kl_gaussian(gp, gq);
}

inline SpdFactor model_factor(const MatrixXd& sigma) {
  auto f = detail::try_factor(sigma);
  if (!f) throw Error(ErrorCode::SingularModel, "model covariance is not invertible");
  return *f;
}

inline SpdFactor target_factor(const MatrixXd& target) {
  auto f = detail::try_factor(target);
  if (!f) throw Error(ErrorCode::SingularTarget, "target covariance is not invertible");
  return *f;
}

// tr(target^{-1} sigma) - ln|sigma|.
inline double err_kl(const MatrixXd& sigma, const MatrixXd& target) {
  auto ft = target_factor(target);
  auto fs = model_factor(sigma);
  return detail::trace_solve(ft, sigma) - fs.log_det;
}

inline MatrixXd grad_err_kl(const MatrixXd& sigma, const MatrixXd& target) {
  auto ft = target_factor(target);
  auto fs = model_factor(sigma);
  return detail::inverse_from(ft) - detail::inverse_from(fs);
}

// 2^-n |sigma + target| / |sigma|^(1/2), evaluated in log space.
inline double log_err_bha(const MatrixXd& sigma, const MatrixXd& target) {
  auto fsum = detail::try_factor(sigma + target);
  if (!fsum) throw Error(ErrorCode::SingularSum, "sigma + target is not invertible");
  auto fs = model_factor(sigma);
  return fsum->log_det - static_cast<double>(sigma.rows()) * std::log(2.0) - 0.5 * fs.log_det;
}

inline double err_bha(const MatrixXd& sigma, const MatrixXd& target) { return std::exp(log_err_bha(sigma, target)); }

// Derivative of log_err_bha with respect to sigma.
inline MatrixXd grad_err_bha(const MatrixXd& sigma, const MatrixXd& target) {
  auto fsum = detail::try_factor(sigma + target);
  if (!fsum) throw Error(ErrorCode::SingularSum, "sigma + target is not invertible");
  auto fs = model_factor(sigma);
  return detail::inverse_from(*fsum) - 0.5 * detail::inverse_from(fs);
}

// CSV: a header row of labels followed by the matrix rows.
inline CovMatrix parse_cov_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      auto b = cell.find_first_not_of(" \t\r");
      auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty covariance file");
  CovMatrix c;
  c.labels = split(line);
  const auto n = static_cast<Eigen::Index>(c.labels.size());
  c.data = MatrixXd::Zero(n, n);
  Eigen::Index r = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (r >= n || static_cast<Eigen::Index>(cells.size()) != n)
      throw Error(ErrorCode::ParseError, "covariance row " + std::to_string(r + 1) + " has the wrong shape");
    for (Eigen::Index j = 0; j < n; ++j) {
      try {
        c.data(r, j) = std::stod(cells[static_cast<std::size_t>(j)]);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad number '" + cells[static_cast<std::size_t>(j)] + "'");
      }
    }
    ++r;
  }
  if (r != n) throw Error(ErrorCode::ParseError, "expected " + std::to_string(n) + " covariance rows");
  c.check(1e-9);
  c.data = 0.5 * (c.data + c.data.transpose());
  return c;
}

inline CovMatrix read_cov_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return parse_cov_csv(in);
}

inline void write_cov_csv(std::ostream& out, const CovMatrix& c) {
  for (std::size_t i = 0; i < c.labels.size(); ++i) out << (i ? "," : "") << c.labels[i];
  out << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < c.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.data.cols(); ++j) out << (j ? "," : "") << c.data(i, j);
    out << "\n";
  }
}

}  // namespace sn2

#endif  // SN2_GAUSS_HPP
