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

#ifndef SN2_LAYERED_HPP
#define SN2_LAYERED_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "sn2/error.hpp"
#include "sn2/gauss.hpp"
#include "sn2/model.hpp"
#include "sn2/sync.hpp"

namespace sn2 {

// Counts matrix entries held by a solver pass.
class StorageMeter {
 public:
  void acquire(std::size_t entries) {
    current_ += entries;
    peak_ = std::max(peak_, current_);
  }
  void release(std::size_t entries) { current_ -= std::min(entries, current_); }
  void reset() { current_ = peak_ = 0; }
  std::size_t current() const { return current_; }
  std::size_t peak() const { return peak_; }

 private:
  std::size_t current_ = 0;
  std::size_t peak_ = 0;
};

namespace detail {
inline void meter_acquire(StorageMeter* m, const MatrixXd& x) {
  if (m) m->acquire(static_cast<std::size_t>(x.size()));
}
}  // namespace detail

// W[l] maps layer l-1 to layer l; W[0] is empty.
using WeightStack = std::vector<MatrixXd>;

inline WeightStack make_weights(const Synchronization& s, const MaskSet& m, std::span<const double> edge_weights) {
  if (edge_weights.size() != s.graph().edge_count())
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(s.graph().edge_count()) + " edge weights");
  WeightStack w(s.depth());
  for (std::size_t l = 1; l < s.depth(); ++l) w[l] = m.constant[l];
  auto slots = edge_slots(s);
  for (std::size_t k = 0; k < slots.size(); ++k) w[slots[k].layer](slots[k].row, slots[k].col) = edge_weights[k];
  return w;
}

inline std::vector<double> init_edge_weights(const Synchronization& s, std::uint64_t seed) {
  return random_edge_weights(s.graph().edge_count(), seed);
}

inline WeightStack init_weights(const Synchronization& s, const MaskSet& m, std::uint64_t seed) {
  auto w = init_edge_weights(s, seed);
  return make_weights(s, m, w);
}

// Reads per-edge values back out of a layered stack.
inline std::vector<double> gather_edges(const Synchronization& s, const WeightStack& stack) {
  auto slots = edge_slots(s);
  std::vector<double> out(slots.size());
  for (std::size_t k = 0; k < slots.size(); ++k) out[k] = stack[slots[k].layer](slots[k].row, slots[k].col);
  return out;
}

inline void check_shapes(const Synchronization& s, const WeightStack& w) {
  if (w.size() != s.depth()) throw Error(ErrorCode::ShapeMismatch, "weight stack depth differs from synchronization");
  for (std::size_t l = 1; l < s.depth(); ++l)
    if (static_cast<std::size_t>(w[l].rows()) != s.layer(l - 1).size() || static_cast<std::size_t>(w[l].cols()) != s.layer(l).size())
      throw Error(ErrorCode::ShapeMismatch, "weight matrix " + std::to_string(l) + " has the wrong shape");
}

struct CovForward {
  MatrixXd sigma_final;
  std::vector<MatrixXd> sigma;   // per layer
  std::vector<MatrixXd> lambda;  // lambda[l] = sigma[l-1] * W[l]; lambda[0] empty
};

inline CovForward forward_cov(const Synchronization& s, const WeightStack& w, StorageMeter* meter = nullptr) {
  check_shapes(s, w);
  CovForward f;
  f.sigma.resize(s.depth());
  f.lambda.resize(s.depth());
  const auto n0 = static_cast<Eigen::Index>(s.layer(0).size());
  f.sigma[0] = MatrixXd::Identity(n0, n0);
  detail::meter_acquire(meter, f.sigma[0]);
  for (std::size_t l = 1; l < s.depth(); ++l) {
    f.lambda[l].noalias() = f.sigma[l - 1] * w[l];
    f.sigma[l].noalias() = w[l].transpose() * f.lambda[l];
    detail::meter_acquire(meter, f.lambda[l]);
    detail::meter_acquire(meter, f.sigma[l]);
  }
  f.sigma_final = f.sigma.back();
  return f;
}

// Checks, bitwise, that a persisting pair keeps its covariance across layers
// and that lambda equals sigma wherever the column node persists.
inline bool check_preservation(const Synchronization& s, const CovForward& f) {
  for (std::size_t l = 1; l < s.depth(); ++l) {
    for (auto q : s.layer(l)) {
      if (s.is_new(l, q)) continue;
      auto qc = static_cast<Eigen::Index>(s.position(l, q));
      auto qp = static_cast<Eigen::Index>(s.position(l - 1, q));
      for (auto p : s.layer(l - 1))
        if (f.lambda[l](static_cast<Eigen::Index>(s.position(l - 1, p)), qc) != f.sigma[l - 1](static_cast<Eigen::Index>(s.position(l - 1, p)), qp)) return false;
      for (auto p : s.layer(l)) {
        if (s.is_new(l, p)) continue;
        if (f.sigma[l](static_cast<Eigen::Index>(s.position(l, p)), qc) != f.sigma[l - 1](static_cast<Eigen::Index>(s.position(l - 1, p)), qp)) return false;
      }
    }
  }
  return true;
}

struct AccForward {
  MatrixXd sigma_final;
  std::vector<MatrixXd> acc;  // acc[l] = W[1] ... W[l], acc[0] = I
};

inline AccForward forward_acc(const Synchronization& s, const WeightStack& w, StorageMeter* meter = nullptr) {
  check_shapes(s, w);
  AccForward f;
  f.acc.resize(s.depth());
  const auto n0 = static_cast<Eigen::Index>(s.layer(0).size());
  f.acc[0] = MatrixXd::Identity(n0, n0);
  detail::meter_acquire(meter, f.acc[0]);
  for (std::size_t l = 1; l < s.depth(); ++l) {
    f.acc[l].noalias() = f.acc[l - 1] * w[l];
    detail::meter_acquire(meter, f.acc[l]);
  }
  f.sigma_final.noalias() = f.acc.back().transpose() * f.acc.back();
  detail::meter_acquire(meter, f.sigma_final);
  return f;
}

namespace detail {
inline void check_seed(const Synchronization& s, const MatrixXd& seed) {
  if (s.depth() == 0) throw Error(ErrorCode::ShapeMismatch, "empty synchronization");
  const auto n = static_cast<Eigen::Index>(s.layer(s.depth() - 1).size());
  if (seed.rows() != n || seed.cols() != n) throw Error(ErrorCode::ShapeMismatch, "seed gradient has the wrong shape");
  const double scale = std::max(1.0, seed.cwiseAbs().maxCoeff());
  if ((seed - seed.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error(ErrorCode::AsymmetricSeed, "seed gradient is not symmetric");
}
}  // namespace detail

// Gradients for every layer (index 0 empty) given dErr/dSigma_final.
inline std::vector<MatrixXd> backward_cov(const Synchronization& s, const MaskSet& m, const WeightStack& w, const CovForward& f,
                                          const MatrixXd& seed, StorageMeter* meter = nullptr) {
  detail::check_seed(s, seed);
  std::vector<MatrixXd> grads(s.depth());
  MatrixXd g = 0.5 * (seed + seed.transpose());
  detail::meter_acquire(meter, g);
  for (std::size_t l = s.depth() - 1; l >= 1; --l) {
    grads[l] = 2.0 * m.trainable[l].cwiseProduct(f.lambda[l] * g);
    detail::meter_acquire(meter, grads[l]);
    if (l > 1) {
      MatrixXd next = w[l] * g * w[l].transpose();
      detail::meter_acquire(meter, next);
      g = std::move(next);
    }
  }
  return grads;
}

inline std::vector<MatrixXd> backward_acc(const Synchronization& s, const MaskSet& m, const WeightStack& w, const AccForward& f,
                                          const MatrixXd& seed, StorageMeter* meter = nullptr) {
  detail::check_seed(s, seed);
  std::vector<MatrixXd> grads(s.depth());
  MatrixXd omega = f.acc.back() * (0.5 * (seed + seed.transpose()));
  detail::meter_acquire(meter, omega);
  for (std::size_t l = s.depth() - 1; l >= 1; --l) {
    grads[l] = 2.0 * m.trainable[l].cwiseProduct(f.acc[l - 1].transpose() * omega);
    detail::meter_acquire(meter, grads[l]);
    if (l > 1) {
      MatrixXd next = omega * w[l].transpose();
      detail::meter_acquire(meter, next);
      omega = std::move(next);
    }
  }
  return grads;
}

}  // namespace sn2

#endif  // SN2_LAYERED_HPP
