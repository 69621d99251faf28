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

#ifndef SN2_OPTIMIZER_HPP
#define SN2_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sn2/error.hpp"

namespace sn2 {

enum class OptimizerKind { sgd, adamax };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adamax;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> u;
  long step = 0;
};

// Updates `w` in place. Only free parameters are ever passed in, so constant
// weights never move.
inline void optimize_step(std::span<double> w, std::span<const double> grad, OptimizerState& state, const OptimizerConfig& cfg) {
  if (w.size() != grad.size()) throw Error(ErrorCode::ShapeMismatch, "gradient and weights differ in length");
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i])) throw Error(ErrorCode::NonFiniteGradient, "gradient entry " + std::to_string(i) + " is not finite");
  ++state.step;
  if (cfg.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.lr * grad[i];
    return;
  }
  if (state.m.size() != w.size()) {
    state.m.assign(w.size(), 0.0);
    state.u.assign(w.size(), 0.0);
  }
  const double step_size = cfg.lr / (1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
  for (std::size_t i = 0; i < w.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.u[i] = std::max(cfg.beta2 * state.u[i], std::abs(grad[i]) + cfg.eps);
    w[i] -= step_size * state.m[i] / state.u[i];
  }
}

}  // namespace sn2

#endif  // SN2_OPTIMIZER_HPP
