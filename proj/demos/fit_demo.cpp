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

// Fits the back-door graph to the covariance of a random ground truth and
// prints the recovered weights next to the true ones.

#include <cstdio>

#include "sn2/sn2.hpp"

int main() {
  auto g = sn2::canonical("backdoor");
  auto truth = sn2::ground_truth(g, 7);

  sn2::FitConfig cfg;
  cfg.optimizer.lr = 1e-2;
  cfg.early_stop = true;
  auto r = sn2::fit(g, truth.cov, cfg);

  std::printf("%-10s %10s %10s\n", "edge", "true", "fitted");
  for (auto [p, c] : g.edges())
    std::printf("%-10s %10.4f %10.4f\n", (g.name(p) + "->" + g.name(c)).c_str(), truth.params.weight(g, p, c), r.params.weight(g, p, c));
  std::printf("KL(model||target) = %.3e after %d iterations (%s)\n", r.report.kl_model_target, r.report.iterations,
              std::string(sn2::to_string(r.report.stop)).c_str());
  return r.report.converged ? 0 : 1;
}
