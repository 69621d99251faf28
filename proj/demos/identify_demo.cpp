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

#include <cstdio>

#include "sn2/sn2.hpp"

// Runs the identifiability test on every textbook graph for P(Y | do(X=0)).
int main() {
  sn2::IdentifyConfig cfg;
  cfg.fit.restarts = 1;
  cfg.seed = 1;
  for (const auto& name : sn2::canonical_names()) {
    auto g = sn2::canonical(name);
    auto truth = sn2::ground_truth(g, 3);
    auto v = sn2::identify(g, truth.cov, {{"X"}, {0.0}, {"Y"}}, cfg);
    std::printf("%-13s %-21s max divergence %.3e  (%d fits)\n", name.c_str(), std::string(sn2::to_string(v.outcome)).c_str(),
                v.max_divergence, v.fits_used);
  }
  return 0;
}
