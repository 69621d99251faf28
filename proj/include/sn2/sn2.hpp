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

#ifndef SN2_SN2_HPP
#define SN2_SN2_HPP

#include "sn2/error.hpp"
#include "sn2/fit.hpp"
#include "sn2/gauss.hpp"
#include "sn2/graph.hpp"
#include "sn2/harness.hpp"
#include "sn2/identify.hpp"
#include "sn2/layered.hpp"
#include "sn2/model.hpp"
#include "sn2/optimizer.hpp"
#include "sn2/reduced.hpp"
#include "sn2/sync.hpp"

#endif  // SN2_SN2_HPP
