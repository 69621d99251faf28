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

#ifndef SN2_ERROR_HPP
#define SN2_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sn2 {

enum class ErrorCode {
  CycleDetected,
  VisibleRoot,
  NonRootLatent,
  UnknownNode,
  DuplicateNode,
  NotLatent,
  RootTarget,
  NotLatentRoot,
  NotVisible,
  NotPmDag,
  InvalidCustomPlan,
  TooFewRows,
  SingularQ,
  SingularTarget,
  SingularModel,
  SingularSum,
  NotPositiveDefinite,
  ShapeMismatch,
  AsymmetricSeed,
  NonFiniteGradient,
  TargetNotSPD,
  NegativeVariance,
  FitBudgetExhausted,
  InfeasibleBudget,
  UnknownName,
  InvalidArgument,
  ParseError,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::VisibleRoot: return "VisibleRoot";
    case ErrorCode::NonRootLatent: return "NonRootLatent";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::NotLatent: return "NotLatent";
    case ErrorCode::RootTarget: return "RootTarget";
    case ErrorCode::NotLatentRoot: return "NotLatentRoot";
    case ErrorCode::NotVisible: return "NotVisible";
    case ErrorCode::NotPmDag: return "NotPmDag";
    case ErrorCode::InvalidCustomPlan: return "InvalidCustomPlan";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingularQ: return "SingularQ";
    case ErrorCode::SingularTarget: return "SingularTarget";
    case ErrorCode::SingularModel: return "SingularModel";
    case ErrorCode::SingularSum: return "SingularSum";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::AsymmetricSeed: return "AsymmetricSeed";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::TargetNotSPD: return "TargetNotSPD";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::FitBudgetExhausted: return "FitBudgetExhausted";
    case ErrorCode::InfeasibleBudget: return "InfeasibleBudget";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library. `detail` carries structured context,
// e.g. the node path of a detected cycle.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::vector<std::string> detail = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::vector<std::string> detail_;
};

}  // namespace sn2

#endif  // SN2_ERROR_HPP
