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

#ifndef SN2_FIT_HPP
#define SN2_FIT_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sn2/error.hpp"
#include "sn2/gauss.hpp"
#include "sn2/graph.hpp"
#include "sn2/layered.hpp"
#include "sn2/model.hpp"
#include "sn2/optimizer.hpp"
#include "sn2/reduced.hpp"
#include "sn2/sync.hpp"

namespace sn2 {

enum class Loss { kl, bha };
enum class Method { covariance, accumulation, reduced };

inline std::string_view to_string(Loss l) { return l == Loss::kl ? "kl" : "bha"; }
inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::covariance: return "cov";
    case Method::accumulation: return "acc";
    case Method::reduced: return "reduced";
  }
  return "?";
}

// Brings a target onto the graph's visible order, with the jitter ladder
// applied if it is only numerically semidefinite.
inline MatrixXd prepare_target(const PmDag& g, const CovMatrix& target) {
  auto names = g.visible_names();
  auto sorted_labels = target.labels;
  auto sorted_names = names;
  std::sort(sorted_labels.begin(), sorted_labels.end());
  std::sort(sorted_names.begin(), sorted_names.end());
  if (sorted_labels != sorted_names) throw Error(ErrorCode::ShapeMismatch, "target labels must equal the visible nodes");
  MatrixXd t = restrict_cov(target, names).data;
  t = 0.5 * (t + t.transpose());
  SpdFactor f;
  try {
    f = spd_factor(t, true);
  } catch (const Error&) {
    throw Error(ErrorCode::TargetNotSPD, "target covariance is not positive definite");
  }
  t.diagonal().array() += f.jitter;
  return t;
}

// Loss, true divergences and per-edge gradient for one weight vector.
class Objective {
 public:
  struct Eval {
    double loss = 0;
    double kl_model_target = 0;  // KL(model || target)
    double kl_target_model = 0;  // KL(target || model)
    MatrixXd sigma;              // visible block of the model covariance
    std::vector<double> grad;
  };

  // `target` must already be in the graph's visible order.
  Objective(const Synchronization& s, MatrixXd target, Loss loss, Method method)
      : sync_(s), masks_(build_masks(s)), slots_(edge_slots(s)), target_(std::move(target)), loss_(loss), method_(method) {
    const auto& last = sync_.layer(sync_.depth() - 1);
    for (std::size_t k = 0; k < last.size(); ++k)
      if (sync_.graph().is_visible(last[k])) vis_pos_.push_back(static_cast<Eigen::Index>(k));
    if (static_cast<Eigen::Index>(vis_pos_.size()) != target_.rows())
      throw Error(ErrorCode::ShapeMismatch, "target dimension differs from the visible count");
    target_factor_ = sn2::target_factor(target_);
    target_inv_ = detail::inverse_from(target_factor_);
    stack_.resize(sync_.depth());
    for (std::size_t l = 1; l < sync_.depth(); ++l) stack_[l] = masks_.constant[l];
  }

  const Synchronization& sync() const { return sync_; }
  const MaskSet& masks() const { return masks_; }
  std::size_t parameter_count() const { return slots_.size(); }

  const WeightStack& load(std::span<const double> w) {
    for (std::size_t k = 0; k < slots_.size(); ++k) stack_[slots_[k].layer](slots_[k].row, slots_[k].col) = w[k];
    return stack_;
  }

  MatrixXd forward(std::span<const double> w) {
    switch (method_) {
      case Method::covariance: return forward_cov(sync_, load(w)).sigma_final;
      case Method::accumulation: return forward_acc(sync_, load(w)).sigma_final;
      case Method::reduced: return forward_reduced(sync_, w).sigma_final;
    }
    return {};
  }

  // Throws SingularModel when the model covariance is not invertible.
  Eval evaluate(std::span<const double> w, bool with_grad = true) {
    if (w.size() != slots_.size()) throw Error(ErrorCode::ShapeMismatch, "wrong number of edge weights");
    Eval e;
    MatrixXd full;
    CovForward fc;
    AccForward fa;
    ReducedState fr;
    switch (method_) {
      case Method::covariance:
        fc = forward_cov(sync_, load(w));
        full = fc.sigma_final;
        break;
      case Method::accumulation:
        fa = forward_acc(sync_, load(w));
        full = fa.sigma_final;
        break;
      case Method::reduced:
        fr = forward_reduced(sync_, w);
        full = fr.sigma_final;
        break;
    }
    const auto nv = static_cast<Eigen::Index>(vis_pos_.size());
    e.sigma.resize(nv, nv);
    for (Eigen::Index i = 0; i < nv; ++i)
      for (Eigen::Index j = 0; j < nv; ++j) e.sigma(i, j) = full(vis_pos_[static_cast<std::size_t>(i)], vis_pos_[static_cast<std::size_t>(j)]);
    e.sigma = 0.5 * (e.sigma + e.sigma.transpose());

    auto fs = model_factor(e.sigma);
    MatrixXd sigma_inv = detail::inverse_from(fs);
    const double n = static_cast<double>(nv);
    const double tr_t_inv_sigma = target_inv_.cwiseProduct(e.sigma).sum();
    e.kl_model_target = std::max(0.0, 0.5 * (tr_t_inv_sigma - n + target_factor_.log_det - fs.log_det));
    e.kl_target_model = std::max(0.0, 0.5 * (sigma_inv.cwiseProduct(target_).sum() - n + fs.log_det - target_factor_.log_det));

    MatrixXd gv;
    if (loss_ == Loss::kl) {
      e.loss = tr_t_inv_sigma - fs.log_det;
      if (with_grad) gv = target_inv_ - sigma_inv;
    } else {
      auto fsum = detail::try_factor(e.sigma + target_);
      if (!fsum) throw Error(ErrorCode::SingularSum, "sigma + target is not invertible");
      e.loss = fsum->log_det - n * std::log(2.0) - 0.5 * fs.log_det;
      if (with_grad) gv = detail::inverse_from(*fsum) - 0.5 * sigma_inv;
    }
    if (!with_grad) return e;

    MatrixXd seed = MatrixXd::Zero(full.rows(), full.cols());
    for (Eigen::Index i = 0; i < nv; ++i)
      for (Eigen::Index j = 0; j < nv; ++j) seed(vis_pos_[static_cast<std::size_t>(i)], vis_pos_[static_cast<std::size_t>(j)]) = gv(i, j);
    switch (method_) {
      case Method::covariance: e.grad = gather_edges(sync_, backward_cov(sync_, masks_, stack_, fc, seed)); break;
      case Method::accumulation: e.grad = gather_edges(sync_, backward_acc(sync_, masks_, stack_, fa, seed)); break;
      case Method::reduced: e.grad = backward_reduced(sync_, fr, seed); break;
    }
    return e;
  }

 private:
  Synchronization sync_;
  MaskSet masks_;
  std::vector<EdgeSlot> slots_;
  MatrixXd target_;
  SpdFactor target_factor_;
  MatrixXd target_inv_;
  Loss loss_;
  Method method_;
  std::vector<Eigen::Index> vis_pos_;
  WeightStack stack_;
};

struct FitConfig {
  Loss loss = Loss::kl;
  Method method = Method::covariance;
  OptimizerConfig optimizer{};
  long max_iters = 12000;
  double min_improvement = 1e-12;
  double kl_threshold = 1e-5;
  std::uint64_t seed = 0;
  int restarts = 10;
  bool early_stop = false;  // stop restarting at the first converged run
  bool record_trace = true;
  SyncPlan plan = SyncPlan::greedy_max();
};

enum class StopReason { min_improvement, kl_threshold, max_iters, singular_model };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::min_improvement: return "min_improvement";
    case StopReason::kl_threshold: return "kl_threshold";
    case StopReason::max_iters: return "max_iters";
    case StopReason::singular_model: return "singular_model";
  }
  return "?";
}

struct FitReport {
  std::vector<double> loss_trace;
  std::vector<double> kl_trace;
  double kl_model_target = std::numeric_limits<double>::infinity();
  double kl_target_model = std::numeric_limits<double>::infinity();
  bool converged = false;
  StopReason stop = StopReason::max_iters;
  long iterations = 0;
  std::uint64_t seed = 0;  // initialization seed of the reported run
  int restart = 0;
  int restarts_run = 0;
  double wall_seconds = 0;
};

struct FitResult {
  StructuralParams params;
  std::vector<double> edge_weights;
  CovMatrix model_cov;  // visible block
  FitReport report;
};

// One optimization run from the initialization drawn with `run_seed`.
inline FitResult fit_run(Objective& obj, const PmDag& g, const FitConfig& cfg, std::uint64_t run_seed) {
  const auto start = std::chrono::steady_clock::now();
  FitResult res;
  res.report.seed = run_seed;
  std::vector<double> w = init_edge_weights(obj.sync(), run_seed);
  OptimizerState state;
  double prev = std::numeric_limits<double>::quiet_NaN();
  Objective::Eval e;
  bool have_eval = false;
  for (long it = 0; it < cfg.max_iters; ++it) {
    try {
      e = obj.evaluate(w, true);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::SingularModel && err.code() != ErrorCode::SingularSum) throw;
      res.report.stop = StopReason::singular_model;
      res.report.iterations = it;
      have_eval = false;
      break;
    }
    have_eval = true;
    res.report.iterations = it + 1;
    if (cfg.record_trace) {
      res.report.loss_trace.push_back(e.loss);
      res.report.kl_trace.push_back(e.kl_model_target);
    }
    if (e.kl_model_target <= cfg.kl_threshold) {
      res.report.stop = StopReason::kl_threshold;
      break;
    }
    if (!std::isnan(prev) && std::abs(e.loss - prev) <= cfg.min_improvement) {
      res.report.stop = StopReason::min_improvement;
      break;
    }
    prev = e.loss;
    if (it + 1 == cfg.max_iters) break;
    optimize_step(w, e.grad, state, cfg.optimizer);
  }
  if (have_eval) {
    res.report.kl_model_target = e.kl_model_target;
    res.report.kl_target_model = e.kl_target_model;
    res.report.converged = e.kl_model_target <= cfg.kl_threshold;
    res.model_cov = {g.visible_names(), e.sigma};
  } else {
    res.model_cov = {g.visible_names(), obj.forward(w)};
  }
  res.edge_weights = w;
  res.params = StructuralParams::from_edges(g, w);
  res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline std::uint64_t restart_seed(std::uint64_t master, int restart) {
  return derive_seed(master, 0x7265737461727473ULL, static_cast<std::uint64_t>(restart));
}

// Runs `restarts` independent initializations and keeps the lowest final KL.
inline FitResult fit(const PmDag& g, const CovMatrix& target, const FitConfig& cfg) {
  if (cfg.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
  if (cfg.optimizer.lr <= 0) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (cfg.min_improvement < 0) throw Error(ErrorCode::InvalidArgument, "min_improvement must be non-negative");
  if (cfg.restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be at least 1");
  if (g.visibles().empty()) throw Error(ErrorCode::InvalidArgument, "graph has no visible nodes");
  const auto start = std::chrono::steady_clock::now();
  MatrixXd t = prepare_target(g, target);
  Objective obj(synchronize(g, cfg.plan), std::move(t), cfg.loss, cfg.method);
  FitResult best;
  bool have = false;
  int ran = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    auto res = fit_run(obj, g, cfg, restart_seed(cfg.seed, r));
    res.report.restart = r;
    ++ran;
    if (!have || res.report.kl_model_target < best.report.kl_model_target) {
      best = std::move(res);
      have = true;
    }
    if (cfg.early_stop && best.report.converged) break;
  }
  best.report.restarts_run = ran;
  best.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return best;
}

// Replays a single run with a known initialization seed.
inline FitResult fit_with_seed(const PmDag& g, const CovMatrix& target, const FitConfig& cfg, std::uint64_t run_seed) {
  MatrixXd t = prepare_target(g, target);
  Objective obj(synchronize(g, cfg.plan), std::move(t), cfg.loss, cfg.method);
  auto res = fit_run(obj, g, cfg, run_seed);
  res.report.restarts_run = 1;
  return res;
}

}  // namespace sn2

#endif  // SN2_FIT_HPP
