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

// Command-line front end. Exit codes: 0 success, 1 error, 2 target not
// inducible, 3 effect not identifiable.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "sn2/io.hpp"
#include "sn2/sn2.hpp"

namespace {

using sn2::Json;

constexpr int kError = 1;
constexpr int kNotInducible = 2;
constexpr int kNotIdentifiable = 3;

struct FitFlags {
  std::string loss = "kl";
  std::string method = "cov";
  std::string optimizer = "adamax";
  double lr = 1e-3;
  int epochs = 12000;
  double eps = 1e-12;
  double kl_threshold = 1e-5;
  int restarts = 10;
  bool early_stop = false;
  std::uint64_t seed = 0;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--loss", f.loss, "kl or bha")->check(CLI::IsMember({"kl", "bha"}));
  cmd->add_option("--method", f.method, "cov, acc or reduced")->check(CLI::IsMember({"cov", "acc", "reduced"}));
  cmd->add_option("--optimizer", f.optimizer, "sgd or adamax")->check(CLI::IsMember({"sgd", "adamax"}));
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--epochs", f.epochs, "iteration cap per run");
  cmd->add_option("--eps", f.eps, "stop when the loss changes by at most this");
  cmd->add_option("--kl-threshold", f.kl_threshold, "stop when KL(model||target) falls to this");
  cmd->add_option("--restarts", f.restarts, "independent runs; the best is kept");
  cmd->add_flag("--early-stop", f.early_stop, "stop restarting at the first converged run");
  cmd->add_option("--seed", f.seed, "master seed")->envname("SN2_SEED");
}

sn2::FitConfig to_config(const FitFlags& f) {
  sn2::FitConfig c;
  c.loss = f.loss == "kl" ? sn2::Loss::kl : sn2::Loss::bha;
  c.method = f.method == "cov" ? sn2::Method::covariance : f.method == "acc" ? sn2::Method::accumulation : sn2::Method::reduced;
  c.optimizer.kind = f.optimizer == "sgd" ? sn2::OptimizerKind::sgd : sn2::OptimizerKind::adamax;
  c.optimizer.lr = f.lr;
  c.max_iters = f.epochs;
  c.min_improvement = f.eps;
  c.kl_threshold = f.kl_threshold;
  c.restarts = f.restarts;
  c.early_stop = f.early_stop;
  c.seed = f.seed;
  return c;
}

// Writes to `path`, or stdout when empty or "-".
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw sn2::Error(sn2::ErrorCode::InvalidArgument, "cannot write " + path);
  write(out);
}

std::pair<std::string, double> parse_assignment(const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw sn2::Error(sn2::ErrorCode::ParseError, "expected NAME=VALUE, got '" + s + "'");
  try {
    std::size_t used = 0;
    double v = std::stod(s.substr(eq + 1), &used);
    if (used != s.size() - eq - 1) throw std::invalid_argument(s);
    return {s.substr(0, eq), v};
  } catch (const std::logic_error&) {
    throw sn2::Error(sn2::ErrorCode::ParseError, "bad intervention value in '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit linear-Gaussian latent-variable DAGs and test causal identifiability"};
  app.require_subcommand(1);

  std::string graph_path, cov_path, out_path;
  bool lenient = false, as_dot = false;

  auto* validate_cmd = app.add_subcommand("validate", "Check a graph file and print a summary");
  validate_cmd->add_option("graph", graph_path, "graph JSON")->required();
  validate_cmd->add_flag("--lenient", lenient, "allow latent non-roots");

  auto* sync_cmd = app.add_subcommand("sync", "Print the layered form of a graph");
  sync_cmd->add_option("graph", graph_path, "graph JSON")->required();
  sync_cmd->add_flag("--dot", as_dot, "emit Graphviz instead of text");

  sn2::GenSpec gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random graph");
  gen_cmd->add_option("--v", gen.v, "visible nodes")->required();
  gen_cmd->add_option("--lstar", gen.l_star, "latent abundance in [0,1)");
  gen_cmd->add_option("--estar", gen.e_star, "edge density in [0,1]");
  gen_cmd->add_option("--seed", gen.seed, "seed")->envname("SN2_SEED");
  gen_cmd->add_option("-o,--out", out_path, "output file");

  std::string canon_name;
  auto* canon_cmd = app.add_subcommand("canon", "Print a named textbook graph");
  canon_cmd->add_option("name", canon_name, "graph name")->required()->check(CLI::IsMember(sn2::canonical_names()));
  canon_cmd->add_flag("--dot", as_dot, "emit Graphviz instead of JSON");
  canon_cmd->add_option("-o,--out", out_path, "output file");

  std::uint64_t truth_seed = 0;
  std::size_t samples = 0;
  auto* truth_cmd = app.add_subcommand("truth", "Draw random weights and print the visible covariance");
  truth_cmd->add_option("graph", graph_path, "graph JSON")->required();
  truth_cmd->add_option("--seed", truth_seed, "seed")->envname("SN2_SEED");
  truth_cmd->add_option("--samples", samples, "use a sample covariance of this many draws");
  truth_cmd->add_option("-o,--out", out_path, "output CSV");
  std::string params_out;
  truth_cmd->add_option("--params", params_out, "also write the drawn weights as JSON");

  FitFlags fit_flags;
  std::string trace_path;
  auto* fit_cmd = app.add_subcommand("fit", "Fit edge weights to a target covariance");
  fit_cmd->add_option("graph", graph_path, "graph JSON")->required();
  fit_cmd->add_option("cov", cov_path, "target covariance CSV")->required();
  add_fit_flags(fit_cmd, fit_flags);
  fit_cmd->add_option("--trace", trace_path, "write the loss trace CSV here");
  fit_cmd->add_option("-o,--out", out_path, "result JSON");

  FitFlags id_flags;
  id_flags.restarts = 1;
  std::vector<std::string> interventions, effects;
  sn2::IdentifyConfig id_cfg;
  auto* id_cmd = app.add_subcommand("identify", "Test whether an interventional distribution is identifiable");
  id_cmd->add_option("graph", graph_path, "graph JSON")->required();
  id_cmd->add_option("cov", cov_path, "target covariance CSV")->required();
  id_cmd->add_option("--do", interventions, "intervention NAME=VALUE")->required();
  id_cmd->add_option("--effect", effects, "effect node")->required();
  id_cmd->add_option("--iters", id_cfg.iterations, "fits compared against the reference");
  id_cmd->add_option("--tol-id", id_cfg.tol_id, "divergence above which the effect is not identifiable");
  id_cmd->add_option("--tol-fit", id_cfg.tol_fit, "KL below which a fit counts as converged");
  id_cmd->add_option("--retry-cap", id_cfg.retry_cap, "attempts per slot");
  id_cmd->add_flag("--all-pairs", id_cfg.all_pairs, "compare every pair of fits");
  add_fit_flags(id_cmd, id_flags);
  id_cmd->add_option("-o,--out", out_path, "verdict JSON");

  std::vector<std::size_t> bench_v = {16, 32};
  std::vector<double> bench_l = {0.0, 0.5}, bench_e = {0.0, 0.5, 1.0};
  std::vector<std::string> bench_methods = {"cov", "acc", "reduced"};
  int reps = 3;
  std::uint64_t bench_seed = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Time forward and backward passes on random graphs");
  bench_cmd->add_option("--v", bench_v, "visible counts")->delimiter(',');
  bench_cmd->add_option("--lstar", bench_l, "latent abundances")->delimiter(',');
  bench_cmd->add_option("--estar", bench_e, "edge densities")->delimiter(',');
  bench_cmd->add_option("--methods", bench_methods, "methods")->delimiter(',')->check(CLI::IsMember({"cov", "acc", "reduced"}));
  bench_cmd->add_option("--reps", reps, "repetitions per grid point");
  bench_cmd->add_option("--seed", bench_seed, "seed")->envname("SN2_SEED");
  bench_cmd->add_option("-o,--out", out_path, "output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kError;
  }

  try {
    if (*validate_cmd) {
      auto g = sn2::read_graph(graph_path, !lenient);
      Json j = {{"nodes", g.size()},
                {"visible", g.visibles().size()},
                {"latent", g.latents().size()},
                {"edges", g.edge_count()},
                {"strict", g.is_strict()},
                {"mdag", sn2::is_mdag(g)}};
      std::cout << j.dump(2) << "\n";
    } else if (*sync_cmd) {
      auto s = sn2::synchronize(sn2::read_graph(graph_path));
      std::cout << (as_dot ? sn2::to_dot(s) : sn2::dump(s, sn2::build_masks(s)));
    } else if (*gen_cmd) {
      auto out = sn2::random_pmdag(gen);
      if (out.sizes.clamped)
        std::cerr << "warning: requested " << out.sizes.requested_edges << " edges, placed " << out.sizes.edges << "\n";
      emit(out_path, [&](std::ostream& os) { os << sn2::graph_to_json(out.graph).dump(2) << "\n"; });
    } else if (*canon_cmd) {
      auto g = sn2::canonical(canon_name);
      emit(out_path, [&](std::ostream& os) { os << (as_dot ? sn2::graph_to_dot(g) : sn2::graph_to_json(g).dump(2) + "\n"); });
    } else if (*truth_cmd) {
      auto g = sn2::read_graph(graph_path);
      auto t = sn2::ground_truth(g, truth_seed, samples ? std::optional<std::size_t>(samples) : std::nullopt);
      emit(out_path, [&](std::ostream& os) { sn2::write_cov_csv(os, t.cov); });
      if (!params_out.empty()) emit(params_out, [&](std::ostream& os) { os << sn2::params_to_json(g, t.params).dump(2) << "\n"; });
    } else if (*fit_cmd) {
      auto g = sn2::read_graph(graph_path);
      auto cfg = to_config(fit_flags);
      cfg.record_trace = !trace_path.empty();
      auto r = sn2::fit(g, sn2::read_cov_csv(cov_path), cfg);
      emit(out_path, [&](std::ostream& os) { os << sn2::fit_to_json(g, r).dump(2) << "\n"; });
      if (!trace_path.empty()) emit(trace_path, [&](std::ostream& os) { sn2::write_trace_csv(os, r.report); });
    } else if (*id_cmd) {
      auto g = sn2::read_graph(graph_path);
      sn2::InterventionQuery q;
      for (const auto& s : interventions) {
        auto [name, value] = parse_assignment(s);
        q.targets.push_back(name);
        q.values.push_back(value);
      }
      q.effects = effects;
      id_cfg.fit = to_config(id_flags);
      id_cfg.fit.record_trace = false;
      id_cfg.seed = id_flags.seed;
      auto v = sn2::identify(g, sn2::read_cov_csv(cov_path), q, id_cfg);
      emit(out_path, [&](std::ostream& os) { os << sn2::verdict_to_json(g, v, id_cfg).dump(2) << "\n"; });
      if (v.outcome == sn2::Verdict::not_inducible) return kNotInducible;
      if (v.outcome == sn2::Verdict::not_identifiable) return kNotIdentifiable;
    } else if (*bench_cmd) {
      std::vector<sn2::Method> methods;
      for (const auto& m : bench_methods)
        methods.push_back(m == "cov" ? sn2::Method::covariance : m == "acc" ? sn2::Method::accumulation : sn2::Method::reduced);
      auto rows = sn2::bench(bench_v, bench_l, bench_e, methods, reps, bench_seed);
      emit(out_path, [&](std::ostream& os) { sn2::write_bench_csv(os, rows); });
    }
  } catch (const sn2::Error& e) {
    std::cerr << "error: " << sn2::to_string(e.code()) << ": " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return 0;
}
