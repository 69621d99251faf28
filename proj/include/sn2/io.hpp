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

// JSON, CSV and DOT serialization.

#ifndef SN2_IO_HPP
#define SN2_IO_HPP

#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string>

#include "sn2/error.hpp"
#include "sn2/fit.hpp"
#include "sn2/graph.hpp"
#include "sn2/harness.hpp"
#include "sn2/identify.hpp"

namespace sn2 {

using Json = nlohmann::json;

inline Json graph_to_json(const PmDag& g) {
  Json nodes = Json::array();
  for (const auto& n : g.nodes()) nodes.push_back({{"name", n.name}, {"role", std::string(to_string(n.role))}});
  Json edges = Json::array();
  for (const auto& [p, c] : g.named_edges()) edges.push_back({p, c});
  return {{"nodes", nodes}, {"edges", edges}};
}

inline PmDag graph_from_json(const Json& j, bool strict = true) {
  std::vector<NodeId> nodes;
  std::vector<NamedEdge> edges;
  try {
    for (const auto& n : j.at("nodes")) {
      auto role = n.at("role").get<std::string>();
      if (role != "visible" && role != "latent") throw Error(ErrorCode::ParseError, "unknown role '" + role + "'");
      nodes.push_back({n.at("name").get<std::string>(), role == "visible" ? Role::visible : Role::latent});
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::ParseError, "edges must be [parent, child] pairs");
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::ParseError, ex.what());
  }
  return validate(std::move(nodes), edges, strict);
}

inline PmDag read_graph(const std::string& path, bool strict = true) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::ParseError, ex.what());
  }
  return graph_from_json(j, strict);
}

inline std::string graph_to_dot(const PmDag& g) {
  std::ostringstream os;
  os << "digraph G {\n";
  for (const auto& n : g.nodes())
    os << "  \"" << n.name << "\"" << (n.role == Role::latent ? " [style=dashed]" : "") << ";\n";
  for (const auto& [p, c] : g.named_edges()) os << "  \"" << p << "\" -> \"" << c << "\";\n";
  os << "}\n";
  return os.str();
}

inline Json params_to_json(const PmDag& g, const StructuralParams& params) {
  Json w = Json::object();
  for (std::size_t c = 0; c < g.size(); ++c) {
    auto ps = g.parents(c);
    for (std::size_t k = 0; k < ps.size(); ++k) w[g.name(ps[k]) + "->" + g.name(c)] = params.weights[c][k];
  }
  return w;
}

inline Json fit_to_json(const PmDag& g, const FitResult& r) {
  return {
      {"weights", params_to_json(g, r.params)},
      {"kl_model_target", r.report.kl_model_target},
      {"kl_target_model", r.report.kl_target_model},
      {"converged", r.report.converged},
      {"stop_reason", std::string(to_string(r.report.stop))},
      {"seed", r.report.seed},
      {"iterations", r.report.iterations},
      {"restart", r.report.restart},
      {"restarts_run", r.report.restarts_run},
      {"wall_seconds", r.report.wall_seconds},
  };
}

inline void write_trace_csv(std::ostream& out, const FitReport& r) {
  out << "iteration,loss,kl\n";
  out.precision(17);
  for (std::size_t i = 0; i < r.loss_trace.size(); ++i) out << i << "," << r.loss_trace[i] << "," << r.kl_trace[i] << "\n";
}

inline Json verdict_to_json(const PmDag& g, const IdentVerdict& v, const IdentifyConfig& cfg) {
  Json runs = Json::array();
  for (std::size_t i = 0; i < v.runs.size(); ++i) {
    const auto& r = v.runs[i];
    runs.push_back({{"index", i},
                    {"seed", r.seed},
                    {"attempts", r.attempts},
                    {"kl_model_target", r.fit.report.kl_model_target},
                    {"divergence", r.divergence},
                    {"effect_mean", std::vector<double>(r.effect.mean.data(), r.effect.mean.data() + r.effect.mean.size())}});
  }
  Json out = {{"verdict", std::string(to_string(v.outcome))},
              {"max_divergence", v.max_divergence},
              {"runs", runs},
              {"fits_used", v.fits_used},
              {"budget", {{"iterations", cfg.iterations}, {"retry_cap", cfg.retry_cap}, {"max_iters", cfg.fit.max_iters}}},
              {"tol_id", cfg.tol_id},
              {"tol_fit", cfg.tol_fit}};
  if (v.outcome == Verdict::not_identifiable) {
    const auto& a = v.runs[v.witness_a];
    const auto& b = v.runs[v.witness_b];
    out["witness"] = {{"seeds", {a.seed, b.seed}},
                      {"divergence", v.max_divergence},
                      {"params", {params_to_json(g, a.fit.params), params_to_json(g, b.fit.params)}}};
  }
  return out;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "v,l_star,e_star,method,phase,mean_seconds\n";
  for (const auto& r : rows)
    out << r.v << "," << r.l_star << "," << r.e_star << "," << to_string(r.method) << "," << r.phase << "," << r.mean_seconds << "\n";
}

}  // namespace sn2

#endif  // SN2_IO_HPP
