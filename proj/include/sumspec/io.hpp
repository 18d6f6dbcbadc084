#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sumspec/error.hpp"
#include "sumspec/evaluation.hpp"
#include "sumspec/graph.hpp"
#include "sumspec/model.hpp"
#include "sumspec/pipeline.hpp"

namespace sumspec {

// Edge-list file: one edge per line, two whitespace-separated 0-based
// vertex ids; '#' lines and blank lines are ignored.
inline SparseSymGraph read_edge_list(const std::filesystem::path& path, int n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list: " + path.string());
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    long long u, v;
    if (!(ss >> u >> v))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected two vertex ids");
    std::string trailing;
    if (ss >> trailing)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": trailing tokens");
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  try {
    return from_edge_list(n, edges);
  } catch (Error& e) {
    e.set_stage(path.string());
    throw;
  }
}

inline void write_edge_list(const std::filesystem::path& path, const SparseSymGraph& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list: " + path.string());
  out << "# n=" << g.size() << "\n";
  for (const auto& e : g.entries())
    for (int copy = 0; copy < e.w; ++copy) out << e.i << " " << e.j << "\n";
}

// Layer-stack manifest: {"n": int, "layers": [path, ...]}. Relative layer
// paths resolve against the manifest's directory.
inline LayerStack read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("manifest " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("layers"))
    throw ConfigError("manifest must be an object with \"n\" and \"layers\"");
  int n = j.at("n").get<int>();
  if (n < 1) throw ConfigError("manifest n must be positive");
  if (!j.at("layers").is_array() || j.at("layers").empty())
    throw ConfigError("manifest layers must be a nonempty array of paths");
  std::vector<SparseSymGraph> layers;
  for (const auto& entry : j.at("layers")) {
    std::filesystem::path lp = entry.get<std::string>();
    if (lp.is_relative()) lp = path.parent_path() / lp;
    layers.push_back(read_edge_list(lp, n));
  }
  return LayerStack(std::move(layers));
}

// Model parameters: {"k": int, "pi": [...], "b_stack": [[[...]]],
// "psi": null | [...]}.
inline nlohmann::json model_params_to_json(const ModelParams& p) {
  nlohmann::json j;
  j["k"] = p.k;
  j["pi"] = std::vector<double>(p.pi.data(), p.pi.data() + p.pi.size());
  nlohmann::json stack = nlohmann::json::array();
  for (const auto& b : p.b_stack) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < b.cols(); ++c) row.push_back(b(r, c));
      rows.push_back(row);
    }
    stack.push_back(rows);
  }
  j["b_stack"] = stack;
  if (p.psi)
    j["psi"] = std::vector<double>(p.psi->data(), p.psi->data() + p.psi->size());
  else
    j["psi"] = nullptr;
  return j;
}

inline ModelParams model_params_from_json(const nlohmann::json& j) {
  ModelParams p;
  try {
    p.k = j.at("k").get<int>();
    auto pi = j.at("pi").get<std::vector<double>>();
    p.pi = Eigen::Map<Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
    for (const auto& bj : j.at("b_stack")) {
      auto rows = bj.get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd b(rows.size(), rows.empty() ? 0 : rows.front().size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw ConfigError("connectivity matrix must be square");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      p.b_stack.push_back(std::move(b));
    }
    if (j.contains("psi") && !j.at("psi").is_null()) {
      auto psi = j.at("psi").get<std::vector<double>>();
      p.psi = Eigen::Map<Eigen::VectorXd>(psi.data(), static_cast<Eigen::Index>(psi.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model parameters: ") + e.what());
  }
  try {
    p.validate();  // psi length is checked against n at sampling time
  } catch (Error& e) {
    e.set_stage("model parameters");
    throw;
  }
  return p;
}

inline nlohmann::json run_report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["algorithm"] = r.algorithm;
  j["n"] = r.n;
  j["k"] = r.k;
  j["t"] = r.t;
  j["n_prime"] = r.n_prime;
  if (r.n_dprime >= 0) j["n_dprime"] = r.n_dprime;
  j["threshold"] = r.threshold;
  j["dbar"] = r.dbar;
  j["eigenvalues"] = r.eigenvalues;
  j["boundary_gap"] = r.boundary_gap;
  j["objective"] = r.objective;
  j["repair_events"] = r.repair_events;
  return j;
}

inline nlohmann::json eval_report_to_json(const EvalReport& e) {
  nlohmann::json j;
  j["overall"] = e.overall;
  j["per_community"] =
      std::vector<double>(e.per_community.data(), e.per_community.data() + e.per_community.size());
  j["permutation"] = e.permutation;
  return j;
}

inline nlohmann::json diagnostics_to_json(const BoundDiagnostics& d) {
  nlohmann::json j;
  j["alpha"] = d.alpha;
  j["lambda"] = d.lambda;
  j["gamma_n"] = d.gamma;
  j["spectral_dev"] = d.spectral_dev;
  j["tau"] = std::vector<double>(d.tau.data(), d.tau.data() + d.tau.size());
  j["n_prime"] = d.n_prime;
  j["n_prime_min"] = d.n_prime_min;
  return j;
}

inline void write_labels(const std::filesystem::path& path, const MembershipMatrix& z) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write labels: " + path.string());
  for (int label : z.labels) out << label << "\n";
}

}  // namespace sumspec
