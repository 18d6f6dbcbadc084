// Experiment driver: ingest real layer stacks or generate synthetic ones,
// run either clustering algorithm over a (model x n x T x seed) grid, and
// emit per-run JSON reports plus a plot-ready aggregate CSV.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sumspec/io.hpp"
#include "sumspec/sumspec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCsvHeader =
    "algorithm,n,t,seed,status,stage,error_overall,n_prime,n_dprime,threshold,dbar,objective,"
    "spectral_dev,gamma_n,alpha,lambda,tau_sum,repair_events";

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<int> parse_int_axis(const json& j, const char* name) {
  std::vector<int> out;
  if (j.is_number_integer()) {
    out.push_back(j.get<int>());
  } else if (j.is_array()) {
    for (const auto& e : j) out.push_back(e.get<int>());
  } else {
    throw sumspec::ConfigError(std::string(name) + " must be an integer or integer array");
  }
  if (out.empty()) throw sumspec::ConfigError(std::string(name) + " must be nonempty");
  for (int v : out)
    if (v < 1) throw sumspec::ConfigError(std::string(name) + " values must be positive");
  return out;
}

struct SolverConfig {
  double eig_tol = 1e-8;
  int eig_max_cycles = 0;
  int restarts = 20;
  double truncation_delta = 0.25;

  static SolverConfig from_json(const json& cfg) {
    SolverConfig s;
    if (!cfg.contains("solver")) return s;
    const json& j = cfg.at("solver");
    if (j.contains("eig_tol")) s.eig_tol = j.at("eig_tol").get<double>();
    if (j.contains("eig_max_cycles")) s.eig_max_cycles = j.at("eig_max_cycles").get<int>();
    if (j.contains("restarts")) s.restarts = j.at("restarts").get<int>();
    if (j.contains("truncation_delta")) s.truncation_delta = j.at("truncation_delta").get<double>();
    if (s.eig_tol <= 0.0) throw sumspec::ConfigError("solver.eig_tol must be positive");
    if (s.restarts < 1) throw sumspec::ConfigError("solver.restarts must be positive");
    return s;
  }

  sumspec::PipelineOptions options(std::uint64_t seed) const {
    sumspec::PipelineOptions o;
    o.eig_tol = eig_tol;
    o.eig_max_cycles = eig_max_cycles;
    o.restarts = restarts;
    o.truncation_delta = truncation_delta;
    o.seed = seed;
    return o;
  }
};

// Synthetic model description for "simulate" runs. psi entries, when
// given, are raw weights: they are normalized per community after the
// memberships are drawn, exactly like the uniform variant.
struct SimModel {
  int k = 0;
  Eigen::VectorXd pi;
  std::optional<Eigen::MatrixXd> b;        // replicated across layers
  std::vector<Eigen::MatrixXd> b_explicit; // fixed per-layer stack
  enum class Psi { none, uniform, raw } psi_kind = Psi::none;
  double psi_low = 0.2, psi_high = 1.0;
  Eigen::VectorXd psi_raw;

  static SimModel from_json(const json& cfg) {
    if (!cfg.contains("model")) throw sumspec::ConfigError("simulate config requires \"model\"");
    const json& j = cfg.at("model");
    SimModel m;
    m.k = j.at("k").get<int>();
    if (m.k < 1) throw sumspec::ConfigError("model.k must be positive");
    auto pi = j.at("pi").get<std::vector<double>>();
    m.pi = Eigen::Map<Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
    if (m.pi.size() != m.k) throw sumspec::ConfigError("model.pi length must equal model.k");

    auto read_matrix = [&](const json& bj) {
      auto rows = bj.get<std::vector<std::vector<double>>>();
      if (static_cast<int>(rows.size()) != m.k)
        throw sumspec::ConfigError("connectivity matrix must be k x k");
      Eigen::MatrixXd b(m.k, m.k);
      for (int r = 0; r < m.k; ++r) {
        if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != m.k)
          throw sumspec::ConfigError("connectivity matrix must be k x k");
        for (int c = 0; c < m.k; ++c) b(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
      return b;
    };

    if (j.contains("b") && j.contains("b_stack"))
      throw sumspec::ConfigError("model must give exactly one of \"b\" and \"b_stack\"");
    if (j.contains("b")) {
      m.b = read_matrix(j.at("b"));
    } else if (j.contains("b_stack")) {
      for (const auto& bj : j.at("b_stack")) m.b_explicit.push_back(read_matrix(bj));
      if (m.b_explicit.empty()) throw sumspec::ConfigError("model.b_stack must be nonempty");
    } else {
      throw sumspec::ConfigError("model must give one of \"b\" and \"b_stack\"");
    }

    if (j.contains("psi") && !j.at("psi").is_null()) {
      const json& pj = j.at("psi");
      if (pj.is_object() && pj.contains("uniform")) {
        auto range = pj.at("uniform").get<std::vector<double>>();
        if (range.size() != 2 || range[0] <= 0.0 || range[1] <= range[0])
          throw sumspec::ConfigError("model.psi.uniform must be [low, high] with 0 < low < high");
        m.psi_kind = Psi::uniform;
        m.psi_low = range[0];
        m.psi_high = range[1];
      } else if (pj.is_array()) {
        auto raw = pj.get<std::vector<double>>();
        m.psi_kind = Psi::raw;
        m.psi_raw = Eigen::Map<Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
      } else {
        throw sumspec::ConfigError("model.psi must be null, an array, or {\"uniform\": [low, high]}");
      }
    }
    return m;
  }

  std::vector<Eigen::MatrixXd> stack_for(int t) const {
    if (b) return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(t), *b);
    if (static_cast<int>(b_explicit.size()) != t)
      throw sumspec::ConfigError("t grid value " + std::to_string(t) +
                                 " does not match model.b_stack length");
    return b_explicit;
  }

  // Full per-seed parameter draw (memberships first, then psi raw weights).
  sumspec::ModelParams instantiate(const sumspec::GroundTruth& gt, int t,
                                   std::uint64_t dataset_seed) const {
    sumspec::ModelParams p;
    p.k = k;
    p.pi = pi;
    p.b_stack = stack_for(t);
    switch (psi_kind) {
      case Psi::none:
        break;
      case Psi::uniform:
        p.psi = sumspec::sample_psi_uniform(gt, dataset_seed, psi_low, psi_high);
        break;
      case Psi::raw:
        if (psi_raw.size() != gt.size())
          throw sumspec::ConfigError("model.psi length must equal n");
        p.psi = sumspec::normalize_psi(psi_raw, gt.z);
        break;
    }
    p.validate();
    return p;
  }
};

struct CellOutcome {
  std::string csv_row;
  json report;
  std::string report_name;
  bool failed = false;
};

struct CsvRow {
  std::string algorithm;
  int n = 0, t = 0, seed_index = 0;
  std::string status = "ok", stage;
  std::optional<double> error_overall;
  std::optional<int> n_prime, n_dprime;
  std::optional<double> threshold, dbar, objective, spectral_dev, gamma, alpha, lambda, tau_sum;
  std::optional<int> repair_events;

  std::string str() const {
    auto opt_d = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
    auto opt_i = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    std::string s;
    s += algorithm + "," + std::to_string(n) + "," + std::to_string(t) + "," +
         std::to_string(seed_index) + "," + status + "," + stage + ",";
    s += opt_d(error_overall) + "," + opt_i(n_prime) + "," + opt_i(n_dprime) + ",";
    s += opt_d(threshold) + "," + opt_d(dbar) + "," + opt_d(objective) + ",";
    s += opt_d(spectral_dev) + "," + opt_d(gamma) + "," + opt_d(alpha) + "," + opt_d(lambda) + ",";
    s += opt_d(tau_sum) + "," + opt_i(repair_events);
    return s;
  }
};

struct GridCell {
  std::string algorithm;
  int n = 0, t = 0, seed_index = 0;
};

// One simulate-grid cell: draw the model, run the algorithm, evaluate
// against the truth, and package the row + JSON report.
CellOutcome run_simulate_cell(const GridCell& cell, const SimModel& model,
                              const SolverConfig& solver, std::uint64_t master_seed,
                              bool want_diagnostics) {
  using namespace sumspec;
  CellOutcome out;
  CsvRow row;
  row.algorithm = cell.algorithm;
  row.n = cell.n;
  row.t = cell.t;
  row.seed_index = cell.seed_index;

  out.report_name = "run_" + cell.algorithm + "_n" + std::to_string(cell.n) + "_t" +
                    std::to_string(cell.t) + "_s" + std::to_string(cell.seed_index) + ".json";
  std::uint64_t dataset_seed =
      derive_seed(master_seed, RngDomain::cell, static_cast<std::uint64_t>(cell.n),
                  static_cast<std::uint64_t>(cell.t), static_cast<std::uint64_t>(cell.seed_index));
  out.report["cell"] = {{"algorithm", cell.algorithm},
                        {"n", cell.n},
                        {"t", cell.t},
                        {"seed_index", cell.seed_index},
                        {"dataset_seed", dataset_seed}};

  try {
    GroundTruth gt = sample_memberships(cell.n, model.pi, dataset_seed);
    ModelParams params = model.instantiate(gt, cell.t, dataset_seed);
    LayerStack stack = sample_stack(params, gt, dataset_seed);

    PipelineOptions opts = solver.options(dataset_seed);
    RunReport report;
    MembershipMatrix z = cell.algorithm == "alg2" ? algorithm2(stack, model.k, opts, &report)
                                                  : algorithm1(stack, model.k, opts, &report);

    MembershipMatrix truth{cell.n, model.k, gt.z};
    EvalReport eval = misclassification(truth, z);

    out.report["status"] = "ok";
    out.report["report"] = run_report_to_json(report);
    out.report["labels"] = z.labels;
    out.report["truth_labels"] = gt.z;
    out.report["eval"] = eval_report_to_json(eval);
    out.report["model"] = model_params_to_json(params);
    out.report["estimates"] = {{"pi_hat", [&] {
                                  Eigen::VectorXd pihat = estimate_pi(z);
                                  return std::vector<double>(pihat.data(), pihat.data() + pihat.size());
                                }()}};
    {
      auto bhat = estimate_B(stack, z);
      json stack_json = json::array();
      for (const auto& b : bhat) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < b.rows(); ++r) {
          json one = json::array();
          for (Eigen::Index c = 0; c < b.cols(); ++c)
            one.push_back(std::isnan(b(r, c)) ? json(nullptr) : json(b(r, c)));
          rows.push_back(one);
        }
        stack_json.push_back(rows);
      }
      out.report["estimates"]["b_hat"] = stack_json;
    }

    row.error_overall = eval.overall;
    row.n_prime = report.n_prime;
    if (report.n_dprime >= 0) row.n_dprime = report.n_dprime;
    row.threshold = report.threshold;
    row.dbar = report.dbar;
    row.objective = report.objective;
    row.repair_events = report.repair_events;

    if (want_diagnostics) {
      SparseSymGraph a0 = aggregate_sum(stack);
      TruncationResult tr = truncate_by_degree(a0, cell.t, solver.truncation_delta);
      BoundDiagnostics diag = compute_bound_diagnostics(params, gt, tr);
      out.report["diagnostics"] = diagnostics_to_json(diag);
      row.spectral_dev = diag.spectral_dev;
      row.gamma = diag.gamma;
      row.alpha = diag.alpha;
      row.lambda = diag.lambda;
      row.tau_sum = diag.tau.sum();
    }
  } catch (const sumspec::Error& e) {
    out.failed = true;
    row.status = "error";
    row.stage = e.stage();
    out.report["status"] = "error";
    out.report["error"] = {{"stage", e.stage()}, {"message", e.what()}};
  }
  out.csv_row = row.str();
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream o(path);
  if (!o) throw sumspec::IoError("cannot write " + path.string());
  o << content;
}

int run_simulate(const json& cfg, const fs::path& out_dir, int workers) {
  using namespace sumspec;
  SimModel model = SimModel::from_json(cfg);
  SolverConfig solver = SolverConfig::from_json(cfg);
  std::uint64_t master_seed = cfg.value("seed", 0ULL);
  bool diagnostics = cfg.value("diagnostics", true);

  std::vector<std::string> algorithms;
  if (cfg.contains("algorithms"))
    algorithms = cfg.at("algorithms").get<std::vector<std::string>>();
  else
    algorithms.push_back(cfg.value("algorithm", "alg1"));
  for (const auto& a : algorithms)
    if (a != "alg1" && a != "alg2") throw ConfigError("algorithm must be \"alg1\" or \"alg2\"");
  if (algorithms.empty()) throw ConfigError("algorithms must be nonempty");

  std::vector<int> ns = parse_int_axis(cfg.at("n"), "n");
  std::vector<int> ts = parse_int_axis(cfg.at("t"), "t");
  int num_seeds = cfg.value("num_seeds", 1);
  if (num_seeds < 1) throw ConfigError("num_seeds must be positive");

  std::vector<GridCell> cells;
  for (int n : ns)
    for (int t : ts)
      for (int s = 0; s < num_seeds; ++s)
        for (const auto& alg : algorithms) cells.push_back({alg, n, t, s});

  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      outcomes[i] = run_simulate_cell(cells[i], model, solver, master_seed, diagnostics);
    }
  };
  int nthreads = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < nthreads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  fs::create_directories(out_dir);
  std::string csv = std::string(kCsvHeader) + "\n";
  bool any_failed = false;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    csv += outcomes[i].csv_row + "\n";
    write_file(out_dir / outcomes[i].report_name, outcomes[i].report.dump(2) + "\n");
    any_failed = any_failed || outcomes[i].failed;
  }
  write_file(out_dir / "aggregate.csv", csv);
  return any_failed ? 2 : 0;
}

int run_detect(const json& cfg, const fs::path& out_dir, const fs::path& config_path) {
  using namespace sumspec;
  SolverConfig solver = SolverConfig::from_json(cfg);
  std::uint64_t master_seed = cfg.value("seed", 0ULL);
  int k = cfg.value("k", 0);
  if (k < 1) throw ConfigError("detect config requires positive k");
  std::string algorithm = cfg.value("algorithm", "alg1");
  if (algorithm != "alg1" && algorithm != "alg2")
    throw ConfigError("algorithm must be \"alg1\" or \"alg2\"");
  if (!cfg.contains("manifest")) throw ConfigError("detect config requires \"manifest\"");
  fs::path manifest = cfg.at("manifest").get<std::string>();
  if (manifest.is_relative()) manifest = config_path.parent_path() / manifest;

  LayerStack stack = read_manifest(manifest);

  fs::create_directories(out_dir);
  CsvRow row;
  row.algorithm = algorithm;
  row.n = stack.size();
  row.t = stack.layer_count();
  json report_json;
  report_json["cell"] = {{"algorithm", algorithm}, {"n", stack.size()}, {"t", stack.layer_count()}};
  bool failed = false;
  try {
    RunReport report;
    PipelineOptions opts = solver.options(master_seed);
    MembershipMatrix z = algorithm == "alg2" ? algorithm2(stack, k, opts, &report)
                                             : algorithm1(stack, k, opts, &report);
    write_labels(out_dir / "labels.txt", z);
    report_json["status"] = "ok";
    report_json["report"] = run_report_to_json(report);
    report_json["labels"] = z.labels;
    row.n_prime = report.n_prime;
    if (report.n_dprime >= 0) row.n_dprime = report.n_dprime;
    row.threshold = report.threshold;
    row.dbar = report.dbar;
    row.objective = report.objective;
    row.repair_events = report.repair_events;
  } catch (const Error& e) {
    failed = true;
    row.status = "error";
    row.stage = e.stage();
    report_json["status"] = "error";
    report_json["error"] = {{"stage", e.stage()}, {"message", e.what()}};
  }
  write_file(out_dir / "run_detect.json", report_json.dump(2) + "\n");
  write_file(out_dir / "aggregate.csv", std::string(kCsvHeader) + "\n" + row.str() + "\n");
  return failed ? 2 : 0;
}

int run_scree(const json& cfg, const fs::path& out_dir, const fs::path& config_path) {
  using namespace sumspec;
  SolverConfig solver = SolverConfig::from_json(cfg);
  std::uint64_t master_seed = cfg.value("seed", 0ULL);
  int kmax = cfg.value("kmax", 0);
  if (kmax < 1) throw ConfigError("scree config requires positive kmax");

  std::optional<LayerStack> stack;
  int t = 1;
  if (cfg.contains("manifest")) {
    fs::path manifest = cfg.at("manifest").get<std::string>();
    if (manifest.is_relative()) manifest = config_path.parent_path() / manifest;
    stack.emplace(read_manifest(manifest));
    t = stack->layer_count();
  } else {
    SimModel model = SimModel::from_json(cfg);
    int n = parse_int_axis(cfg.at("n"), "n").front();
    t = parse_int_axis(cfg.at("t"), "t").front();
    std::uint64_t dataset_seed = derive_seed(master_seed, RngDomain::cell,
                                             static_cast<std::uint64_t>(n),
                                             static_cast<std::uint64_t>(t), 0);
    GroundTruth gt = sample_memberships(n, model.pi, dataset_seed);
    ModelParams params = model.instantiate(gt, t, dataset_seed);
    stack.emplace(sample_stack(params, gt, dataset_seed));
  }

  SparseSymGraph a0 = aggregate_sum(*stack);
  TruncationResult tr = truncate_by_degree(a0, t, solver.truncation_delta);
  if (kmax > static_cast<int>(tr.kept.size()))
    throw ConfigError("kmax exceeds the truncated matrix size " + std::to_string(tr.kept.size()));
  Eigen::VectorXd values =
      scree_values(tr.sub, kmax, {solver.eig_tol, solver.eig_max_cycles, master_seed});

  fs::create_directories(out_dir);
  std::string csv = "index,abs_eigenvalue\n";
  for (Eigen::Index i = 0; i < values.size(); ++i)
    csv += std::to_string(i + 1) + "," + fmt_double(values[i]) + "\n";
  write_file(out_dir / "scree.csv", csv);
  return 0;
}

int dispatch(const std::string& command, const fs::path& config_path, const fs::path& out_dir,
             int workers) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot open config " << config_path << "\n";
    return 1;
  }
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    std::cerr << "error: config parse failure: " << e.what() << "\n";
    return 1;
  }

  try {
    std::string mode = cfg.value("mode", "");
    if (command == "scree") {
      if (mode != "scree") throw sumspec::ConfigError("scree command requires config mode \"scree\"");
      return run_scree(cfg, out_dir, config_path);
    }
    if (mode == "simulate") return run_simulate(cfg, out_dir, workers);
    if (mode == "detect") return run_detect(cfg, out_dir, config_path);
    throw sumspec::ConfigError("config mode must be \"simulate\", \"detect\", or \"scree\"");
  } catch (const sumspec::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const sumspec::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 1;
  } catch (const sumspec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"community detection for multi-layer networks via spectral clustering of the "
               "summed adjacency matrix"};
  app.require_subcommand(1);

  std::string config_file;
  std::string out_dir = "out";
  int workers = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_file, "JSON config file")->required();
    cmd->add_option("--out-dir", out_dir, "output directory (default: out)");
    cmd->add_option("--workers", workers, "worker threads for grid cells (default: 1)");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment or detection config");
  add_common(run_cmd);
  CLI::App* scree_cmd = app.add_subcommand("scree", "emit scree values for manual K selection");
  add_common(scree_cmd);

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  return dispatch(command, config_file, out_dir, workers);
}
