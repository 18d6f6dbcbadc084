#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sumspec/clustering.hpp"
#include "sumspec/eigensolver.hpp"
#include "sumspec/error.hpp"
#include "sumspec/graph.hpp"

namespace sumspec {

// Full membership assignment: row i is one-hot at labels[i]. Labels are
// 0-based; the "fill arbitrarily" rows of both algorithms get label 0.
struct MembershipMatrix {
  int n = 0;
  int k = 0;
  std::vector<int> labels;

  Eigen::MatrixXd one_hot() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, k);
    for (int i = 0; i < n; ++i) m(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    return m;
  }
};

struct PipelineOptions {
  double eig_tol = 1e-8;
  int eig_max_cycles = 0;         // 0 -> 300 * k
  int restarts = 20;              // clustering restarts
  std::uint64_t seed = 0;
  double truncation_delta = 0.25; // row-sum threshold exponent is 1 + delta
};

// Stage metrics captured along a pipeline run; the consistency bounds are
// phrased in these quantities and the experiment harness records them.
struct RunReport {
  std::string algorithm;
  int n = 0;
  int k = 0;
  int t = 0;
  int n_prime = 0;
  int n_dprime = -1;              // algorithm 2 only
  double threshold = 0.0;
  double dbar = 0.0;
  std::vector<double> eigenvalues;  // the k leading, by descending |value|
  double boundary_gap = -1.0;       // |lambda_k| - |lambda_{k+1}|; ~0 flags an
                                    // arbitrary subspace completion
  double objective = 0.0;
  int repair_events = 0;
};

// Place partial labels at the kept indices; everything else gets label 0.
inline MembershipMatrix extend_membership(const std::vector<int>& partial_labels,
                                          const std::vector<int>& kept, int n, int k) {
  if (partial_labels.size() != kept.size())
    throw SizeMismatch("partial label count (" + std::to_string(partial_labels.size()) +
                       ") does not match kept index count (" + std::to_string(kept.size()) + ")");
  MembershipMatrix out;
  out.n = n;
  out.k = k;
  out.labels.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t j = 0; j < kept.size(); ++j) {
    int idx = kept[j];
    if (idx < 0 || idx >= n) throw SizeMismatch("kept index outside [0,n)");
    out.labels[static_cast<std::size_t>(idx)] = partial_labels[j];
  }
  return out;
}

namespace detail {

template <class Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (Error& e) {
    e.set_stage(stage);
    throw;
  }
}

}  // namespace detail

// Spectral clustering of the summed adjacency matrices: aggregate the
// layers, drop heavy rows, embed with the leading-|eigenvalue| pairs, run
// approximate k-means on the embedding rows, and extend back to all n
// vertices.
inline MembershipMatrix algorithm1(const LayerStack& stack, int k,
                                   const PipelineOptions& opts = {},
                                   RunReport* report = nullptr) {
  const int n = stack.size();
  const int t = stack.layer_count();

  SparseSymGraph a0 = detail::run_stage("aggregate", [&] { return aggregate_sum(stack); });
  TruncationResult tr = detail::run_stage(
      "truncate", [&] { return truncate_by_degree(a0, t, opts.truncation_delta); });
  Embedding emb = detail::run_stage("eigensolve", [&] {
    return leading_eigenpairs(tr.sub, k, {opts.eig_tol, opts.eig_max_cycles, opts.seed});
  });
  RowClustering rc = detail::run_stage(
      "cluster", [&] { return approx_kmeans(emb.vectors, k, opts.restarts, opts.seed); });
  MembershipMatrix z = detail::run_stage(
      "extend", [&] { return extend_membership(rc.assign, tr.kept, n, k); });

  if (report) {
    report->algorithm = "alg1";
    report->n = n;
    report->k = k;
    report->t = t;
    report->n_prime = static_cast<int>(tr.kept.size());
    report->n_dprime = -1;
    report->threshold = tr.threshold;
    report->dbar = tr.dbar;
    report->eigenvalues.assign(emb.values.data(), emb.values.data() + emb.values.size());
    report->boundary_gap = emb.boundary_gap;
    report->objective = rc.objective;
    report->repair_events = rc.repair_events;
  }
  return z;
}

// Spherical variant: same pipeline through the embedding, then rows are
// projected to the unit sphere (zero rows dropped) and clustered with
// approximate k-median; the two extension steps fill dropped rows with
// label 0.
inline MembershipMatrix algorithm2(const LayerStack& stack, int k,
                                   const PipelineOptions& opts = {},
                                   RunReport* report = nullptr) {
  const int n = stack.size();
  const int t = stack.layer_count();

  SparseSymGraph a0 = detail::run_stage("aggregate", [&] { return aggregate_sum(stack); });
  TruncationResult tr = detail::run_stage(
      "truncate", [&] { return truncate_by_degree(a0, t, opts.truncation_delta); });
  Embedding emb = detail::run_stage("eigensolve", [&] {
    return leading_eigenpairs(tr.sub, k, {opts.eig_tol, opts.eig_max_cycles, opts.seed});
  });
  NormalizedRows nr = normalize_rows(emb.vectors);
  if (nr.nonzero.empty()) {
    NoNonzeroRows e("all embedding rows are numerically zero");
    e.set_stage("normalize");
    throw e;
  }
  RowClustering rc = detail::run_stage(
      "cluster", [&] { return approx_kmedian(nr.rows, k, opts.restarts, opts.seed); });
  MembershipMatrix z = detail::run_stage("extend", [&] {
    MembershipMatrix on_kept =
        extend_membership(rc.assign, nr.nonzero, static_cast<int>(tr.kept.size()), k);
    return extend_membership(on_kept.labels, tr.kept, n, k);
  });

  if (report) {
    report->algorithm = "alg2";
    report->n = n;
    report->k = k;
    report->t = t;
    report->n_prime = static_cast<int>(tr.kept.size());
    report->n_dprime = static_cast<int>(nr.nonzero.size());
    report->threshold = tr.threshold;
    report->dbar = tr.dbar;
    report->eigenvalues.assign(emb.values.data(), emb.values.data() + emb.values.size());
    report->boundary_gap = emb.boundary_gap;
    report->objective = rc.objective;
    report->repair_events = rc.repair_events;
  }
  return z;
}

// Harness entry points that skip sampling and truncation: the given dense
// symmetric matrix plays the role of the truncated working matrix. Used to
// drive the pipeline with a noiseless expected matrix.
inline MembershipMatrix algorithm1_dense(const Eigen::MatrixXd& a, int k,
                                         const PipelineOptions& opts = {},
                                         RunReport* report = nullptr) {
  const int n = static_cast<int>(a.rows());
  Embedding emb = detail::run_stage("eigensolve", [&] {
    return leading_eigenpairs(DenseSymOperator{a}, k, {opts.eig_tol, opts.eig_max_cycles, opts.seed});
  });
  RowClustering rc = detail::run_stage(
      "cluster", [&] { return approx_kmeans(emb.vectors, k, opts.restarts, opts.seed); });
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  MembershipMatrix z = extend_membership(rc.assign, all, n, k);
  if (report) {
    report->algorithm = "alg1";
    report->n = n;
    report->k = k;
    report->n_prime = n;
    report->eigenvalues.assign(emb.values.data(), emb.values.data() + emb.values.size());
    report->boundary_gap = emb.boundary_gap;
    report->objective = rc.objective;
    report->repair_events = rc.repair_events;
  }
  return z;
}

inline MembershipMatrix algorithm2_dense(const Eigen::MatrixXd& a, int k,
                                         const PipelineOptions& opts = {},
                                         RunReport* report = nullptr) {
  const int n = static_cast<int>(a.rows());
  Embedding emb = detail::run_stage("eigensolve", [&] {
    return leading_eigenpairs(DenseSymOperator{a}, k, {opts.eig_tol, opts.eig_max_cycles, opts.seed});
  });
  NormalizedRows nr = normalize_rows(emb.vectors);
  if (nr.nonzero.empty()) {
    NoNonzeroRows e("all embedding rows are numerically zero");
    e.set_stage("normalize");
    throw e;
  }
  RowClustering rc = detail::run_stage(
      "cluster", [&] { return approx_kmedian(nr.rows, k, opts.restarts, opts.seed); });
  MembershipMatrix z = detail::run_stage(
      "extend", [&] { return extend_membership(rc.assign, nr.nonzero, n, k); });
  if (report) {
    report->algorithm = "alg2";
    report->n = n;
    report->k = k;
    report->n_prime = n;
    report->n_dprime = static_cast<int>(nr.nonzero.size());
    report->eigenvalues.assign(emb.values.data(), emb.values.data() + emb.values.size());
    report->boundary_gap = emb.boundary_gap;
    report->objective = rc.objective;
    report->repair_events = rc.repair_events;
  }
  return z;
}

}  // namespace sumspec
