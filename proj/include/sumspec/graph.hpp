#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sumspec/error.hpp"

namespace sumspec {

// Symmetric integer-weighted sparse matrix with a structurally zero
// diagonal. Only the upper triangle (i < j) is stored; (i,j) and (j,i)
// queries resolve to the same entry. Immutable after construction.
class SparseSymGraph {
public:
  struct Entry {
    int i;  // i < j
    int j;
    int w;  // w > 0
  };

  SparseSymGraph() = default;

  explicit SparseSymGraph(int n) : n_(n) {
    if (n < 0) throw IndexOutOfRange("vertex count must be nonnegative");
  }

  // entries may be unsorted; duplicates are not allowed here (use
  // from_edge_list for multiplicity handling).
  SparseSymGraph(int n, std::vector<Entry> entries) : n_(n), entries_(std::move(entries)) {
    if (n < 0) throw IndexOutOfRange("vertex count must be nonnegative");
    for (auto& e : entries_) {
      if (e.i > e.j) std::swap(e.i, e.j);
      if (e.i == e.j) throw SelfLoop("self-loop at vertex " + std::to_string(e.i));
      if (e.i < 0 || e.j >= n_)
        throw IndexOutOfRange("entry (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                              ") outside [0," + std::to_string(n_) + ")");
      if (e.w <= 0) throw IndexOutOfRange("nonpositive weight");
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.i < b.i || (a.i == b.i && a.j < b.j); });
    for (std::size_t k = 1; k < entries_.size(); ++k)
      if (entries_[k - 1].i == entries_[k].i && entries_[k - 1].j == entries_[k].j)
        throw IndexOutOfRange("duplicate entry in constructor");
  }

  int size() const { return n_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t edge_count() const { return entries_.size(); }

  std::int64_t total_weight() const {
    std::int64_t s = 0;
    for (const auto& e : entries_) s += e.w;
    return s;
  }

  // Weight of the unordered pair {u, v}; 0 if absent or u == v.
  int weight(int u, int v) const {
    if (u == v) return 0;
    if (u > v) std::swap(u, v);
    Entry probe{u, v, 0};
    auto it = std::lower_bound(entries_.begin(), entries_.end(), probe,
                               [](const Entry& a, const Entry& b) {
                                 return a.i < b.i || (a.i == b.i && a.j < b.j);
                               });
    if (it != entries_.end() && it->i == u && it->j == v) return it->w;
    return 0;
  }

  std::vector<std::int64_t> row_sums() const {
    std::vector<std::int64_t> s(static_cast<std::size_t>(n_), 0);
    for (const auto& e : entries_) {
      s[static_cast<std::size_t>(e.i)] += e.w;
      s[static_cast<std::size_t>(e.j)] += e.w;
    }
    return s;
  }

  // y = A x (symmetric apply).
  void multiply(const double* x, double* y) const {
    std::fill(y, y + n_, 0.0);
    for (const auto& e : entries_) {
      y[e.i] += e.w * x[e.j];
      y[e.j] += e.w * x[e.i];
    }
  }

  // Induced submatrix on a strictly increasing index list.
  SparseSymGraph induced(const std::vector<int>& kept) const {
    std::vector<int> pos(static_cast<std::size_t>(n_), -1);
    for (std::size_t k = 0; k < kept.size(); ++k) {
      int v = kept[k];
      if (v < 0 || v >= n_) throw IndexOutOfRange("kept index outside graph");
      pos[static_cast<std::size_t>(v)] = static_cast<int>(k);
    }
    std::vector<Entry> sub;
    for (const auto& e : entries_) {
      int a = pos[static_cast<std::size_t>(e.i)];
      int b = pos[static_cast<std::size_t>(e.j)];
      if (a >= 0 && b >= 0) sub.push_back({a, b, e.w});
    }
    return SparseSymGraph(static_cast<int>(kept.size()), std::move(sub));
  }

private:
  int n_ = 0;
  std::vector<Entry> entries_;
};

// Ordered collection of T same-size layers sharing one vertex set.
class LayerStack {
public:
  explicit LayerStack(std::vector<SparseSymGraph> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw SizeMismatch("layer stack must contain at least one layer");
    n_ = layers_.front().size();
    for (const auto& l : layers_)
      if (l.size() != n_) throw SizeMismatch("layers disagree on vertex count");
  }

  int size() const { return n_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  const SparseSymGraph& layer(int t) const { return layers_[static_cast<std::size_t>(t)]; }
  const std::vector<SparseSymGraph>& layers() const { return layers_; }

private:
  int n_ = 0;
  std::vector<SparseSymGraph> layers_;
};

// Result of the degree-truncation step: the retained indices, the induced
// submatrix, and the quantities that defined the cut.
struct TruncationResult {
  std::vector<int> kept;  // strictly increasing original indices
  SparseSymGraph sub;     // induced submatrix, size kept.size()
  double threshold = 0.0; // e * (T * dbar)^(1 + delta)
  double dbar = 0.0;      // average degree of the summed matrix
};

// Build a graph from an undirected edge list; duplicate pairs accumulate
// into the entry weight so per-layer and pre-aggregated files share one
// ingestion path.
inline SparseSymGraph from_edge_list(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 0) throw IndexOutOfRange("vertex count must be nonnegative");
  std::vector<std::pair<int, int>> canon;
  canon.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) throw SelfLoop("self-loop at vertex " + std::to_string(u));
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw IndexOutOfRange("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") outside [0," + std::to_string(n) + ")");
    if (u > v) std::swap(u, v);
    canon.emplace_back(u, v);
  }
  std::sort(canon.begin(), canon.end());
  std::vector<SparseSymGraph::Entry> entries;
  for (std::size_t k = 0; k < canon.size();) {
    std::size_t m = k;
    while (m < canon.size() && canon[m] == canon[k]) ++m;
    entries.push_back({canon[k].first, canon[k].second, static_cast<int>(m - k)});
    k = m;
  }
  return SparseSymGraph(n, std::move(entries));
}

// Entrywise sum of the layers. Weights end up in [0, T].
inline SparseSymGraph aggregate_sum(const LayerStack& stack) {
  std::vector<std::pair<std::pair<int, int>, int>> acc;
  for (const auto& layer : stack.layers())
    for (const auto& e : layer.entries()) acc.push_back({{e.i, e.j}, e.w});
  std::sort(acc.begin(), acc.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<SparseSymGraph::Entry> entries;
  for (std::size_t k = 0; k < acc.size();) {
    std::size_t m = k;
    int w = 0;
    while (m < acc.size() && acc[m].first == acc[k].first) w += acc[m++].second;
    assert(w <= stack.layer_count());
    entries.push_back({acc[k].first.first, acc[k].first.second, w});
    k = m;
  }
  return SparseSymGraph(stack.size(), std::move(entries));
}

// dbar = (1/nT) 1' A0 1 = 2 * total weight / (n * T).
inline double average_degree(const SparseSymGraph& a0, int t) {
  if (t < 1) throw IndexOutOfRange("layer count must be positive");
  if (a0.size() < 1) throw IndexOutOfRange("graph must have at least one vertex");
  return 2.0 * static_cast<double>(a0.total_weight()) /
         (static_cast<double>(a0.size()) * static_cast<double>(t));
}

// Drop rows of the summed matrix whose row sum exceeds e*(T*dbar)^(1+delta);
// rows exactly at the threshold are kept. delta defaults to 1/4.
inline TruncationResult truncate_by_degree(const SparseSymGraph& a0, int t, double delta = 0.25) {
  double dbar = average_degree(a0, t);
  double threshold = std::exp(1.0) * std::pow(static_cast<double>(t) * dbar, 1.0 + delta);
  auto sums = a0.row_sums();
  std::vector<int> kept;
  kept.reserve(sums.size());
  for (int i = 0; i < a0.size(); ++i)
    if (static_cast<double>(sums[static_cast<std::size_t>(i)]) <= threshold) kept.push_back(i);
  if (kept.empty())
    throw AllRowsDropped("degree truncation removed every row (threshold " +
                         std::to_string(threshold) + ")");
  TruncationResult res;
  res.sub = a0.induced(kept);
  res.kept = std::move(kept);
  res.threshold = threshold;
  res.dbar = dbar;
  return res;
}

}  // namespace sumspec
