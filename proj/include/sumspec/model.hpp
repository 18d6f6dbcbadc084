#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sumspec/error.hpp"
#include "sumspec/graph.hpp"
#include "sumspec/rng.hpp"

namespace sumspec {

// Full DSBM / DDCBM parameterization: community proportions pi, per-layer
// connectivity matrices, and (for the degree-corrected model) per-vertex
// degree parameters psi with per-community max equal to 1.
struct ModelParams {
  int k = 0;
  Eigen::VectorXd pi;                  // length k, nonnegative, sums to 1
  std::vector<Eigen::MatrixXd> b_stack;  // T symmetric k x k matrices, entries in [0,1]
  std::optional<Eigen::VectorXd> psi;  // length n when present

  int layer_count() const { return static_cast<int>(b_stack.size()); }

  void validate() const {
    if (k < 1) throw InvalidDistribution("community count must be positive");
    if (pi.size() != k) throw InvalidDistribution("pi length must equal k");
    double sum = 0.0;
    for (int a = 0; a < k; ++a) {
      if (pi[a] < 0.0) throw InvalidDistribution("pi entries must be nonnegative");
      sum += pi[a];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidDistribution("pi must sum to 1");
    if (b_stack.empty()) throw InvalidDistribution("b_stack must be nonempty");
    for (const auto& b : b_stack) {
      if (b.rows() != k || b.cols() != k) throw SizeMismatch("connectivity matrix must be k x k");
      for (int a = 0; a < k; ++a)
        for (int c = 0; c < k; ++c) {
          if (std::abs(b(a, c) - b(c, a)) > 1e-12) throw InvalidDistribution("connectivity matrix must be symmetric");
          if (b(a, c) < 0.0 || b(a, c) > 1.0) throw InvalidDistribution("connectivity entries must lie in [0,1]");
        }
    }
  }
};

// Sampled community labels plus the induced one-hot matrix view.
struct GroundTruth {
  int k = 0;
  std::vector<int> z;  // labels in [0, k)

  int size() const { return static_cast<int>(z.size()); }

  Eigen::MatrixXd as_matrix() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), k);
    for (int i = 0; i < size(); ++i) m(i, z[static_cast<std::size_t>(i)]) = 1.0;
    return m;
  }

  std::vector<int> community_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int label : z) ++sizes[static_cast<std::size_t>(label)];
    return sizes;
  }
};

// z_1..z_n i.i.d. categorical(pi); deterministic given seed.
inline GroundTruth sample_memberships(int n, const Eigen::VectorXd& pi, std::uint64_t seed) {
  int k = static_cast<int>(pi.size());
  if (k < 1) throw InvalidDistribution("pi must be nonempty");
  double sum = 0.0;
  for (int a = 0; a < k; ++a) {
    if (pi[a] < 0.0) throw InvalidDistribution("pi entries must be nonnegative");
    sum += pi[a];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidDistribution("pi must sum to 1");

  GroundTruth gt;
  gt.k = k;
  gt.z.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double u = keyed_unit(seed, RngDomain::membership, static_cast<std::uint64_t>(i));
    double acc = 0.0;
    int label = k - 1;  // guard against roundoff in the cumulative walk
    for (int a = 0; a < k; ++a) {
      acc += pi[a];
      if (u < acc) {
        label = a;
        break;
      }
    }
    gt.z[static_cast<std::size_t>(i)] = label;
  }
  return gt;
}

namespace detail {

// One Bernoulli layer with pair probability prob(i,j); the draw for pair
// (i,j) in layer t depends only on (seed, t, i, j).
template <class PairProb>
SparseSymGraph sample_layer(int n, int t_index, std::uint64_t seed, PairProb&& prob) {
  std::vector<SparseSymGraph::Entry> entries;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double p = prob(i, j);
      if (p <= 0.0) continue;
      double u = keyed_unit(seed, RngDomain::edge, static_cast<std::uint64_t>(t_index),
                            static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
      if (u < p) entries.push_back({i, j, 1});
    }
  }
  return SparseSymGraph(n, std::move(entries));
}

}  // namespace detail

// Edge (i,j) present with probability b[z_i][z_j], independently per pair.
// t_index selects the per-layer stream so stacks are order-independent.
inline SparseSymGraph sample_dsbm_layer(const GroundTruth& gt, const Eigen::MatrixXd& b,
                                        std::uint64_t seed, int t_index = 0) {
  if (b.rows() != gt.k || b.cols() != gt.k) throw SizeMismatch("connectivity matrix must be k x k");
  return detail::sample_layer(gt.size(), t_index, seed, [&](int i, int j) {
    return b(gt.z[static_cast<std::size_t>(i)], gt.z[static_cast<std::size_t>(j)]);
  });
}

// Edge (i,j) present with probability psi_i * psi_j * b[z_i][z_j].
// Requires the per-community max-psi identifiability normalization.
inline SparseSymGraph sample_ddcbm_layer(const GroundTruth& gt, const Eigen::VectorXd& psi,
                                         const Eigen::MatrixXd& b, std::uint64_t seed,
                                         int t_index = 0) {
  if (b.rows() != gt.k || b.cols() != gt.k) throw SizeMismatch("connectivity matrix must be k x k");
  if (psi.size() != gt.size()) throw SizeMismatch("psi length must equal vertex count");
  std::vector<double> community_max(static_cast<std::size_t>(gt.k), 0.0);
  for (int i = 0; i < gt.size(); ++i) {
    auto c = static_cast<std::size_t>(gt.z[static_cast<std::size_t>(i)]);
    community_max[c] = std::max(community_max[c], psi[i]);
  }
  for (int a = 0; a < gt.k; ++a)
    if (std::abs(community_max[static_cast<std::size_t>(a)] - 1.0) > 1e-12)
      throw IdentifiabilityViolation("max psi within community " + std::to_string(a) +
                                     " must equal 1");
  return detail::sample_layer(gt.size(), t_index, seed, [&](int i, int j) {
    return psi[i] * psi[j] * b(gt.z[static_cast<std::size_t>(i)], gt.z[static_cast<std::size_t>(j)]);
  });
}

// Sample a full stack of T layers from the model.
inline LayerStack sample_stack(const ModelParams& params, const GroundTruth& gt,
                               std::uint64_t seed) {
  params.validate();
  std::vector<SparseSymGraph> layers;
  layers.reserve(params.b_stack.size());
  for (int t = 0; t < params.layer_count(); ++t) {
    if (params.psi)
      layers.push_back(sample_ddcbm_layer(gt, *params.psi, params.b_stack[static_cast<std::size_t>(t)], seed, t));
    else
      layers.push_back(sample_dsbm_layer(gt, params.b_stack[static_cast<std::size_t>(t)], seed, t));
  }
  return LayerStack(std::move(layers));
}

// psi_i = raw_i / max{raw_j : z_j == z_i}; enforces per-community max 1.
inline Eigen::VectorXd normalize_psi(const Eigen::VectorXd& raw, const std::vector<int>& z) {
  if (raw.size() != static_cast<Eigen::Index>(z.size()))
    throw SizeMismatch("raw weight vector and label vector differ in length");
  int k = 0;
  for (int label : z) k = std::max(k, label + 1);
  std::vector<double> community_max(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (raw[i] <= 0.0) throw InvalidDistribution("raw degree weights must be positive");
    auto c = static_cast<std::size_t>(z[static_cast<std::size_t>(i)]);
    community_max[c] = std::max(community_max[c], raw[i]);
  }
  for (int a = 0; a < k; ++a)
    if (community_max[static_cast<std::size_t>(a)] == 0.0)
      throw EmptyCommunity("community " + std::to_string(a) + " has no members");
  Eigen::VectorXd psi(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    psi[i] = raw[i] / community_max[static_cast<std::size_t>(z[static_cast<std::size_t>(i)])];
  return psi;
}

// Raw weights Uniform[low, high) per vertex, then the identifiability
// normalization. The default range keeps the weights bounded away from 0.
inline Eigen::VectorXd sample_psi_uniform(const GroundTruth& gt, std::uint64_t seed,
                                          double low = 0.2, double high = 1.0) {
  Eigen::VectorXd raw(gt.size());
  for (int i = 0; i < gt.size(); ++i)
    raw[i] = low + (high - low) * keyed_unit(seed, RngDomain::psi, static_cast<std::uint64_t>(i));
  return normalize_psi(raw, gt.z);
}

// Noiseless expected sum matrix on the kept index set:
//   sum_t Z B^(t) Z'          (psi absent)
//   sum_t Psi B^(t) Psi'      (psi present, Psi = Diag(psi) Z)
// The diagonal follows the formula and is nonzero; it is not cleared to
// match the zero diagonal of sampled adjacency matrices.
inline Eigen::MatrixXd expected_sum_matrix(const GroundTruth& gt, const std::vector<int>& kept,
                                           const std::vector<Eigen::MatrixXd>& b_stack,
                                           const std::optional<Eigen::VectorXd>& psi = std::nullopt) {
  if (b_stack.empty()) throw SizeMismatch("b_stack must be nonempty");
  Eigen::MatrixXd b_sum = Eigen::MatrixXd::Zero(gt.k, gt.k);
  for (const auto& b : b_stack) {
    if (b.rows() != gt.k || b.cols() != gt.k) throw SizeMismatch("connectivity matrix must be k x k");
    b_sum += b;
  }
  if (psi && psi->size() != gt.size()) throw SizeMismatch("psi length must equal vertex count");
  auto m = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd p(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    int i = kept[static_cast<std::size_t>(r)];
    if (i < 0 || i >= gt.size()) throw IndexOutOfRange("kept index outside vertex set");
    for (Eigen::Index c = 0; c < m; ++c) {
      int j = kept[static_cast<std::size_t>(c)];
      double v = b_sum(gt.z[static_cast<std::size_t>(i)], gt.z[static_cast<std::size_t>(j)]);
      if (psi) v *= (*psi)[i] * (*psi)[j];
      p(r, c) = v;
    }
  }
  return p;
}

// Nonsingularity of sum_t B^(t), plus the spectral quantities the
// consistency bounds are phrased in.
struct SumSpectrum {
  bool nonsingular = false;
  double min_eigenvalue = 0.0;      // smallest (algebraic) eigenvalue of the sum
  double min_abs_eigenvalue = 0.0;  // distance of the spectrum from 0
  double alpha = 0.0;               // max entry over all B^(t)
  double lambda = 0.0;              // lambda*alpha = smallest eigenvalue across the B^(t)
};

inline SumSpectrum check_sum_nonsingular(const std::vector<Eigen::MatrixXd>& b_stack) {
  if (b_stack.empty()) throw SizeMismatch("b_stack must be nonempty");
  auto k = b_stack.front().rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, k);
  SumSpectrum out;
  double min_layer_eig = std::numeric_limits<double>::infinity();
  for (const auto& b : b_stack) {
    if (b.rows() != k || b.cols() != k) throw SizeMismatch("connectivity matrices differ in size");
    sum += b;
    out.alpha = std::max(out.alpha, b.maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
    min_layer_eig = std::min(min_layer_eig, es.eigenvalues().minCoeff());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sum, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  out.min_eigenvalue = ev.minCoeff();
  out.min_abs_eigenvalue = ev.cwiseAbs().minCoeff();
  double norm = ev.cwiseAbs().maxCoeff();
  out.nonsingular = out.min_abs_eigenvalue > 1e-10 * norm;
  out.lambda = out.alpha > 0.0 ? min_layer_eig / out.alpha : 0.0;
  return out;
}

}  // namespace sumspec
