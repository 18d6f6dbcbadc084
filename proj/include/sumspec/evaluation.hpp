#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "sumspec/error.hpp"
#include "sumspec/graph.hpp"
#include "sumspec/model.hpp"
#include "sumspec/pipeline.hpp"
#include "sumspec/rng.hpp"

namespace sumspec {

// Misclassification under the best label permutation: the overall fraction
// and the per-true-community fractions f_a, plus the permutation used.
struct EvalReport {
  double overall = 0.0;
  Eigen::VectorXd per_community;  // f_a; 0 for empty true communities
  std::vector<int> permutation;   // truth label a is matched to permutation[a]
};

// Exhaustive search over label permutations maximizing the confusion-matrix
// trace. Reference route for small K.
inline std::vector<int> best_permutation_exhaustive(const Eigen::MatrixXd& confusion) {
  const int k = static_cast<int>(confusion.rows());
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (int a = 0; a < k; ++a) score += confusion(a, perm[static_cast<std::size_t>(a)]);
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// O(K^3) Hungarian assignment maximizing the confusion-matrix trace.
inline std::vector<int> best_permutation_hungarian(const Eigen::MatrixXd& confusion) {
  const int k = static_cast<int>(confusion.rows());
  // minimize cost = max_entry - confusion, classic potentials formulation
  const double top = confusion.maxCoeff();
  auto cost = [&](int a, int b) { return top - confusion(a, b); };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(k + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(k + 1), 0.0);
  std::vector<int> match(static_cast<std::size_t>(k + 1), 0);  // column -> row (1-based)
  std::vector<int> way(static_cast<std::size_t>(k + 1), 0);
  for (int i = 1; i <= k; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(k + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(k + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      int i0 = match[static_cast<std::size_t>(j0)], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= k; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= k; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> perm(static_cast<std::size_t>(k));
  for (int j = 1; j <= k; ++j) perm[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return perm;
}

// Fraction misclassified, minimized over all K! label permutations
// (exhaustive up to K = 8, Hungarian assignment beyond).
inline EvalReport misclassification(const MembershipMatrix& truth, const MembershipMatrix& est) {
  if (truth.n != est.n) throw SizeMismatch("membership matrices differ in vertex count");
  const int k = std::max(truth.k, est.k);
  const int n = truth.n;

  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < n; ++i)
    confusion(truth.labels[static_cast<std::size_t>(i)], est.labels[static_cast<std::size_t>(i)]) += 1.0;

  EvalReport rep;
  rep.permutation = k <= 8 ? best_permutation_exhaustive(confusion)
                           : best_permutation_hungarian(confusion);

  double matched = 0.0;
  rep.per_community = Eigen::VectorXd::Zero(k);
  for (int a = 0; a < k; ++a) {
    double size_a = confusion.row(a).sum();
    double hit = confusion(a, rep.permutation[static_cast<std::size_t>(a)]);
    matched += hit;
    rep.per_community[a] = size_a > 0.0 ? 1.0 - hit / size_a : 0.0;
  }
  rep.overall = n > 0 ? 1.0 - matched / n : 0.0;
  return rep;
}

// Spectral norm of (A - P) by power iteration on the symmetric difference.
// Squared applications make the iteration indifferent to the sign of the
// extreme eigenvalue; the stop rule is a residual test for the squared
// operator at relative tolerance tol.
inline double spectral_norm_deviation(const SparseSymGraph& a, const Eigen::MatrixXd& p,
                                      double tol = 1e-6, int max_iters = 20000) {
  if (a.size() != p.rows() || p.rows() != p.cols())
    throw SizeMismatch("graph and expected matrix differ in size");
  const Eigen::Index n = p.rows();
  if (n == 0) return 0.0;

  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.resize(n);
    a.multiply(x.data(), y.data());
    y.noalias() -= p * x;
  };

  CounterRng rng(0x5d3c1f2ab4e69870ULL, RngDomain::power_iter);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 2.0 * rng.next_unit() - 1.0;
  v.normalize();

  Eigen::VectorXd w(n), w2(n);
  double sigma = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    apply(v, w);
    double norm_w = w.norm();
    if (norm_w <= 1e-300) return 0.0;  // v in the null space and D tiny
    apply(w, w2);
    double r2 = norm_w * norm_w;  // Rayleigh quotient of D^2 at v
    sigma = norm_w;
    if ((w2 - r2 * v).norm() <= tol * std::max(1.0, r2)) break;
    v = w2 / w2.norm();
  }
  return sigma;
}

// Smallest singular value of p above the numerical-rank cutoff
// 1e-9 * ||p||; zero for the (numerically) zero matrix.
inline double gamma_n(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols()) throw SizeMismatch("matrix must be square");
  if (p.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
  Eigen::VectorXd sv = es.eigenvalues().cwiseAbs();
  double norm = sv.maxCoeff();
  double cutoff = 1e-9 * norm;
  double smallest = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff && (smallest == 0.0 || sv[i] < smallest)) smallest = sv[i];
  return smallest;
}

// tau_k = (sum_{i in C_k} psi_i^2)(sum_{i in C_k} psi_i^-2), the
// heterogeneity measure entering the degree-corrected bound.
inline Eigen::VectorXd heterogeneity_tau(const Eigen::VectorXd& psi, const std::vector<int>& z) {
  if (psi.size() != static_cast<Eigen::Index>(z.size()))
    throw SizeMismatch("psi and label vector differ in length");
  int k = 0;
  for (int label : z) k = std::max(k, label + 1);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd inv_sq = Eigen::VectorXd::Zero(k);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (psi[i] <= 0.0) throw InvalidDistribution("psi entries must be positive");
    int c = z[static_cast<std::size_t>(i)];
    sq[c] += psi[i] * psi[i];
    inv_sq[c] += 1.0 / (psi[i] * psi[i]);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < k; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw EmptyCommunity("community " + std::to_string(c) + " has no members");
  return sq.cwiseProduct(inv_sq);
}

// Signal-strength and concentration quantities entering the
// misclassification bounds, computed on a generated instance with known
// parameters.
struct BoundDiagnostics {
  double alpha = 0.0;        // max entry over all B^(t)
  double lambda = 0.0;       // lambda * alpha = smallest eigenvalue across the B^(t)
  double gamma = 0.0;        // smallest nonzero singular value of P
  double spectral_dev = 0.0; // ||A - P||
  Eigen::VectorXd tau;       // heterogeneity per community (psi = 1 if absent)
  int n_prime = 0;
  int n_prime_min = 0;       // size of the smallest community within the kept set
};

inline BoundDiagnostics compute_bound_diagnostics(const ModelParams& params,
                                                      const GroundTruth& gt,
                                                      const TruncationResult& tr) {
  BoundDiagnostics d;
  double min_layer_eig = std::numeric_limits<double>::infinity();
  for (const auto& b : params.b_stack) {
    d.alpha = std::max(d.alpha, b.maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
    min_layer_eig = std::min(min_layer_eig, es.eigenvalues().minCoeff());
  }
  d.lambda = d.alpha > 0.0 ? min_layer_eig / d.alpha : 0.0;

  Eigen::MatrixXd p = expected_sum_matrix(gt, tr.kept, params.b_stack, params.psi);
  d.gamma = gamma_n(p);
  d.spectral_dev = spectral_norm_deviation(tr.sub, p);

  Eigen::VectorXd psi = params.psi ? *params.psi : Eigen::VectorXd::Ones(gt.size());
  d.tau = heterogeneity_tau(psi, gt.z);

  d.n_prime = static_cast<int>(tr.kept.size());
  std::vector<int> kept_counts(static_cast<std::size_t>(gt.k), 0);
  for (int idx : tr.kept) ++kept_counts[static_cast<std::size_t>(gt.z[static_cast<std::size_t>(idx)])];
  d.n_prime_min = *std::min_element(kept_counts.begin(), kept_counts.end());
  return d;
}

}  // namespace sumspec
