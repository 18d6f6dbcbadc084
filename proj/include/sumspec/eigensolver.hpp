#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sumspec/error.hpp"
#include "sumspec/graph.hpp"
#include "sumspec/rng.hpp"

namespace sumspec {

// Leading eigenpairs of a symmetric operator, ordered by descending
// absolute eigenvalue. kept maps embedding rows back to original vertex
// indices (identity unless a truncation produced the operator).
struct Embedding {
  Eigen::MatrixXd vectors;        // n' x k, column-orthonormal
  Eigen::VectorXd values;         // length k, |values| non-increasing
  std::vector<int> kept;          // row -> original vertex index
  Eigen::VectorXd residuals;      // achieved ||A u - lambda u|| per pair
  double boundary_gap = -1.0;     // |lambda_k| - |lambda_{k+1}| estimate; a
                                  // near-zero gap means the returned subspace
                                  // is an arbitrary completion. -1 when k
                                  // exhausts the spectrum.
};

struct EigOptions {
  double tol = 1e-8;       // residual tolerance, relative to max(1, |lambda|)
  int max_cycles = 0;      // restart-cycle cap; 0 means 300 * k
  std::uint64_t seed = 0;  // start vectors derive from this
};

// Operator adapters. Anything with size() and multiply(x, y) works.
struct SparseGraphOperator {
  const SparseSymGraph& graph;
  Eigen::Index size() const { return graph.size(); }
  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.resize(x.size());
    graph.multiply(x.data(), y.data());
  }
};

struct DenseSymOperator {
  const Eigen::MatrixXd& mat;
  Eigen::Index size() const { return mat.rows(); }
  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const { y.noalias() = mat * x; }
};

namespace detail {

// Orthogonalize w against the first j columns of v (two classical
// Gram-Schmidt passes), accumulating the coefficients into h.
inline void orthogonalize(const Eigen::MatrixXd& v, Eigen::Index j, Eigen::VectorXd& w,
                          Eigen::VectorXd& h) {
  h = v.leftCols(j).transpose() * w;
  w.noalias() -= v.leftCols(j) * h;
  Eigen::VectorXd h2 = v.leftCols(j).transpose() * w;
  w.noalias() -= v.leftCols(j) * h2;
  h += h2;
}

// Deterministic unit vector orthogonal to the first j columns of v.
inline Eigen::VectorXd fresh_direction(const Eigen::MatrixXd& v, Eigen::Index j, CounterRng& rng) {
  Eigen::Index n = v.rows();
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = 2.0 * rng.next_unit() - 1.0;
    Eigen::VectorXd h;
    if (j > 0) orthogonalize(v, j, w, h);
    double norm = w.norm();
    if (norm > 1e-8) return w / norm;
  }
  throw ConvergenceFailure("could not generate a fresh orthogonal direction");
}

}  // namespace detail

// Thick-restart Lanczos with full reorthogonalization. Ritz pairs are
// selected by largest absolute value, so both ends of the spectrum are
// tracked in one solve; restart keeps the wanted pairs plus a buffer.
// Exact-arithmetic breakdown (invariant subspace found early) is handled
// by injecting a fresh deterministic direction.
template <class Op>
Embedding leading_eigenpairs(const Op& op, int k, const EigOptions& opt = {}) {
  const Eigen::Index n = op.size();
  if (k < 1) throw DegenerateInput("eigenpair count must be positive");
  if (k > n) throw KTooLarge("requested " + std::to_string(k) + " eigenpairs of a " +
                             std::to_string(n) + "-dimensional operator");

  const Eigen::Index m = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * k + 16, 32));
  const int max_cycles = opt.max_cycles > 0 ? opt.max_cycles : 300 * k;

  CounterRng rng(opt.seed, RngDomain::eigsolve);
  Eigen::MatrixXd basis(n, m);
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(m, m);  // basis' A basis
  basis.col(0) = detail::fresh_direction(basis, 0, rng);

  Eigen::Index filled = 1;       // basis columns present
  Eigen::Index processed = 0;    // columns whose A-image is reflected in proj
  double coupling = 0.0;         // norm of the residual leaving the basis
  Eigen::VectorXd leftover(n);   // that residual direction (unnormalized)

  // Comparator: largest |theta| first; ties resolved to keep order stable.
  auto by_abs_desc = [](const Eigen::VectorXd& theta) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(theta.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
      double fa = std::abs(theta[a]), fb = std::abs(theta[b]);
      if (fa != fb) return fa > fb;
      if (theta[a] != theta[b]) return theta[a] > theta[b];
      return a < b;
    });
    return idx;
  };

  Eigen::VectorXd w(n), h;
  double worst_residual = std::numeric_limits<double>::quiet_NaN();

  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    // Extend the basis to m columns.
    while (processed < m) {
      Eigen::VectorXd x = basis.col(processed);
      op.multiply(x, w);
      detail::orthogonalize(basis, filled, w, h);
      proj.col(processed).head(filled) = h;
      proj.row(processed).head(filled) = h.transpose();
      double beta = w.norm();
      if (processed + 1 < m) {
        if (filled == processed + 1) {  // the next column does not exist yet
          if (beta > 1e-13) {
            basis.col(filled) = w / beta;
            proj(filled, processed) = beta;
            proj(processed, filled) = beta;
          } else {
            basis.col(filled) = detail::fresh_direction(basis, filled, rng);
            proj(filled, processed) = 0.0;
            proj(processed, filled) = 0.0;
          }
          ++filled;
        }
      } else {
        coupling = beta;
        leftover = w;
      }
      ++processed;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(proj.topLeftCorner(m, m));
    const Eigen::VectorXd& theta = small.eigenvalues();
    const Eigen::MatrixXd& s = small.eigenvectors();
    auto order = by_abs_desc(theta);

    // Residual of Ritz pair i is |coupling * s(m-1, i)|.
    bool converged = true;
    worst_residual = 0.0;
    for (int c = 0; c < k; ++c) {
      Eigen::Index i = order[static_cast<std::size_t>(c)];
      double res = std::abs(coupling * s(m - 1, i));
      worst_residual = std::max(worst_residual, res / std::max(1.0, std::abs(theta[i])));
      if (res > opt.tol * std::max(1.0, std::abs(theta[i]))) converged = false;
    }

    if (converged || coupling <= 1e-13) {
      Embedding emb;
      emb.values.resize(k);
      emb.vectors.resize(n, k);
      for (int c = 0; c < k; ++c) {
        Eigen::Index i = order[static_cast<std::size_t>(c)];
        emb.values[c] = theta[i];
        emb.vectors.col(c) = basis.leftCols(m) * s.col(i);
      }
      if (k < n && k < m) {
        double next = std::abs(theta[order[static_cast<std::size_t>(k)]]);
        emb.boundary_gap = std::abs(emb.values[k - 1]) - next;
      }
      // Clean orthonormalization in eigenvalue order.
      for (int c = 0; c < k; ++c) {
        for (int p = 0; p < c; ++p)
          emb.vectors.col(c) -= emb.vectors.col(p).dot(emb.vectors.col(c)) * emb.vectors.col(p);
        double norm = emb.vectors.col(c).norm();
        if (norm < 1e-10) {
          emb.vectors.col(c) = detail::fresh_direction(emb.vectors, c, rng);
          norm = 1.0;
        }
        emb.vectors.col(c) /= norm;
      }
      // Explicit residual verification.
      emb.residuals.resize(k);
      bool verified = true;
      for (int c = 0; c < k; ++c) {
        Eigen::VectorXd x = emb.vectors.col(c);
        op.multiply(x, w);
        emb.residuals[c] = (w - emb.values[c] * emb.vectors.col(c)).norm();
        if (emb.residuals[c] > opt.tol * std::max(1.0, std::abs(emb.values[c])))
          verified = false;
      }
      if (verified || coupling <= 1e-13) {
        // Sign convention: first decisively nonzero coordinate positive.
        for (int c = 0; c < k; ++c) {
          double cutoff = 1e-8 * emb.vectors.col(c).cwiseAbs().maxCoeff();
          for (Eigen::Index i = 0; i < n; ++i) {
            double v = emb.vectors(i, c);
            if (std::abs(v) > cutoff) {
              if (v < 0.0) emb.vectors.col(c) = -emb.vectors.col(c);
              break;
            }
          }
        }
        emb.kept.resize(static_cast<std::size_t>(n));
        std::iota(emb.kept.begin(), emb.kept.end(), 0);
        return emb;
      }
      // fall through to a restart when the explicit check disagrees
    }

    // Thick restart: keep the wanted pairs plus a buffer, both ends mixed.
    Eigen::Index keep = std::min<Eigen::Index>(k + 8, m - 2);
    keep = std::max<Eigen::Index>(keep, std::min<Eigen::Index>(k, m - 2));
    Eigen::MatrixXd kept_vecs(n, keep);
    Eigen::VectorXd kept_theta(keep);
    Eigen::VectorXd kept_coupling(keep);
    for (Eigen::Index c = 0; c < keep; ++c) {
      Eigen::Index i = order[static_cast<std::size_t>(c)];
      kept_vecs.col(c) = basis.leftCols(m) * s.col(i);
      kept_theta[c] = theta[i];
      kept_coupling[c] = coupling * s(m - 1, i);
    }
    basis.leftCols(keep) = kept_vecs;
    basis.col(keep) = leftover / coupling;
    proj.setZero();
    for (Eigen::Index c = 0; c < keep; ++c) {
      proj(c, c) = kept_theta[c];
      proj(c, keep) = kept_coupling[c];
      proj(keep, c) = kept_coupling[c];
    }
    filled = keep + 1;
    processed = keep;  // kept columns are already reflected in proj
  }

  throw ConvergenceFailure("eigensolver did not converge within " + std::to_string(max_cycles) +
                           " cycles (worst relative residual " + std::to_string(worst_residual) +
                           ")");
}

inline Embedding leading_eigenpairs(const SparseSymGraph& a, int k, const EigOptions& opt = {}) {
  return leading_eigenpairs(SparseGraphOperator{a}, k, opt);
}

// The kmax largest absolute eigenvalues, descending. Emitted for manual
// selection of the community count; no threshold is applied here.
template <class Op>
Eigen::VectorXd scree_values(const Op& op, int kmax, const EigOptions& opt = {}) {
  Embedding emb = leading_eigenpairs(op, kmax, opt);
  return emb.values.cwiseAbs();
}

inline Eigen::VectorXd scree_values(const SparseSymGraph& a, int kmax, const EigOptions& opt = {}) {
  return scree_values(SparseGraphOperator{a}, kmax, opt);
}

}  // namespace sumspec
