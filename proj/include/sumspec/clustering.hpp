#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sumspec/error.hpp"
#include "sumspec/rng.hpp"

namespace sumspec {

// Row clustering of an embedding: labels, the center matrix, and the
// objective value (sum of squared distances for k-means, sum of distances
// for k-median).
struct RowClustering {
  std::vector<int> assign;   // length m, values in [0, k)
  Eigen::MatrixXd centers;   // k x d, row c is the center of cluster c
  double objective = 0.0;
  int repair_events = 0;     // empty-cluster reseeds across the winning restart
};

namespace detail {

inline double sq_dist(const Eigen::MatrixXd& rows, Eigen::Index i, const Eigen::MatrixXd& centers,
                      Eigen::Index c) {
  return (rows.row(i) - centers.row(c)).squaredNorm();
}

// Nearest center assignment; ties break to the lowest center index.
template <class Dist>
void assign_nearest(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& centers, Dist&& dist,
                    std::vector<int>& assign) {
  const Eigen::Index m = rows.rows();
  const Eigen::Index k = centers.rows();
  assign.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    int best = 0;
    double best_d = dist(i, 0);
    for (Eigen::Index c = 1; c < k; ++c) {
      double d = dist(i, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assign[static_cast<std::size_t>(i)] = best;
  }
}

// Reseed each empty cluster at the point farthest from its current
// center, stealing only from clusters that keep at least one member.
template <class Dist>
int repair_empty_clusters(const Eigen::MatrixXd& rows, Eigen::MatrixXd& centers, Dist&& dist,
                          std::vector<int>& assign) {
  const Eigen::Index m = rows.rows();
  const Eigen::Index k = centers.rows();
  int repairs = 0;
  while (true) {
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    Eigen::Index empty = -1;
    for (Eigen::Index c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] == 0) {
        empty = c;
        break;
      }
    if (empty < 0) break;
    Eigen::Index donor = -1;
    double farthest = -1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      int a = assign[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(a)] < 2) continue;
      double d = dist(i, a);
      if (d > farthest) {
        farthest = d;
        donor = i;
      }
    }
    if (donor < 0) throw DegenerateInput("no donor row available for empty-cluster repair");
    centers.row(empty) = rows.row(donor);
    assign[static_cast<std::size_t>(donor)] = static_cast<int>(empty);
    ++repairs;
  }
  return repairs;
}

// D^power-weighted seeding (kmeans++ uses power 2, the k-median variant
// uses power 1).
inline Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& rows, int k, CounterRng& rng,
                                    double power) {
  const Eigen::Index m = rows.rows();
  Eigen::MatrixXd centers(k, rows.cols());
  centers.row(0) = rows.row(static_cast<Eigen::Index>(rng.next_index(static_cast<std::size_t>(m))));
  Eigen::VectorXd dist2(m);
  for (Eigen::Index i = 0; i < m; ++i) dist2[i] = (rows.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::VectorXd weight(m);
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      weight[i] = power == 2.0 ? dist2[i] : std::pow(dist2[i], power / 2.0);
      total += weight[i];
    }
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.next_index(static_cast<std::size_t>(m)));
    } else {
      double target = rng.next_unit() * total;
      double acc = 0.0;
      pick = m - 1;
      for (Eigen::Index i = 0; i < m; ++i) {
        acc += weight[i];
        if (target < acc) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = rows.row(pick);
    for (Eigen::Index i = 0; i < m; ++i)
      dist2[i] = std::min(dist2[i], (rows.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

// Geometric median of a point set: damped Weiszfeld iteration, then the
// lowest-distance-sum candidate among the iterate, the coordinate-wise
// median, and the points themselves.
inline Eigen::VectorXd geometric_median(const Eigen::MatrixXd& pts, double tol = 1e-9,
                                        int max_steps = 200) {
  const Eigen::Index m = pts.rows();
  const Eigen::Index d = pts.cols();
  auto objective = [&](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s += (pts.row(i).transpose() - x).norm();
    return s;
  };
  Eigen::VectorXd x = pts.colwise().mean();
  for (int step = 0; step < max_steps; ++step) {
    Eigen::VectorXd num = Eigen::VectorXd::Zero(d);
    double den = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      double dist = (pts.row(i).transpose() - x).norm();
      double w = 1.0 / std::max(dist, 1e-12);
      num += w * pts.row(i).transpose();
      den += w;
    }
    Eigen::VectorXd next = num / den;
    double move = (next - x).norm();
    x = next;
    if (move <= tol * std::max(1.0, x.norm())) break;
  }
  Eigen::VectorXd best = x;
  double best_obj = objective(x);
  Eigen::VectorXd coord_median(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    std::vector<double> col(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) col[static_cast<std::size_t>(i)] = pts(i, c);
    std::sort(col.begin(), col.end());
    auto mid = static_cast<std::size_t>(m / 2);
    coord_median[c] = (m % 2 == 1) ? col[mid] : 0.5 * (col[mid - 1] + col[mid]);
  }
  if (double o = objective(coord_median); o < best_obj) {
    best = coord_median;
    best_obj = o;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::VectorXd cand = pts.row(i).transpose();
    if (double o = objective(cand); o < best_obj) {
      best = cand;
      best_obj = o;
    }
  }
  return best;
}

}  // namespace detail

// Best-of-restarts kmeans++ seeding followed by Lloyd iteration. The
// objective is ||Z X - rows||_F^2 over one-hot Z; it never increases
// across iterations and the returned value is the minimum over restarts.
inline RowClustering approx_kmeans(const Eigen::MatrixXd& rows, int k, int restarts,
                                   std::uint64_t seed) {
  const Eigen::Index m = rows.rows();
  if (k < 1) throw DegenerateInput("cluster count must be positive");
  if (m < k) throw DegenerateInput("fewer rows (" + std::to_string(m) + ") than clusters (" +
                                   std::to_string(k) + ")");
  restarts = std::max(restarts, 1);

  RowClustering best;
  best.objective = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    CounterRng rng(seed, RngDomain::kmeans, static_cast<std::uint64_t>(r));
    Eigen::MatrixXd centers = detail::seed_centers(rows, k, rng, 2.0);
    auto dist = [&](Eigen::Index i, Eigen::Index c) { return detail::sq_dist(rows, i, centers, c); };

    std::vector<int> assign;
    int repairs = 0;
    [[maybe_unused]] double prev_obj = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 1000; ++iter) {
      std::vector<int> next;
      detail::assign_nearest(rows, centers, dist, next);
      int rep = detail::repair_empty_clusters(rows, centers, dist, next);
      repairs += rep;
      bool stable = (iter > 0 && rep == 0 && next == assign);
      assign = std::move(next);
      if (stable) break;
      // update step: means per cluster
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (Eigen::Index i = 0; i < m; ++i) {
        sums.row(assign[static_cast<std::size_t>(i)]) += rows.row(i);
        ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
      }
      for (int c = 0; c < k; ++c)
        if (counts[static_cast<std::size_t>(c)] > 0)
          centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      double obj = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) obj += dist(i, assign[static_cast<std::size_t>(i)]);
      assert(obj <= prev_obj + 1e-9 * std::max(1.0, prev_obj));
      prev_obj = obj;
    }
    double obj = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) obj += dist(i, assign[static_cast<std::size_t>(i)]);
    if (obj < best.objective) {
      best.assign = assign;
      best.centers = centers;
      best.objective = obj;
      best.repair_events = repairs;
    }
  }
  return best;
}

struct NormalizedRows {
  Eigen::MatrixXd rows;       // n'' x k, unit rows
  std::vector<int> nonzero;   // indices of the retained rows, increasing
};

// Divide rows with norm above zero_tol by their norm; drop the rest.
inline NormalizedRows normalize_rows(const Eigen::MatrixXd& u, double zero_tol = 1e-12) {
  NormalizedRows out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    if (u.row(i).norm() > zero_tol) keep.push_back(i);
  out.rows.resize(static_cast<Eigen::Index>(keep.size()), u.cols());
  out.nonzero.reserve(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.rows.row(static_cast<Eigen::Index>(r)) = u.row(keep[r]) / u.row(keep[r]).norm();
    out.nonzero.push_back(static_cast<int>(keep[r]));
  }
  return out;
}

// Best-of-restarts k-median: D-weighted seeding, then alternation of
// nearest-center assignment (plain Euclidean distance) with per-cluster
// geometric-median updates. A center update is kept only if it does not
// increase that cluster's distance sum, so the objective is monotone.
inline RowClustering approx_kmedian(const Eigen::MatrixXd& rows, int k, int restarts,
                                    std::uint64_t seed) {
  const Eigen::Index m = rows.rows();
  if (k < 1) throw DegenerateInput("cluster count must be positive");
  if (m < k) throw DegenerateInput("fewer rows (" + std::to_string(m) + ") than clusters (" +
                                   std::to_string(k) + ")");
  restarts = std::max(restarts, 1);

  RowClustering best;
  best.objective = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    CounterRng rng(seed, RngDomain::kmedian, static_cast<std::uint64_t>(r));
    Eigen::MatrixXd centers = detail::seed_centers(rows, k, rng, 1.0);
    auto dist = [&](Eigen::Index i, Eigen::Index c) {
      return (rows.row(i) - centers.row(c)).norm();
    };

    std::vector<int> assign;
    int repairs = 0;
    [[maybe_unused]] double prev_obj = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 1000; ++iter) {
      std::vector<int> next;
      detail::assign_nearest(rows, centers, dist, next);
      int rep = detail::repair_empty_clusters(rows, centers, dist, next);
      repairs += rep;
      bool stable = (iter > 0 && rep == 0 && next == assign);
      assign = std::move(next);
      if (stable) break;
      for (int c = 0; c < k; ++c) {
        std::vector<Eigen::Index> members;
        for (Eigen::Index i = 0; i < m; ++i)
          if (assign[static_cast<std::size_t>(i)] == c) members.push_back(i);
        if (members.empty()) continue;
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(members.size()), rows.cols());
        for (std::size_t j = 0; j < members.size(); ++j)
          pts.row(static_cast<Eigen::Index>(j)) = rows.row(members[j]);
        Eigen::VectorXd candidate = detail::geometric_median(pts);
        double old_sum = 0.0, new_sum = 0.0;
        for (Eigen::Index i : members) {
          old_sum += (rows.row(i).transpose() - centers.row(c).transpose()).norm();
          new_sum += (rows.row(i).transpose() - candidate).norm();
        }
        if (new_sum <= old_sum) centers.row(c) = candidate.transpose();
      }
      double obj = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) obj += dist(i, assign[static_cast<std::size_t>(i)]);
      assert(obj <= prev_obj + 1e-9 * std::max(1.0, prev_obj));
      prev_obj = obj;
    }
    double obj = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) obj += dist(i, assign[static_cast<std::size_t>(i)]);
    if (obj < best.objective) {
      best.assign = assign;
      best.centers = centers;
      best.objective = obj;
      best.repair_events = repairs;
    }
  }
  return best;
}

}  // namespace sumspec
