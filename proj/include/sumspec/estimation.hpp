#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "sumspec/error.hpp"
#include "sumspec/graph.hpp"
#include "sumspec/pipeline.hpp"

namespace sumspec {

// Community proportion estimate: fraction of vertices carrying each label.
inline Eigen::VectorXd estimate_pi(const MembershipMatrix& zhat) {
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(zhat.k);
  for (int label : zhat.labels) pi[label] += 1.0;
  return pi / static_cast<double>(zhat.n);
}

// Plug-in connectivity estimates, one k x k matrix per layer. The double
// sum runs over ordered vertex pairs, so within-community edges count
// twice and the diagonal normalizer n_a(n_a - 1) matches; for a != b the
// normalizer is n_a * n_b. Blocks whose normalizer is zero are reported
// as NaN rather than imputed.
inline std::vector<Eigen::MatrixXd> estimate_B(const LayerStack& stack,
                                               const MembershipMatrix& zhat) {
  if (stack.size() != zhat.n) throw SizeMismatch("stack and membership disagree on vertex count");
  const int k = zhat.k;
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (int label : zhat.labels) counts[static_cast<std::size_t>(label)] += 1.0;

  Eigen::MatrixXd norm(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      norm(a, b) = (a == b) ? counts[static_cast<std::size_t>(a)] * (counts[static_cast<std::size_t>(a)] - 1.0)
                            : counts[static_cast<std::size_t>(a)] * counts[static_cast<std::size_t>(b)];

  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(stack.layer_count()));
  for (int t = 0; t < stack.layer_count(); ++t) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
    for (const auto& e : stack.layer(t).entries()) {
      int a = zhat.labels[static_cast<std::size_t>(e.i)];
      int b = zhat.labels[static_cast<std::size_t>(e.j)];
      m(a, b) += e.w;
      m(b, a) += e.w;
    }
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        m(a, b) = norm(a, b) > 0.0 ? m(a, b) / norm(a, b)
                                   : std::numeric_limits<double>::quiet_NaN();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace sumspec
