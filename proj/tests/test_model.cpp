#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sumspec/model.hpp"

using namespace sumspec;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("sample_memberships degenerate distribution") {
  auto gt = sample_memberships(50, vec({1.0}), 123);
  for (int label : gt.z) CHECK(label == 0);
}

TEST_CASE("sample_memberships is deterministic in the seed") {
  auto a = sample_memberships(200, vec({0.3, 0.7}), 99);
  auto b = sample_memberships(200, vec({0.3, 0.7}), 99);
  CHECK(a.z == b.z);
  auto c = sample_memberships(200, vec({0.3, 0.7}), 100);
  CHECK(a.z != c.z);
}

TEST_CASE("sample_memberships balanced counts concentrate") {
  const int n = 10000;
  auto gt = sample_memberships(n, vec({0.5, 0.5}), 2024);
  auto sizes = gt.community_sizes();
  double slack = 4.0 * std::sqrt(n * 0.25);
  CHECK(std::abs(sizes[0] - n / 2) < slack);
}

TEST_CASE("sample_memberships rejects malformed distributions") {
  CHECK_THROWS_AS(sample_memberships(10, vec({0.5, 0.4}), 1), InvalidDistribution);
  CHECK_THROWS_AS(sample_memberships(10, vec({-0.5, 1.5}), 1), InvalidDistribution);
}

TEST_CASE("one-hot membership matrix matches labels") {
  GroundTruth gt{3, {0, 2, 1, 2}};
  Eigen::MatrixXd z = gt.as_matrix();
  REQUIRE(z.rows() == 4);
  REQUIRE(z.cols() == 3);
  for (int i = 0; i < 4; ++i) {
    CHECK(z.row(i).sum() == 1.0);
    CHECK(z(i, gt.z[static_cast<std::size_t>(i)]) == 1.0);
  }
}

TEST_CASE("sample_dsbm_layer extreme probabilities") {
  auto gt = sample_memberships(20, vec({0.5, 0.5}), 7);
  auto empty = sample_dsbm_layer(gt, Eigen::MatrixXd::Zero(2, 2), 7);
  CHECK(empty.edge_count() == 0);
  auto complete = sample_dsbm_layer(gt, Eigen::MatrixXd::Ones(2, 2), 7);
  CHECK(complete.edge_count() == 20 * 19 / 2);
}

TEST_CASE("sample_dsbm_layer edge count matches the binomial moment") {
  GroundTruth gt{1, std::vector<int>(200, 0)};
  Eigen::MatrixXd b(1, 1);
  b << 0.3;
  const int runs = 100;
  const double pairs = 200.0 * 199.0 / 2.0;
  double total = 0.0;
  for (int r = 0; r < runs; ++r)
    total += static_cast<double>(sample_dsbm_layer(gt, b, 5000 + static_cast<std::uint64_t>(r)).edge_count());
  double mean = total / runs;
  double sigma = std::sqrt(0.3 * 0.7 * pairs / runs);
  CHECK(std::abs(mean - 0.3 * pairs) < 4.0 * sigma);
}

TEST_CASE("ddcbm with unit psi reduces to dsbm exactly") {
  auto gt = sample_memberships(60, vec({0.4, 0.6}), 31);
  Eigen::MatrixXd b = mat2(0.4, 0.1, 0.1, 0.4);
  auto dsbm = sample_dsbm_layer(gt, b, 77, 3);
  auto ddcbm = sample_ddcbm_layer(gt, Eigen::VectorXd::Ones(60), b, 77, 3);
  REQUIRE(dsbm.edge_count() == ddcbm.edge_count());
  for (std::size_t e = 0; e < dsbm.entries().size(); ++e) {
    CHECK(dsbm.entries()[e].i == ddcbm.entries()[e].i);
    CHECK(dsbm.entries()[e].j == ddcbm.entries()[e].j);
  }
}

TEST_CASE("ddcbm rejects non-normalized psi") {
  auto gt = sample_memberships(10, vec({1.0}), 3);
  Eigen::VectorXd psi = Eigen::VectorXd::Constant(10, 0.5);
  CHECK_THROWS_AS(sample_ddcbm_layer(gt, psi, Eigen::MatrixXd::Ones(1, 1), 1),
                  IdentifiabilityViolation);
}

TEST_CASE("ddcbm zero connectivity gives the empty graph") {
  auto gt = sample_memberships(15, vec({0.5, 0.5}), 11);
  auto psi = sample_psi_uniform(gt, 11);
  CHECK(sample_ddcbm_layer(gt, psi, Eigen::MatrixXd::Zero(2, 2), 11).edge_count() == 0);
}

TEST_CASE("halved psi halves the expected degree") {
  // community of n vertices, all psi = 1 except vertex 0 at 0.5
  const int n = 80;
  GroundTruth gt{1, std::vector<int>(n, 0)};
  Eigen::VectorXd psi = Eigen::VectorXd::Ones(n);
  psi[0] = 0.5;
  Eigen::MatrixXd b(1, 1);
  b << 0.4;
  const int runs = 200;
  double deg0 = 0.0, deg1 = 0.0;
  for (int r = 0; r < runs; ++r) {
    auto g = sample_ddcbm_layer(gt, psi, b, 9000 + static_cast<std::uint64_t>(r));
    auto sums = g.row_sums();
    deg0 += static_cast<double>(sums[0]);
    deg1 += static_cast<double>(sums[1]);
  }
  deg0 /= runs;
  deg1 /= runs;
  // E deg(v0) = 0.5*0.4*(n-1); E deg(v1) = 0.4*(n-2) + 0.5*0.4
  double expected0 = 0.5 * 0.4 * (n - 1);
  double expected1 = 0.4 * (n - 2) + 0.5 * 0.4;
  double sigma = std::sqrt(0.4 * (n - 1) / runs);  // crude but conservative
  CHECK(std::abs(deg0 - expected0) < 4.0 * sigma);
  CHECK(std::abs(deg1 - expected1) < 4.0 * sigma);
}

TEST_CASE("normalize_psi closed forms") {
  SECTION("constant raw weights become ones") {
    auto psi = normalize_psi(Eigen::VectorXd::Constant(4, 3.7), {0, 0, 1, 1});
    for (int i = 0; i < 4; ++i) CHECK(psi[i] == 1.0);
  }
  SECTION("single community (2,4)") {
    auto psi = normalize_psi(vec({2.0, 4.0}), {0, 0});
    CHECK(psi[0] == Catch::Approx(0.5));
    CHECK(psi[1] == 1.0);
  }
  SECTION("two communities (2,4 | 3)") {
    auto psi = normalize_psi(vec({2.0, 4.0, 3.0}), {0, 0, 1});
    CHECK(psi[0] == Catch::Approx(0.5));
    CHECK(psi[1] == 1.0);
    CHECK(psi[2] == 1.0);
  }
  SECTION("rejects nonpositive weights") {
    CHECK_THROWS_AS(normalize_psi(vec({1.0, 0.0}), {0, 0}), InvalidDistribution);
  }
}

TEST_CASE("expected_sum_matrix closed forms and rank") {
  SECTION("single community constant matrix") {
    GroundTruth gt{1, std::vector<int>(5, 0)};
    std::vector<Eigen::MatrixXd> stack(3, Eigen::MatrixXd::Constant(1, 1, 0.2));
    std::vector<int> kept{0, 1, 2, 3, 4};
    Eigen::MatrixXd p = expected_sum_matrix(gt, kept, stack);
    CHECK((p - Eigen::MatrixXd::Constant(5, 5, 0.6)).norm() < 1e-12);
  }
  SECTION("balanced two-community block structure") {
    GroundTruth gt{2, {0, 0, 1, 1}};
    std::vector<Eigen::MatrixXd> stack{mat2(0.7, 0.2, 0.2, 0.7)};
    std::vector<int> kept{0, 1, 2, 3};
    Eigen::MatrixXd p = expected_sum_matrix(gt, kept, stack);
    CHECK(p(0, 1) == Catch::Approx(0.7));
    CHECK(p(0, 0) == Catch::Approx(0.7));  // diagonal follows the formula
    CHECK(p(0, 2) == Catch::Approx(0.2));
    CHECK(p(2, 3) == Catch::Approx(0.7));
  }
  SECTION("numerical rank equals K for a nonsingular sum") {
    auto gt = sample_memberships(30, vec({0.3, 0.3, 0.4}), 5);
    Eigen::MatrixXd b(3, 3);
    b << 0.6, 0.1, 0.2, 0.1, 0.5, 0.1, 0.2, 0.1, 0.7;
    std::vector<Eigen::MatrixXd> stack{b, b};
    std::vector<int> kept(30);
    std::iota(kept.begin(), kept.end(), 0);
    Eigen::MatrixXd p = expected_sum_matrix(gt, kept, stack);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(p);
    const auto& sv = svd.singularValues();
    CHECK(sv[2] > 1e-9 * sv[0]);
    CHECK(sv[3] < 1e-9 * sv[0]);
  }
  SECTION("entries match the Bernoulli means used by the samplers") {
    auto gt = sample_memberships(12, vec({0.5, 0.5}), 8);
    Eigen::MatrixXd b1 = mat2(0.5, 0.1, 0.1, 0.5);
    Eigen::MatrixXd b2 = mat2(0.3, 0.2, 0.2, 0.1);
    std::vector<int> kept(12);
    std::iota(kept.begin(), kept.end(), 0);
    Eigen::MatrixXd p = expected_sum_matrix(gt, kept, {b1, b2});
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) {
        if (i == j) continue;
        double want = b1(gt.z[static_cast<std::size_t>(i)], gt.z[static_cast<std::size_t>(j)]) +
                      b2(gt.z[static_cast<std::size_t>(i)], gt.z[static_cast<std::size_t>(j)]);
        CHECK(p(i, j) == Catch::Approx(want));
      }
  }
}

TEST_CASE("expected_sum_matrix with psi weights rows and columns") {
  GroundTruth gt{1, {0, 0, 0}};
  Eigen::VectorXd psi = vec({1.0, 0.5, 0.25});
  std::vector<int> kept{0, 1, 2};
  Eigen::MatrixXd p =
      expected_sum_matrix(gt, kept, {Eigen::MatrixXd::Constant(1, 1, 0.8)}, psi);
  CHECK(p(0, 1) == Catch::Approx(0.4));
  CHECK(p(1, 2) == Catch::Approx(0.1));
  CHECK(p(2, 2) == Catch::Approx(0.05));
}

TEST_CASE("check_sum_nonsingular closed forms") {
  SECTION("positive diagonal sum is nonsingular") {
    Eigen::MatrixXd b = mat2(0.3, 0.0, 0.0, 0.3);
    auto r = check_sum_nonsingular({b, b});
    CHECK(r.nonsingular);
    CHECK(r.min_eigenvalue == Catch::Approx(0.6));
  }
  SECTION("rank-deficient sum is flagged") {
    Eigen::MatrixXd b = mat2(0.25, 0.25, 0.25, 0.25);
    auto r = check_sum_nonsingular({b, b});
    CHECK_FALSE(r.nonsingular);
  }
  SECTION("two-by-two eigenvalues by hand") {
    auto r = check_sum_nonsingular({mat2(0.6, 0.2, 0.2, 0.6)});
    CHECK(r.nonsingular);
    CHECK(r.min_eigenvalue == Catch::Approx(0.4));
    CHECK(r.alpha == Catch::Approx(0.6));
    CHECK(r.lambda == Catch::Approx(0.4 / 0.6));
  }
}

TEST_CASE("empirical block edge frequency converges to the connectivity entry") {
  auto gt = sample_memberships(60, vec({0.5, 0.5}), 17);
  auto sizes = gt.community_sizes();
  Eigen::MatrixXd b = mat2(0.35, 0.12, 0.12, 0.35);
  const int runs = 200;
  double cross_edges = 0.0;
  for (int r = 0; r < runs; ++r) {
    auto g = sample_dsbm_layer(gt, b, 40000 + static_cast<std::uint64_t>(r));
    for (const auto& e : g.entries())
      if (gt.z[static_cast<std::size_t>(e.i)] != gt.z[static_cast<std::size_t>(e.j)])
        cross_edges += 1.0;
  }
  double pairs = static_cast<double>(sizes[0]) * sizes[1];
  double freq = cross_edges / (pairs * runs);
  double tol = 4.0 * std::sqrt(0.12 * 0.88 / (pairs * runs));
  CHECK(std::abs(freq - 0.12) < tol);
}

TEST_CASE("model params validation") {
  ModelParams p;
  p.k = 2;
  p.pi = vec({0.5, 0.5});
  p.b_stack = {mat2(0.5, 0.1, 0.1, 0.5)};
  CHECK_NOTHROW(p.validate());
  p.b_stack = {mat2(0.5, 0.2, 0.1, 0.5)};
  CHECK_THROWS_AS(p.validate(), InvalidDistribution);  // asymmetric
  p.b_stack = {mat2(0.5, 1.1, 1.1, 0.5)};
  CHECK_THROWS_AS(p.validate(), InvalidDistribution);  // out of [0,1]
}

TEST_CASE("per-layer streams are position-independent") {
  // layer t of a stack coincides with a standalone draw keyed by the same
  // (seed, t), whatever else was sampled around it
  auto gt = sample_memberships(40, Eigen::Vector2d(0.5, 0.5), 64);
  Eigen::MatrixXd b = mat2(0.3, 0.1, 0.1, 0.3);
  ModelParams params;
  params.k = 2;
  params.pi = Eigen::Vector2d(0.5, 0.5);
  params.b_stack = {b, b, b, b};
  auto stack = sample_stack(params, gt, 64);
  for (int t = 0; t < 4; ++t) {
    auto standalone = sample_dsbm_layer(gt, b, 64, t);
    REQUIRE(standalone.entries().size() == stack.layer(t).entries().size());
    for (std::size_t e = 0; e < standalone.entries().size(); ++e) {
      CHECK(standalone.entries()[e].i == stack.layer(t).entries()[e].i);
      CHECK(standalone.entries()[e].j == stack.layer(t).entries()[e].j);
    }
  }
}
