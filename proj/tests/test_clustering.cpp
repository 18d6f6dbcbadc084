#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sumspec/clustering.hpp"
#include "sumspec/rng.hpp"

using namespace sumspec;

namespace {

// recompute the objective from (assign, centers)
double kmeans_objective(const Eigen::MatrixXd& rows, const RowClustering& rc) {
  double o = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    o += (rows.row(i) - rc.centers.row(rc.assign[static_cast<std::size_t>(i)])).squaredNorm();
  return o;
}

double kmedian_objective(const Eigen::MatrixXd& rows, const RowClustering& rc) {
  double o = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    o += (rows.row(i) - rc.centers.row(rc.assign[static_cast<std::size_t>(i)])).norm();
  return o;
}

Eigen::MatrixXd random_rows(int m, int d, std::uint64_t seed) {
  Eigen::MatrixXd rows(m, d);
  CounterRng rng(seed, RngDomain::cell);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) rows(i, j) = 2.0 * rng.next_unit() - 1.0;
  return rows;
}

}  // namespace

TEST_CASE("kmeans separates duplicated unit vectors perfectly") {
  Eigen::MatrixXd rows(6, 2);
  rows << 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1;
  auto rc = approx_kmeans(rows, 2, 5, 11);
  CHECK(rc.objective == Catch::Approx(0.0).margin(1e-15));
  CHECK(rc.assign[0] == rc.assign[1]);
  CHECK(rc.assign[1] == rc.assign[2]);
  CHECK(rc.assign[3] == rc.assign[4]);
  CHECK(rc.assign[4] == rc.assign[5]);
  CHECK(rc.assign[0] != rc.assign[3]);
}

TEST_CASE("kmeans on identical rows repairs the empty cluster") {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Ones(5, 2);
  auto rc = approx_kmeans(rows, 2, 1, 3);
  CHECK(rc.objective == Catch::Approx(0.0).margin(1e-15));
  CHECK(rc.repair_events >= 1);
}

TEST_CASE("kmeans on the unit square matches the hand-computed optimum") {
  Eigen::MatrixXd rows(4, 2);
  rows << 0, 0, 1, 0, 0, 1, 1, 1;
  auto rc = approx_kmeans(rows, 2, 10, 17);
  CHECK(rc.objective == Catch::Approx(1.0));
  CHECK(oracles::brute_force_kmeans(rows, 2) == Catch::Approx(1.0));
}

TEST_CASE("kmeans objective is consistent with assign and centers") {
  auto rows = random_rows(40, 3, 99);
  auto rc = approx_kmeans(rows, 4, 8, 5);
  CHECK(rc.objective == Catch::Approx(kmeans_objective(rows, rc)).epsilon(1e-9));
  // every point at its nearest center
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double own = (rows.row(i) - rc.centers.row(rc.assign[static_cast<std::size_t>(i)])).squaredNorm();
    for (Eigen::Index c = 0; c < rc.centers.rows(); ++c)
      CHECK(own <= (rows.row(i) - rc.centers.row(c)).squaredNorm() + 1e-12);
  }
}

TEST_CASE("kmeans matches exhaustive partition search on small instances") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    int m = 5 + static_cast<int>(seed % 4);  // 5..8
    int k = 2 + static_cast<int>(seed % 3);  // 2..4
    auto rows = random_rows(m, 2, seed * 7);
    auto rc = approx_kmeans(rows, k, 64, seed);
    double oracle = oracles::brute_force_kmeans(rows, k);
    CHECK(rc.objective == Catch::Approx(oracle).margin(1e-9));
  }
}

TEST_CASE("kmeans rejects fewer rows than clusters") {
  CHECK_THROWS_AS(approx_kmeans(Eigen::MatrixXd::Ones(2, 2), 3, 1, 0), DegenerateInput);
}

TEST_CASE("normalize_rows closed forms") {
  SECTION("3-4-5 row and a zero row") {
    Eigen::MatrixXd u(2, 2);
    u << 3, 4, 0, 0;
    auto nr = normalize_rows(u);
    REQUIRE(nr.nonzero == std::vector<int>{0});
    CHECK(nr.rows(0, 0) == Catch::Approx(0.6));
    CHECK(nr.rows(0, 1) == Catch::Approx(0.8));
  }
  SECTION("unit rows are unchanged") {
    Eigen::MatrixXd u(2, 2);
    u << 1, 0, 0, -1;
    auto nr = normalize_rows(u);
    CHECK((nr.rows - u).norm() < 1e-15);
    CHECK(nr.nonzero == std::vector<int>{0, 1});
  }
  SECTION("all-zero matrix yields empty output") {
    auto nr = normalize_rows(Eigen::MatrixXd::Zero(3, 2));
    CHECK(nr.nonzero.empty());
    CHECK(nr.rows.rows() == 0);
  }
}

TEST_CASE("kmedian separates antipodal groups") {
  Eigen::MatrixXd rows(6, 2);
  rows << 1, 0, 1, 0, 1, 0, -1, 0, -1, 0, -1, 0;
  auto rc = approx_kmedian(rows, 2, 5, 23);
  CHECK(rc.objective == Catch::Approx(0.0).margin(1e-12));
  CHECK(rc.assign[0] == rc.assign[2]);
  CHECK(rc.assign[3] == rc.assign[5]);
  CHECK(rc.assign[0] != rc.assign[3]);
}

TEST_CASE("kmedian of collinear points sits at the median") {
  Eigen::MatrixXd rows(3, 1);
  rows << 0, 1, 10;
  auto rc = approx_kmedian(rows, 1, 3, 7);
  CHECK(rc.centers(0, 0) == Catch::Approx(1.0).margin(1e-9));
  CHECK(rc.objective == Catch::Approx(10.0).margin(1e-9));
}

TEST_CASE("kmedian with k equal to the row count is exact") {
  auto rows = random_rows(5, 3, 13);
  auto rc = approx_kmedian(rows, 5, 4, 1);
  CHECK(rc.objective == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("kmedian matches exhaustive partition search on small instances") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    int m = 5 + static_cast<int>(seed % 3);  // 5..7
    int k = 2 + static_cast<int>(seed % 2);  // 2..3
    auto rows = random_rows(m, 2, seed * 13 + 1);
    auto rc = approx_kmedian(rows, k, 64, seed);
    double oracle = oracles::brute_force_kmedian(rows, k);
    CHECK(rc.objective == Catch::Approx(oracle).margin(1e-7));
    CHECK(rc.objective == Catch::Approx(kmedian_objective(rows, rc)).epsilon(1e-9));
  }
}

TEST_CASE("row permutation preserves the clustering on separated data") {
  // well-separated blobs: the global optimum is unique, so any seeding
  // discipline lands on the same partition
  Eigen::MatrixXd rows(9, 2);
  rows << 0, 0, 0.01, 0, 0, 0.01, 5, 5, 5.01, 5, 5, 5.01, -5, 5, -5.01, 5, -5, 5.01;
  auto rc = approx_kmeans(rows, 3, 8, 77);

  std::vector<int> perm{4, 7, 0, 2, 8, 1, 5, 3, 6};
  Eigen::MatrixXd shuffled(9, 2);
  for (int i = 0; i < 9; ++i) shuffled.row(perm[static_cast<std::size_t>(i)]) = rows.row(i);
  auto rc2 = approx_kmeans(shuffled, 3, 8, 77);

  CHECK(rc.objective == Catch::Approx(rc2.objective).margin(1e-12));
  // partitions agree up to label names
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      bool same1 = rc.assign[static_cast<std::size_t>(i)] == rc.assign[static_cast<std::size_t>(j)];
      bool same2 = rc2.assign[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ==
                   rc2.assign[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
      CHECK(same1 == same2);
    }
}

TEST_CASE("best-of-restarts never loses to a prefix of its own restarts") {
  auto rows = random_rows(30, 2, 321);
  auto best16 = approx_kmeans(rows, 3, 16, 9);
  auto best8 = approx_kmeans(rows, 3, 8, 9);
  auto best1 = approx_kmeans(rows, 3, 1, 9);
  CHECK(best16.objective <= best8.objective + 1e-12);
  CHECK(best8.objective <= best1.objective + 1e-12);
}
