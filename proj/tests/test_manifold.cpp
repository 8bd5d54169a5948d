#include <doctest.h>

#include "lpslab/manifold.hpp"

using namespace lps;

TEST_CASE("path graph metric and volumes") {
  const DiscreteManifold M = DiscreteManifold::grid(1, 4);
  CHECK(M.vertex_count() == 4);
  CHECK(M.edge_count() == 3);
  CHECK(M.distance(0, 3) == doctest::Approx(3.0));
  CHECK(M.diameter() == doctest::Approx(3.0));
  CHECK(M.total_measure() == doctest::Approx(4.0));

  CHECK(M.volume(0, 0.0) == doctest::Approx(1.0));   // closed ball
  CHECK(M.volume(0, 1.5) == doctest::Approx(2.0));
  CHECK(M.volume(0, 3.0) == doctest::Approx(4.0));
  CHECK(M.volume(0, -1.0) == doctest::Approx(0.0));

  const auto b = M.ball({1, 1.0});
  REQUIRE(b.size() == 3);
  CHECK(b[0] == 0);
  CHECK(b[1] == 1);
  CHECK(b[2] == 2);

  const auto& bp = M.breakpoints();
  REQUIRE(bp.size() == 4);
  CHECK(bp[0] == doctest::Approx(0.0));
  CHECK(bp[3] == doctest::Approx(3.0));

  const auto r1 = M.radii(1);
  REQUIRE(r1.size() == 3);  // 0, 1, 2
  CHECK(r1[2] == doctest::Approx(2.0));
}

TEST_CASE("annulus membership is the dyadic shell") {
  const DiscreteManifold M = DiscreteManifold::grid(1, 5);
  const BallSpec B{2, 0.5};
  const auto a0 = M.annulus(B, 0);  // (0.5, 1]
  REQUIRE(a0.size() == 2);
  CHECK(a0[0] == 1);
  CHECK(a0[1] == 3);
  const auto a1 = M.annulus(B, 1);  // (1, 2]
  REQUIRE(a1.size() == 2);
  CHECK(a1[0] == 0);
  CHECK(a1[1] == 4);
  CHECK_THROWS_AS(M.annulus(B, -1), InvalidInput);
}

TEST_CASE("square grid counts") {
  const DiscreteManifold M = DiscreteManifold::grid(2, 3);
  CHECK(M.vertex_count() == 9);
  CHECK(M.edge_count() == 12);
  CHECK(M.neighbors(4).size() == 4);  // interior vertex
  CHECK(M.neighbors(0).size() == 2);  // corner
  CHECK(M.distance(0, 8) == doctest::Approx(4.0));  // l1 metric on the lattice
}

TEST_CASE("dumbbell glues two sheets at the central vertex") {
  const DiscreteManifold M = DiscreteManifold::dumbbell(2, 3);
  CHECK(M.vertex_count() == 17);  // 2 * 9 - 1
  CHECK(M.edge_count() == 24);
  CHECK(M.neighbors(4).size() == 8);  // shared center carries both sheets
  CHECK_THROWS_AS(DiscreteManifold::dumbbell(2, 4), InvalidInput);
}

TEST_CASE("binary tree shape") {
  const DiscreteManifold M = DiscreteManifold::binary_tree(2);
  CHECK(M.vertex_count() == 7);
  CHECK(M.edge_count() == 6);
  CHECK(M.diameter() == doctest::Approx(4.0));  // leaf to leaf through the root
}

TEST_CASE("construction rejects malformed models") {
  const Eigen::VectorXd mu2 = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(DiscreteManifold::from_parts(mu2, {}), InvalidInput);  // disconnected
  CHECK_THROWS_AS(DiscreteManifold::from_parts(mu2, {{0, 0, 1.0, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(DiscreteManifold::from_parts(mu2, {{0, 1, -1.0, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(
      DiscreteManifold::from_parts(mu2, {{0, 1, 1.0, 1.0}, {1, 0, 2.0, 1.0}}),
      InvalidInput);  // duplicate edge in either orientation
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(2);
  bad[1] = 0.0;
  CHECK_THROWS_AS(DiscreteManifold::from_parts(bad, {{0, 1, 1.0, 1.0}}), InvalidInput);
}

TEST_CASE("edge lengths drive the metric") {
  Eigen::VectorXd mu = Eigen::VectorXd::Ones(3);
  std::vector<Edge> edges = {{0, 1, 1.0, 2.5}, {1, 2, 1.0, 0.5}};
  const DiscreteManifold M = DiscreteManifold::from_parts(mu, edges);
  CHECK(M.distance(0, 2) == doctest::Approx(3.0));
  CHECK(M.volume(2, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("volume exponent of a path is close to one") {
  const DiscreteManifold M = DiscreteManifold::grid(1, 64);
  const FitReport rep = doubling_fit(M, 2.0, 8.0);
  CHECK(rep.constant("N") > 0.85);
  CHECK(rep.constant("N") < 1.15);
  CHECK(rep.constant("doubling_C") >= 1.0);
  CHECK_FALSE(rep.has_note("doubling suspect"));
  CHECK_FALSE(rep.columns.empty());
  CHECK_FALSE(rep.rows.empty());
}

TEST_CASE("volume exponent of the plane is close to two") {
  const DiscreteManifold M = DiscreteManifold::grid(2, 21);
  const FitReport rep = doubling_fit(M, 2.0, 8.0);
  CHECK(rep.constant("N") > 1.6);
  CHECK(rep.constant("N") < 2.4);
}

TEST_CASE("exponential growth trips the doubling detector") {
  const DiscreteManifold M = DiscreteManifold::binary_tree(8);
  const FitReport rep = doubling_fit(M, 2.0, 6.0);
  CHECK(rep.constant("N") > 4.0);
  CHECK(rep.has_note("doubling suspect"));
}
