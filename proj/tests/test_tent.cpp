#include <doctest.h>

#include <cmath>

#include "lpslab/probes.hpp"
#include "lpslab/tent.hpp"

using namespace lps;

namespace {

ConeFunction random_cone(const DiscreteManifold& M, Rng& rng, int m, double lo,
                         double hi) {
  ConeFunction F;
  F.tgrid = Eigen::VectorXd(m);
  for (int i = 0; i < m; ++i)
    F.tgrid[i] = lo * std::pow(hi / lo, double(i) / (m - 1));
  F.samples = Eigen::MatrixXd(M.vertex_count(), m);
  for (int j = 0; j < m; ++j) F.samples.col(j) = rng.gaussian_vector(M.vertex_count());
  F.geom = {ConeScaling::SqrtT, 1.0};
  return F;
}

}  // namespace

TEST_CASE("log-time trapezoid weights integrate dt/t exactly on powers") {
  Eigen::VectorXd tgrid(9);
  for (int i = 0; i < 9; ++i) tgrid[i] = std::pow(2.0, i - 4);
  const Eigen::VectorXd w = log_time_weights(tgrid);
  // int dt/t over [2^-4, 2^4] = 8 log 2; constant integrand is exact.
  CHECK(w.sum() == doctest::Approx(8.0 * std::log(2.0)).epsilon(1e-14));
  // log t is linear in the integration variable, also exact.
  double acc = 0.0;
  for (int i = 0; i < 9; ++i) acc += w[i] * std::log(tgrid[i]);
  CHECK(acc == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("area and vertical functionals share the L2 norm") {
  const DiscreteManifold M = DiscreteManifold::grid(2, 4);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const ConeFunction F = random_cone(M, rng, 16, 0.05, 20.0);
    const Eigen::VectorXd A = area_functional(M, F);
    const Eigen::VectorXd V = vertical_functional(M, F);
    const double na = lp_norm(M.measures(), A, 2.0);
    const double nv = lp_norm(M.measures(), V, 2.0);
    CHECK(std::abs(na - nv) <= 1e-12 * nv);
  }
}

TEST_CASE("vertical functional is a plain per-vertex time integral") {
  const DiscreteManifold M = DiscreteManifold::grid(1, 3);
  Rng rng(9);
  const ConeFunction F = random_cone(M, rng, 12, 0.1, 10.0);
  const Eigen::VectorXd w = log_time_weights(F.tgrid);
  const Eigen::VectorXd V = vertical_functional(M, F);
  for (int x = 0; x < 3; ++x) {
    double acc = 0.0;
    for (int i = 0; i < 12; ++i) acc += w[i] * F.samples(x, i) * F.samples(x, i);
    CHECK(V[x] == doctest::Approx(std::sqrt(acc)).epsilon(1e-13));
  }
}

TEST_CASE("area functional on a singleton cone column") {
  // One vertex carries a unit sample at a single time; only cones whose
  // aperture reaches that vertex see it, weighted by mu / Vol.
  const DiscreteManifold M = DiscreteManifold::grid(1, 3);
  ConeFunction F;
  F.tgrid = Eigen::VectorXd(8);
  for (int i = 0; i < 8; ++i) F.tgrid[i] = 0.25 * std::pow(2.0, i);  // 0.25 .. 32
  F.samples = Eigen::MatrixXd::Zero(3, 8);
  F.samples(0, 4) = 1.0;  // t = 4, radius sqrt(4) = 2 covers the whole path
  F.geom = {ConeScaling::SqrtT, 1.0};
  const Eigen::VectorXd w = log_time_weights(F.tgrid);
  const Eigen::VectorXd A = area_functional(M, F);
  const double contrib = w[4] * 1.0 * 1.0 / M.volume(0, 2.0);  // mu = 1, Vol = 3
  for (int x = 0; x < 3; ++x)
    CHECK(A[x] == doctest::Approx(std::sqrt(contrib)).epsilon(1e-13));
}

TEST_CASE("tent norms: finite p reduces to Lp of the area functional") {
  const DiscreteManifold M = DiscreteManifold::grid(2, 3);
  Rng rng(13);
  const ConeFunction F = random_cone(M, rng, 10, 0.2, 5.0);
  const Eigen::VectorXd A = area_functional(M, F);
  CHECK(tent_norm(M, F, 2.0) == doctest::Approx(lp_norm(M.measures(), A, 2.0)));
  CHECK(tent_norm(M, F, 3.0) == doctest::Approx(lp_norm(M.measures(), A, 3.0)));
}

TEST_CASE("Carleson supremum enumerates balls and truncation times") {
  const DiscreteManifold M = DiscreteManifold::grid(1, 3);
  Rng rng(17);
  const ConeFunction F = random_cone(M, rng, 9, 0.5, 2.0);
  const Eigen::VectorXd w = log_time_weights(F.tgrid);

  double best = 0.0;
  for (int x = 0; x < 3; ++x) {
    for (double r : M.radii(x)) {
      double mass = 0.0, vol = 0.0;
      for (int y = 0; y < 3; ++y) {
        if (M.distance(x, y) > r) continue;
        vol += M.mu(y);
        for (int i = 0; i < 9; ++i)
          if (F.tgrid[i] <= r) mass += w[i] * F.samples(y, i) * F.samples(y, i) * M.mu(y);
      }
      if (vol > 0.0) best = std::max(best, mass / vol);
    }
  }
  CHECK(tent_norm(M, F, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(std::sqrt(best)).epsilon(1e-13));
}

TEST_CASE("cone functions are validated") {
  const DiscreteManifold M = DiscreteManifold::grid(1, 3);
  ConeFunction F;
  F.tgrid = Eigen::VectorXd::LinSpaced(5, 1.0, 2.0);  // too few samples
  F.samples = Eigen::MatrixXd::Zero(3, 5);
  CHECK_THROWS_AS(area_functional(M, F), InvalidInput);

  Rng rng(1);
  ConeFunction G = random_cone(M, rng, 8, 0.5, 2.0);
  G.tgrid[3] = G.tgrid[2];  // not strictly increasing
  CHECK_THROWS_AS(vertical_functional(M, G), InvalidInput);

  ConeFunction H = random_cone(M, rng, 8, 0.5, 2.0);
  H.samples = Eigen::MatrixXd::Zero(2, 8);  // wrong vertex count
  CHECK_THROWS_AS(tent_norm(M, H, 2.0), InvalidInput);

  ConeFunction K = random_cone(M, rng, 8, 0.5, 2.0);
  CHECK_THROWS_AS(tent_norm(M, K, 0.5), InvalidInput);  // p < 1
}
