#include <doctest.h>

#include <cmath>
#include <memory>

#include "lpslab/czd.hpp"
#include "lpslab/spectral.hpp"

using namespace lps;

namespace {

std::shared_ptr<const DiscreteManifold> grid(int dim, int side) {
  return std::make_shared<DiscreteManifold>(DiscreteManifold::grid(dim, side));
}

// Energy pairing of two modes restricted to a vertex set:
//   sum_{y in S} mu_y gamma(phi_a, phi_b)(y).
double restricted_energy(const DiscreteManifold& M, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& b, const std::vector<int>& S) {
  double acc = 0.0;
  for (int y : S) {
    double g = 0.0;
    for (const Neighbor& nb : M.neighbors(y))
      g += nb.w * (a[nb.vertex] - a[y]) * (b[nb.vertex] - b[y]);
    acc += 0.5 * g;
  }
  return acc;
}

}  // namespace

TEST_CASE("centered maximal function on a frozen example") {
  const DiscreteManifold M = DiscreteManifold::grid(1, 3);
  Eigen::VectorXd f(3);
  f << 0.0, 0.0, 3.0;
  const Eigen::VectorXd m = maximal_function(M, f);
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(1.0));
  CHECK(m[2] == doctest::Approx(3.0));
}

TEST_CASE("maximal function dominates the field") {
  auto M = grid(2, 5);
  Rng rng(3);
  const Eigen::VectorXd f = rng.gaussian_vector(25);
  const Eigen::VectorXd m = maximal_function(*M, f);
  for (int x = 0; x < 25; ++x) CHECK(m[x] >= std::abs(f[x]) - 1e-14);
}

TEST_CASE("decomposition reconstructs and controls each piece") {
  auto M = grid(2, 5);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(25);
  f[12] = 1.0;  // dirac at the center, mu = 1
  for (double p : {1.0, 1.5}) {
    const Eigen::VectorXd mp =
        maximal_function(*M, f.array().abs().pow(p).matrix()).array().pow(1.0 / p);
    // Above the flood floor (the smallest maximal value) yet below the value
    // at the center's neighbors, so Omega is a genuine neighborhood and the
    // bad parts carry mass.
    const double lambda = 1.5 * mp.minCoeff();
    const CZDecomposition dec = cz_decompose(*M, f, lambda, p);

    REQUIRE_FALSE(dec.bad.empty());
    Eigen::VectorXd recon = dec.good;
    for (const BadPart& b : dec.bad) recon += b.field;
    CHECK((recon - f).cwiseAbs().maxCoeff() < 1e-14);

    for (const BadPart& b : dec.bad) {
      double mean = 0.0;
      for (int y = 0; y < 25; ++y) {
        mean += M->mu(y) * b.field[y];
        if (b.field[y] != 0.0)
          CHECK(M->distance(b.ball.center, y) <= b.ball.radius + 1e-12);
      }
      CHECK(std::abs(mean) < 1e-13);
      CHECK(b.ball_measure == doctest::Approx(M->volume(b.ball.center, b.ball.radius)));
      // Whitney balls live inside the level set.
      for (int y : M->ball(b.ball))
        CHECK(std::find(dec.omega.begin(), dec.omega.end(), y) != dec.omega.end());
    }
    CHECK(dec.overlap >= 1);
    CHECK(dec.report.constant("good_bound") < 50.0);
    CHECK(dec.report.constant("reconstruction") < 1e-14);
    CHECK(dec.report.constant("balls") == doctest::Approx(double(dec.bad.size())));
  }
}

TEST_CASE("degenerate levels are handled explicitly") {
  auto M = grid(2, 3);
  Eigen::VectorXd f = Eigen::VectorXd::Constant(9, 2.0);
  // Any level below the constant floods Omega; the error names the floor.
  CHECK_THROWS_WITH_AS(cz_decompose(*M, f, 1.0, 1.0),
                       doctest::Contains("smallest admissible level"), InvalidInput);
  // Levels above the maximal sup give the trivial decomposition.
  const CZDecomposition dec = cz_decompose(*M, f, 5.0, 1.0);
  CHECK(dec.bad.empty());
  CHECK(dec.omega.empty());
  CHECK((dec.good - f).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dec.report.constant("reconstruction") == 0.0);

  CHECK_THROWS_AS(cz_decompose(*M, f, 0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(cz_decompose(*M, f, 1.0, 2.0), InvalidInput);
  CHECK_THROWS_AS(cz_decompose(*M, f, 1.0, 0.5), InvalidInput);
}

TEST_CASE("remainder table matches the closed-form mode pairing") {
  auto M = grid(2, 5);
  const SpectralOperator op = assemble(M, PotentialSplit::zero(25));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(25);
  f[12] = 1.0;
  const Eigen::VectorXd mp = maximal_function(*M, f);
  const CZDecomposition dec = cz_decompose(*M, f, 0.15 * mp.maxCoeff(), 1.0);
  REQUIRE_FALSE(dec.bad.empty());

  const int K = 2, jmax = 2;
  const FitReport rep = cz_remainder(op, dec, K, jmax);
  REQUIRE(rep.rows.size() == dec.bad.size() * (jmax + 1));

  std::size_t row = 0;
  for (const BadPart& part : dec.bad) {
    Eigen::VectorXd h = op.coefficients(part.field);
    for (int a = 0; a < h.size(); ++a)
      h[a] *= std::pow(1.0 - std::exp(-part.ball.radius * part.ball.radius *
                                      op.eigenvalues()[a]),
                       K);
    const double hmax = h.cwiseAbs().maxCoeff();
    for (int j = 0; j <= jmax; ++j, ++row) {
      const std::vector<int> Cj = M->annulus(part.ball, j);
      double i2 = 0.0;
      for (int a = 0; a < h.size(); ++a) {
        if (std::abs(h[a]) <= 1e-14 * hmax) continue;
        for (int b = 0; b < h.size(); ++b) {
          if (std::abs(h[b]) <= 1e-14 * hmax) continue;
          i2 += 0.5 * h[a] * h[b] *
                restricted_energy(*M, op.modes().col(a), op.modes().col(b), Cj) /
                (op.eigenvalues()[a] + op.eigenvalues()[b]);
        }
      }
      const double want = std::sqrt(std::max(i2, 0.0));
      const double got = rep.rows[row][2];
      if (want > 1e-10)
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
      else
        CHECK(got <= 1e-10);
    }
  }
  CHECK(rep.constant("smoothing_order") == doctest::Approx(2.0));
}

TEST_CASE("higher smoothing order steepens the annulus decay") {
  // A long path keeps several annuli inside the graph and puts the lowest
  // eigenvalues well under 1/r^2, which is where the extra smoothing factor
  // actually bites; small square grids have neither.
  auto M = grid(1, 65);
  const SpectralOperator op = assemble(M, PotentialSplit::zero(65));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(65);
  f[32] = 1.0;
  const Eigen::VectorXd mp = maximal_function(*M, f);
  const CZDecomposition dec = cz_decompose(*M, f, 0.15 * mp.maxCoeff(), 1.0);
  REQUIRE_FALSE(dec.bad.empty());
  const FitReport r1 = cz_remainder(op, dec, 1, 3);
  const FitReport r2 = cz_remainder(op, dec, 2, 3);
  CHECK(r2.constant("mean_slope") > r1.constant("mean_slope"));
  CHECK(r1.constant("mean_slope") > 0.0);
  CHECK_THROWS_AS(cz_remainder(op, dec, 0, 3), InvalidInput);
}
