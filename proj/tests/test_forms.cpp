#include <doctest.h>

#include <cmath>
#include <memory>

#include "lpslab/forms.hpp"

using namespace lps;

namespace {

std::shared_ptr<const DiscreteManifold> grid(int dim, int side) {
  return std::make_shared<DiscreteManifold>(DiscreteManifold::grid(dim, side));
}

Eigen::VectorXd edge_weights(const DiscreteManifold& M) {
  Eigen::VectorXd w(M.edge_count());
  for (int e = 0; e < M.edge_count(); ++e) w[e] = M.edges()[e].w;
  return w;
}

}  // namespace

TEST_CASE("d and d* are adjoint in the weighted inner products") {
  auto M = grid(2, 4);
  Rng rng(3);
  const Eigen::VectorXd w = edge_weights(*M);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd f = rng.gaussian_vector(M->vertex_count());
    const Eigen::VectorXd beta = rng.gaussian_vector(M->edge_count());
    const double a = (w.array() * d_op(*M, f).array() * beta.array()).sum();
    const double b =
        (M->measures().array() * f.array() * dstar_op(*M, beta).array()).sum();
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("d* d recovers the potential-free Laplacian") {
  auto M = grid(2, 3);
  Rng rng(5);
  const Eigen::VectorXd f = rng.gaussian_vector(9);
  const Eigen::VectorXd a = dstar_op(*M, d_op(*M, f));
  const Eigen::VectorXd b = laplacian_apply(*M, PotentialSplit::zero(9), f);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-13 * b.cwiseAbs().maxCoeff());
}

TEST_CASE("edge modulus of a gradient is the gradient modulus") {
  auto M = grid(2, 4);
  Rng rng(7);
  const Eigen::VectorXd f = rng.gaussian_vector(16);
  const Eigen::VectorXd a = edge_modulus_sq(*M, d_op(*M, f));
  const Eigen::VectorXd b = gradient_modulus_sq(*M, f);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-13 * b.maxCoeff());
}

TEST_CASE("incidence matrix realizes d") {
  auto M = grid(2, 3);
  Rng rng(9);
  const Eigen::MatrixXd D = incidence_matrix(*M);
  const Eigen::VectorXd f = rng.gaussian_vector(9);
  CHECK((D * f - d_op(*M, f)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("hodge kernel is the cycle space") {
  auto M = grid(2, 3);  // n = 9, m = 12, first Betti number 4
  const SpectralOperator hodge = hodge_assemble(M);
  CHECK(hodge.is_forms());
  CHECK(hodge.dof() == 12);
  CHECK(hodge.kernel_dim() == 4);
  // Harmonic fields are annihilated by d*.
  for (int k = 0; k < hodge.kernel_dim(); ++k) {
    const Eigen::VectorXd h = hodge.modes().col(k);
    CHECK(dstar_op(*M, h).cwiseAbs().maxCoeff() < 1e-10);
  }
  // A tree has no cycles, hence no harmonic 1-forms.
  auto T = std::make_shared<DiscreteManifold>(DiscreteManifold::binary_tree(3));
  CHECK(hodge_assemble(T).kernel_dim() == 0);
}

TEST_CASE("exact operator identities relating the two Laplacians") {
  for (auto M : {grid(2, 4),
                 std::make_shared<const DiscreteManifold>(
                     DiscreteManifold::dumbbell(2, 3))}) {
    CHECK(commutation_residual(*M) < 1e-13);
    CHECK(intertwining_residual(*M) < 1e-13);
  }
}

TEST_CASE("heat semigroups intertwine through d") {
  auto M = grid(2, 4);
  const SpectralOperator op = assemble(M, PotentialSplit::zero(16));
  const SpectralOperator hodge = hodge_assemble(M);
  Rng rng(11);
  for (double t : {0.1, 1.0, 5.0}) {
    const Eigen::VectorXd f = rng.gaussian_vector(16);
    const Eigen::VectorXd a = d_op(*M, op.heat_apply(t, f));
    const Eigen::VectorXd b = hodge.heat_apply(t, d_op(*M, f));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("forms conical functional has the exact L2 constant") {
  auto M = grid(2, 4);
  const SpectralOperator hodge = hodge_assemble(M);
  Rng rng(13);
  Eigen::VectorXd eta = hodge.project_out_kernel(rng.gaussian_vector(16 + 8));
  REQUIRE(eta.size() == hodge.dof());
  eta /= hodge.norm(eta);
  FunctionalOptions opt;
  opt.engine = EngineChoice::Exact;
  const FunctionalResult g = conical_g_forms(hodge, eta, opt);
  const double mass = (M->measures().array() * g.values.array().square()).sum();
  CHECK(mass == doctest::Approx(0.5).epsilon(1e-10));

  // Harmonic content is dropped silently (d* kills it), reported as removed.
  Eigen::VectorXd with_kernel = eta + 0.7 * hodge.modes().col(0);
  const FunctionalResult g2 = conical_g_forms(hodge, with_kernel, opt);
  CHECK(g2.kernel_mass_removed == doctest::Approx(0.49).epsilon(1e-8));
  CHECK((g2.values - g.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("forms conical functional agrees across engines") {
  auto M = grid(2, 3);
  const SpectralOperator hodge = hodge_assemble(M);
  Rng rng(17);
  Eigen::VectorXd eta = hodge.project_out_kernel(rng.gaussian_vector(12));
  eta /= hodge.norm(eta);
  FunctionalOptions ex, qu;
  ex.engine = EngineChoice::Exact;
  qu.engine = EngineChoice::Quadrature;
  const Eigen::VectorXd a = conical_g_forms(hodge, eta, ex).values;
  const Eigen::VectorXd b = conical_g_forms(hodge, eta, qu).values;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6 * a.maxCoeff());
}

TEST_CASE("poisson functional on forms splits exactly") {
  auto M = grid(2, 4);
  const SpectralOperator hodge = hodge_assemble(M);
  Rng rng(19);
  Eigen::VectorXd eta = hodge.project_out_kernel(rng.gaussian_vector(hodge.dof()));
  eta /= hodge.norm(eta);
  FunctionalOptions opt;
  opt.engine = EngineChoice::Exact;
  const PoissonFormsParts parts = poisson_forms(hodge, eta, opt);
  const auto l2 = [&](const Eigen::VectorXd& v) {
    return (M->measures().array() * v.array().square()).sum();
  };
  CHECK(l2(parts.full.values) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(l2(parts.time_part.values) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(l2(parts.dstar_part.values) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(parts.d_part.values.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("riesz transforms are isometries on the kernel complement at p = 2") {
  auto M = grid(2, 4);
  const SpectralOperator op = assemble(M, PotentialSplit::zero(16));
  const SpectralOperator hodge = hodge_assemble(M);
  const Eigen::VectorXd w = edge_weights(*M);
  const FieldMap rs = riesz_scalar(op);
  const FieldMap rf = riesz_forms(hodge);
  Rng rng(23);

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd f = op.project_out_kernel(rng.gaussian_vector(16));
    const double in = std::sqrt((M->measures().array() * f.array().square()).sum());
    const Eigen::VectorXd df = rs(f);
    const double out = std::sqrt((w.array() * df.array().square()).sum());
    CHECK(out == doctest::Approx(in).epsilon(1e-10));

    Eigen::VectorXd beta = hodge.project_out_kernel(rng.gaussian_vector(w.size()));
    const double bin = std::sqrt((w.array() * beta.array().square()).sum());
    const Eigen::VectorXd fb = rf(beta);
    const double bout = std::sqrt((M->measures().array() * fb.array().square()).sum());
    CHECK(bout == doctest::Approx(bin).epsilon(1e-10));
  }

  // Mutual adjointness (no potential): <R f, beta>_w = <f, R* beta>_mu.
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd f = rng.gaussian_vector(16);
    const Eigen::VectorXd beta = rng.gaussian_vector(w.size());
    const double a = (w.array() * rs(f).array() * beta.array()).sum();
    const double b = (M->measures().array() * f.array() * rf(beta).array()).sum();
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }
}
