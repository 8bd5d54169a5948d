// Acceptance harness: one PASS/FAIL line per criterion, exit code 0 only
// when every criterion holds.  Tolerances are pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lpslab/czd.hpp"
#include "lpslab/forms.hpp"
#include "lpslab/functionals.hpp"
#include "lpslab/manifold.hpp"
#include "lpslab/probes.hpp"
#include "lpslab/scenarios.hpp"
#include "lpslab/spectral.hpp"
#include "lpslab/tent.hpp"

using namespace lps;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::cout << (pass ? "PASS" : "FAIL") << "  " << name << "  " << detail << "\n"
            << std::flush;
}

Eigen::VectorXd unit_offkernel(const SpectralOperator& op, Rng& rng) {
  Eigen::VectorXd f = op.project_out_kernel(rng.gaussian_vector(op.dof()));
  return f / op.norm(f);
}

PotentialSplit random_potential(int n, Rng& rng, double scale = 0.5) {
  PotentialSplit V = PotentialSplit::zero(n);
  for (int i = 0; i < n; ++i) V.vplus[i] = scale * rng.uniform();
  return V;
}

double sq_l2(const SpectralOperator& op, const Eigen::VectorXd& values) {
  return (op.weight().array() * values.array().square()).sum();
}

double rel_linf(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

// ------------------------------------------------------------- criterion 1

void criterion_1() {
  struct ModelCase {
    std::string label;
    DiscreteManifold model;
  };
  std::vector<ModelCase> cases;
  cases.push_back({"grid(2,5)", DiscreteManifold::grid(2, 5)});
  cases.push_back({"grid(2,8)", DiscreteManifold::grid(2, 8)});
  cases.push_back({"grid(1,48)", DiscreteManifold::grid(1, 48)});
  cases.push_back({"grid(3,4)", DiscreteManifold::grid(3, 4)});
  cases.push_back({"dumbbell(2,5)", DiscreteManifold::dumbbell(2, 5)});
  cases.push_back({"binary_tree(5)", DiscreteManifold::binary_tree(5)});

  Rng rng(101);
  double worst = 0.0, worst_time = 0.0;
  std::string slowest;
  for (auto& c : cases) {
    const auto t0 = Clock::now();
    auto M = std::make_shared<DiscreteManifold>(std::move(c.model));
    const int n = M->vertex_count();
    const SpectralOperator op = assemble(M, random_potential(n, rng));
    const Eigen::VectorXd f = unit_offkernel(op, rng);

    FunctionalOptions opt;
    opt.engine = EngineChoice::Exact;
    const double g2 = sq_l2(op, conical_g(op, f, opt).values);
    const double h2 = sq_l2(op, vertical_h(op, f).values);
    const double s2 = sq_l2(op, horizontal_s(op, f, opt).values);
    const double sp2 = sq_l2(op, s_phi(op, PhiSpec::canonical_phi0(), f, opt).values);
    const PoissonParts pp = poisson_p(op, f, opt);

    worst = std::max({worst, std::abs(2.0 * g2 - 1.0), std::abs(2.0 * h2 - 1.0),
                      std::abs(4.0 * s2 - 1.0), std::abs(2.0 * sp2 - 1.0),
                      std::abs(2.0 * sq_l2(op, pp.full.values) - 1.0),
                      std::abs(4.0 * sq_l2(op, pp.time_part.values) - 1.0),
                      std::abs(4.0 * sq_l2(op, pp.space_part.values) - 1.0)});
    const double dt = seconds_since(t0);
    if (dt > worst_time) {
      worst_time = dt;
      slowest = c.label;
    }
  }
  report("criterion-01-exact-l2-identities", worst <= 1e-8 && worst_time < 60.0,
         "max_rel_err=" + fmt(worst) + " (tol 1e-8), slowest_model=" + slowest + " " +
             fmt(worst_time) + "s (limit 60s)");
}

// ------------------------------------------------------------- criterion 2

void criterion_2() {
  auto M = std::make_shared<DiscreteManifold>(DiscreteManifold::grid(2, 5));
  Rng rng(102);
  const SpectralOperator op = assemble(M, random_potential(25, rng));
  const SpectralOperator hodge = hodge_assemble(M);

  FunctionalOptions exact, quad;
  exact.engine = EngineChoice::Exact;
  quad.engine = EngineChoice::Quadrature;

  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd f = unit_offkernel(op, rng);
    worst = std::max(worst, rel_linf(conical_g(op, f, quad).values,
                                     conical_g(op, f, exact).values));
    worst = std::max(worst, rel_linf(horizontal_s(op, f, quad).values,
                                     horizontal_s(op, f, exact).values));
    const Eigen::VectorXd eta = rng.gaussian_vector(hodge.dof());
    worst = std::max(worst, rel_linf(conical_g_forms(hodge, eta, quad).values,
                                     conical_g_forms(hodge, eta, exact).values));
  }
  report("criterion-02-engine-cross-validation", worst <= 1e-6,
         "max_rel_diff=" + fmt(worst) + " over 20 inputs x {scalar G, S, forms G} "
                                        "(tol 1e-6)");
}

// ------------------------------------------------------------- criterion 3

void criterion_3() {
  auto M = std::make_shared<DiscreteManifold>(DiscreteManifold::grid(2, 4));
  const int n = M->vertex_count();
  Rng rng(103);

  const int m = 24;
  Eigen::VectorXd tgrid(m);
  for (int i = 0; i < m; ++i) tgrid[i] = 1e-2 * std::pow(10.0 / 1e-2, double(i) / (m - 1));

  double fubini = 0.0;
  for (int k = 0; k < 50; ++k) {
    ConeFunction F{Eigen::MatrixXd::NullaryExpr(n, m, [&](Eigen::Index, Eigen::Index) {
                     return rng.gaussian();
                   }),
                   tgrid, ConeGeometry{}};
    const Eigen::VectorXd A = area_functional(*M, F);
    const Eigen::VectorXd V = vertical_functional(*M, F);
    const double na = std::sqrt((M->measures().array() * A.array().square()).sum());
    const double nv = std::sqrt((M->measures().array() * V.array().square()).sum());
    fubini = std::max(fubini, std::abs(na - nv) / nv);
  }

  const std::vector<double> ps = {2.0, 3.0, 4.0};
  std::vector<double> cp(ps.size(), 0.0);
  for (int k = 0; k < 100; ++k) {
    ConeFunction F{Eigen::MatrixXd::NullaryExpr(n, m, [&](Eigen::Index, Eigen::Index) {
                     return rng.gaussian();
                   }),
                   tgrid, ConeGeometry{}};
    const Eigen::VectorXd A = area_functional(*M, F);
    const Eigen::VectorXd V = vertical_functional(*M, F);
    for (std::size_t i = 0; i < ps.size(); ++i)
      cp[i] = std::max(cp[i], lp_norm(M->measures(), A, ps[i]) /
                                  lp_norm(M->measures(), V, ps[i]));
  }
  const double cmax = *std::max_element(cp.begin(), cp.end());
  report("criterion-03-tent-fubini-and-comparison",
         fubini <= 1e-10 && std::isfinite(cmax) && cmax <= 100.0,
         "fubini_rel=" + fmt(fubini) + " (tol 1e-10), C_p={" + fmt(cp[0]) + "," +
             fmt(cp[1]) + "," + fmt(cp[2]) + "} for p={2,3,4} (reported bound 100)");
}

// ------------------------------------------------------------- criterion 4

void criterion_4() {
  auto M = std::make_shared<DiscreteManifold>(DiscreteManifold::grid(2, 5));
  Rng rng(104);
  const SpectralOperator op = assemble(M, random_potential(25, rng));
  const Eigen::VectorXd& mu = M->measures();

  FunctionalOptions opt;
  opt.engine = EngineChoice::Exact;
  const std::vector<double> ps = {1.5, 2.0, 3.0};

  int violations = 0;
  double worst_ratio = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd f = unit_offkernel(op, rng);
    const Eigen::VectorXd g = unit_offkernel(op, rng);
    const double pairing = std::abs(op.inner(f, g));
    const Eigen::VectorXd sf = s_phi(op, PhiSpec::canonical_phi0(), f, opt).values;
    const Eigen::VectorXd sg = s_phi(op, PhiSpec::canonical_phi0(), g, opt).values;
    const Eigen::VectorXd gf = conical_g(op, f, opt).values;
    const Eigen::VectorXd gg = conical_g(op, g, opt).values;
    for (double p : ps) {
      const double q = p / (p - 1.0);
      const double rhs_s = 2.0 * lp_norm(mu, sf, p) * lp_norm(mu, sg, q);
      const double rhs_g = lp_norm(mu, gf, p) * lp_norm(mu, gg, q);
      worst_ratio = std::max({worst_ratio, pairing / rhs_s, 0.5 * pairing / rhs_g});
      if (pairing > rhs_s * (1.0 + 1e-9)) ++violations;
      if (0.5 * pairing > rhs_g * (1.0 + 1e-9)) ++violations;
    }
  }
  report("criterion-04-duality-pairings", violations == 0,
         "violations=" + std::to_string(violations) +
             " over 100 pairs x p={1.5,2,3}, worst lhs/rhs=" + fmt(worst_ratio));
}

// ------------------------------------------------------------- criterion 5

void criterion_5() {
  Rng rng(105);
  double commut = 0.0, intertwine = 0.0;
  for (const char* kind : {"grid", "dumbbell"}) {
    auto M = std::make_shared<DiscreteManifold>(std::string(kind) == "grid"
                                                    ? DiscreteManifold::grid(2, 4)
                                                    : DiscreteManifold::dumbbell(2, 3));
    const int n = M->vertex_count();
    const PotentialSplit V0 = PotentialSplit::zero(n);
    const SpectralOperator op0 = assemble(M, V0);
    const SpectralOperator op1 = hodge_assemble(M);
    Eigen::VectorXd wedge(M->edge_count());
    for (int e = 0; e < M->edge_count(); ++e) wedge[e] = M->edges()[e].w;

    for (int k = 0; k < 50; ++k) {
      const Eigen::VectorXd f = rng.gaussian_vector(n);
      // two stencil routes for the same 1-form: d(Delta_0 f) vs Delta_1(d f)
      const Eigen::VectorXd lhs = d_op(*M, laplacian_apply(*M, V0, f));
      const Eigen::VectorXd rhs = d_op(*M, dstar_op(*M, d_op(*M, f)));
      const double den =
          std::max(std::sqrt((wedge.array() * lhs.array().square()).sum()), 1e-300);
      commut = std::max(
          commut, std::sqrt((wedge.array() * (lhs - rhs).array().square()).sum()) / den);

      const double t = rng.uniform(0.1, 5.0);
      const Eigen::VectorXd a = d_op(*M, op0.heat_apply(t, f));
      const Eigen::VectorXd b = op1.heat_apply(t, d_op(*M, f));
      const double hden =
          std::max(std::sqrt((wedge.array() * a.array().square()).sum()), 1e-300);
      intertwine = std::max(
          intertwine, std::sqrt((wedge.array() * (a - b).array().square()).sum()) / hden);
    }
  }
  report("criterion-05-forms-commutation", commut <= 1e-12 && intertwine <= 1e-9,
         "commutation_rel=" + fmt(commut) + " (tol 1e-12), heat_intertwine_rel=" +
             fmt(intertwine) + " (tol 1e-9), 100 fields");
}

// ------------------------------------------------------------- criterion 6

void criterion_6() {
  const ScenarioResult r = run_scenario({{"scenario", "czd-check"}, {"seed", 106}});
  double recon = 0.0, spread = 0.0;
  for (const CriterionRow& c : r.criteria) {
    if (c.name == "cz-reconstruction") recon = c.measured;
    if (c.name.rfind("cz-stability-", 0) == 0) spread = std::max(spread, c.measured);
  }
  report("criterion-06-cz-decomposition", r.passed(),
         "reconstruction=" + fmt(recon) + " (tol 1e-12), worst_constant_spread=" +
             fmt(spread) + " (budget 8), remainder slope gap > 0");
}

// ------------------------------------------------------------- criterion 7

void criterion_7() {
  const DiscreteManifold big = DiscreteManifold::grid(2, 33);
  const FitReport dfit = doubling_fit(big, 2.0, 8.0);
  const double N = dfit.constant("N");

  auto M15 = std::make_shared<DiscreteManifold>(DiscreteManifold::grid(2, 15));
  const SpectralOperator op15 = assemble(M15, PotentialSplit::zero(225));
  std::vector<double> ts;
  for (int i = 0; i < 12; ++i) ts.push_back(1.0 * std::pow(50.0, double(i) / 11));
  const FitReport gfit = gaussian_fit(op15, ts);

  auto M9 = std::make_shared<DiscreteManifold>(DiscreteManifold::grid(2, 9));
  const SpectralOperator op9 = assemble(M9, PotentialSplit::zero(81));
  const SpectralOperator hodge9 = hodge_assemble(M9);
  const std::vector<int> E = M9->ball({0, 1.0});
  const std::vector<int> F = M9->ball({80, 1.0});
  const std::vector<double> dgts = {0.5, 1.0, 2.0, 4.0, 8.0};
  const FitReport dg_grad =
      davies_gaffney(*M9, family_sqrt_t_grad_heat(op9), E, F, dgts);
  const FitReport dg_dstar =
      davies_gaffney(*M9, family_sqrt_t_dstar_heat(hodge9), E, F, dgts);

  const bool pass = N >= 1.7 && N <= 2.3 && gfit.constant("rate") > 0.0 &&
                    gfit.constant("violations") == 0.0 &&
                    std::isfinite(gfit.constant("amplitude")) &&
                    dg_grad.constant("rate") > 0.0 && dg_dstar.constant("rate") > 0.0;
  report("criterion-07-geometry-probes", pass,
         "doubling_N=" + fmt(N) + " (window [1.7,2.3]), gaussian C=" +
             fmt(gfit.constant("amplitude")) + " c=" + fmt(gfit.constant("rate")) +
             " violations=" + fmt(gfit.constant("violations")) +
             ", davies-gaffney c_grad=" + fmt(dg_grad.constant("rate")) + " c_dstar=" +
             fmt(dg_dstar.constant("rate")));
}

// ------------------------------------------------------------- criterion 8

void criterion_8() {
  auto M1 = std::make_shared<DiscreteManifold>(
      DiscreteManifold::from_parts(Eigen::VectorXd::Ones(1), {}));
  PotentialSplit V = PotentialSplit::zero(1);
  V.vplus[0] = 4.0;
  V.vminus[0] = 1.0;
  const Subcriticality s = subcriticality_alpha(*M1, V);

  auto M3 = std::make_shared<DiscreteManifold>(DiscreteManifold::grid(2, 3));
  PotentialSplit W = PotentialSplit::zero(9);
  W.vminus.setConstant(0.3);
  const Subcriticality sup = subcriticality_alpha(*M3, W);

  const CriticalExponents ce = compute_p0(0.75, 4.0);
  const double ep0 = std::abs(ce.p0 - 8.0 / 7.0);
  const double ep0p = std::abs(ce.p0_prime - 8.0);

  const bool pass = std::abs(s.alpha - 0.25) <= 1e-12 && !s.supercritical &&
                    sup.supercritical && ep0 <= 1e-12 && ep0p <= 1e-12;
  report("criterion-08-subcriticality", pass,
         "alpha=" + fmt(s.alpha) + " (exact 1/4), supercritical_flag=" +
             (sup.supercritical ? std::string("yes") : std::string("no")) +
             ", p0=(8/7,8) err=(" + fmt(ep0) + "," + fmt(ep0p) + ")");
}

// ------------------------------------------------------------- criterion 9

void criterion_9() {
  auto M = std::make_shared<DiscreteManifold>(DiscreteManifold::grid(2, 4));
  const Eigen::VectorXd& mu = M->measures();
  Rng rng(109);

  Eigen::MatrixXd A(16, 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) A(i, j) = rng.gaussian();
  const double exact = l2_operator_norm(A, mu, mu);
  SearchConfig sc;
  sc.seed = 901;
  const NormEstimate lin =
      ratio_search([&](const Eigen::VectorXd& f) { return A * f; }, mu, 2.0, sc);
  const double lin_rel = (exact - lin.ratio) / exact;

  auto M5 = std::make_shared<DiscreteManifold>(DiscreteManifold::grid(2, 5));
  const SpectralOperator op = assemble(M5, PotentialSplit::zero(25));
  FunctionalOptions opt;
  opt.engine = EngineChoice::Exact;
  SearchConfig gc;
  gc.restarts = 2;
  gc.steps = 8;
  gc.seed = 902;
  gc.extra_starts.push_back(op.modes().col(op.kernel_dim()));
  const NormEstimate ge = ratio_search(
      [&](const Eigen::VectorXd& f) { return conical_g(op, f, opt).values; },
      M5->measures(), 2.0, gc);
  const double target = 1.0 / std::sqrt(2.0);
  const double g_err = std::abs(ge.ratio - target);

  const bool pass = lin.ratio <= exact * (1.0 + 1e-9) && lin_rel <= 0.01 &&
                    g_err <= 1e-4;
  report("criterion-09-norm-estimator", pass,
         "linear map: search=" + fmt(lin.ratio) + " dense=" + fmt(exact) +
             " gap=" + fmt(lin_rel) + " (<=1%), conical ratio err vs 2^{-1/2}=" +
             fmt(g_err) + " (tol 1e-4)");
}

// ------------------------------------------------------------ criterion 10

void criterion_10(Clock::time_point suite_start) {
  const ScenarioResult r = run_scenario({{"scenario", "dumbbell-divergence"}, {"seed", 110}});
  double growth = 0.0, stability = 0.0;
  for (const CriterionRow& c : r.criteria) {
    if (c.name == "vertical-ratio-growth") growth = c.measured;
    if (c.name == "conical-ratio-stability") stability = c.measured;
  }
  const double elapsed = seconds_since(suite_start);
  report("criterion-10-dumbbell-divergence", r.passed() && elapsed < 1800.0,
         "vertical p=8 growth=" + fmt(growth) + "x (>=1.5), conical spread=" +
             fmt(stability) + "x (<2), suite=" + fmt(elapsed) + "s (limit 1800s)");
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10(t0);
  std::cout << "acceptance: " << (10 - g_failures) << "/10 criteria passed in "
            << fmt(seconds_since(t0)) << "s\n";
  return g_failures == 0 ? 0 : 1;
}
