#include "lpslab/functionals.hpp"

#include <cmath>

namespace lps {

namespace {

Eigen::VectorXd potential_weight_vector(const SpectralOperator& op, PotentialWeight w) {
  if (op.is_forms()) return Eigen::VectorXd();
  const PotentialSplit& V = op.potential();
  return w == PotentialWeight::Magnitude ? V.magnitude() : V.vplus.eval();
}

struct Stripped {
  Eigen::VectorXd coeff;  // coefficients on modes above the kernel
  Eigen::VectorXd rates;  // matching eigenvalues
  Eigen::MatrixXd fields; // matching mode profiles
  double removed = 0.0;
};

// Split f into kernel and non-kernel content.  When the integrand weighs
// kernel modes with something nonzero (gradient energy or potential mass),
// their time integral diverges and the computation is refused.
Stripped strip_kernel(const SpectralOperator& op, const Eigen::VectorXd& f,
                      const Eigen::VectorXd& vw, bool check_gamma) {
  const int K = op.dof();
  const int kd = op.kernel_dim();
  Eigen::VectorXd c = op.coefficients(f);
  const double ctol = 1e-12 * std::max(op.norm(f), 1e-300);
  if (check_gamma) {
    const double gtol =
        1e-10 * std::max(op.eigenvalues()[K - 1], 1.0);
    for (int k = 0; k < kd; ++k) {
      if (std::abs(c[k]) <= ctol) continue;
      const Eigen::VectorXd phi = op.modes().col(k);
      double gamma = op.manifold().measures().dot(
          gradient_modulus_sq(op.manifold(), phi));
      if (vw.size())
        gamma += (op.manifold().measures().array() * vw.array() *
                  phi.array().square()).sum();
      if (gamma > gtol)
        throw NumericalGuard(
            "divergent time integral: kernel mode carries nonzero integrand");
    }
  }
  Stripped s;
  s.removed = c.head(kd).squaredNorm();
  s.coeff = c.tail(K - kd);
  s.rates = op.eigenvalues().tail(K - kd);
  s.fields = op.modes().rightCols(K - kd);
  return s;
}

FunctionalResult finish(Eigen::VectorXd squared, EngineChoice engine, double removed,
                        const ConeDiagnostics& diag) {
  FunctionalResult r;
  r.values = squared.cwiseMax(0.0).cwiseSqrt();
  r.engine = engine;
  r.kernel_mass_removed = removed;
  r.diag = diag;
  return r;
}

FunctionalResult run_engine(const SpectralOperator& op, const ConeKernel& k,
                            const FunctionalOptions& opt, double removed) {
  ConeDiagnostics diag;
  Eigen::VectorXd sq;
  if (opt.engine == EngineChoice::Exact)
    sq = cone_integral_exact(op.manifold(), k);
  else
    sq = cone_integral_quadrature(op.manifold(), k, opt.quad, &diag);
  return finish(std::move(sq), opt.engine, removed, diag);
}

}  // namespace

DecayClass DecayClass::validated(std::function<double(double)> F, double tau,
                                 double delta, double cbound) {
  if (tau < 0.0) throw InvalidInput("decay class: tau must be >= 0");
  if (delta <= 0.5) throw InvalidInput("decay class: delta must exceed 1/2");
  if (!(cbound > 0.0)) throw InvalidInput("decay class: C must be positive");
  for (int i = 0; i <= 480; ++i) {
    const double z = std::pow(10.0, -6.0 + 12.0 * i / 480.0);
    const double envelope = cbound * std::pow(z, tau) / (1.0 + std::pow(z, tau + delta));
    if (std::abs(F(z)) > envelope * (1.0 + 1e-9) + 1e-15)
      throw InvalidInput("decay class: |F| exceeds its envelope at z = " +
                         std::to_string(z));
  }
  DecayClass dc;
  dc.F = std::move(F);
  dc.tau = tau;
  dc.delta = delta;
  dc.cbound = cbound;
  return dc;
}

DecayClass DecayClass::heat() {
  DecayClass dc = validated([](double z) { return std::exp(-z); }, 0.0, 1.0, 1.0);
  dc.canonical_heat = true;
  return dc;
}

PhiSpec PhiSpec::canonical_phi0() {
  PhiSpec p;
  p.phi = [](double z) { return std::sqrt(z) * std::exp(-z); };
  p.origin_exponent = 0.5;
  p.canonical = true;
  return p;
}

FunctionalResult conical_g(const SpectralOperator& op, const Eigen::VectorXd& f,
                           const FunctionalOptions& opt) {
  if (op.is_forms()) throw InvalidInput("conical_g expects a scalar operator");
  const Eigen::VectorXd vw = potential_weight_vector(op, opt.potential_weight);
  Stripped s = strip_kernel(op, f, vw, true);

  ConeKernel k;
  k.geom = {ConeScaling::SqrtT, 1.0};
  k.time_power = 0;
  k.rates = s.rates;
  Eigen::MatrixXd u = s.fields * s.coeff.asDiagonal();
  ConeChannel grad;
  grad.type = ConeChannel::Type::Gradient;
  grad.fields = u;
  k.channels.push_back(std::move(grad));
  if (vw.size() && vw.maxCoeff() > 0.0) {
    ConeChannel pot;
    pot.type = ConeChannel::Type::Value;
    pot.fields = u;
    pot.vertex_weight = vw.cwiseSqrt();
    k.channels.push_back(std::move(pot));
  }
  return run_engine(op, k, opt, s.removed);
}

FunctionalResult horizontal_s(const SpectralOperator& op, const Eigen::VectorXd& f,
                              const FunctionalOptions& opt) {
  if (op.is_forms()) throw InvalidInput("horizontal_s expects a scalar operator");
  Stripped s = strip_kernel(op, f, Eigen::VectorXd(), false);

  ConeKernel k;
  k.geom = {ConeScaling::SqrtT, 1.0};
  k.time_power = 1;
  k.rates = s.rates;
  ConeChannel ch;
  ch.type = ConeChannel::Type::Value;
  ch.fields = s.fields * (s.rates.array() * s.coeff.array()).matrix().asDiagonal();
  k.channels.push_back(std::move(ch));
  return run_engine(op, k, opt, s.removed);
}

FunctionalResult s_phi(const SpectralOperator& op, const PhiSpec& phi,
                       const Eigen::VectorXd& f, const FunctionalOptions& opt) {
  if (op.is_forms()) throw InvalidInput("s_phi expects a scalar operator");
  if (!phi.phi && !phi.canonical) throw InvalidInput("s_phi: empty profile");
  Stripped s = strip_kernel(op, f, Eigen::VectorXd(), false);

  if (phi.canonical) {
    // |phi0(tL) f|^2 / t = sum_{jk} sqrt(lambda_j lambda_k) c_j c_k
    //                      phi_j phi_k e^{-(lambda_j + lambda_k) t}.
    ConeKernel k;
    k.geom = {ConeScaling::SqrtT, 1.0};
    k.time_power = 0;
    k.rates = s.rates;
    ConeChannel ch;
    ch.type = ConeChannel::Type::Value;
    ch.fields =
        s.fields * (s.rates.array().sqrt() * s.coeff.array()).matrix().asDiagonal();
    k.channels.push_back(std::move(ch));
    return run_engine(op, k, opt, s.removed);
  }

  if (opt.engine == EngineChoice::Exact)
    throw InvalidInput("s_phi: exact engine supports the canonical profile only");

  ConeKernel k;
  k.geom = {ConeScaling::SqrtT, 1.0};
  k.rate_hint = s.rates.size() ? s.rates.minCoeff() : 0.0;
  k.finite_origin = phi.origin_exponent > 0.5;
  k.origin_exponent = 2.0 * phi.origin_exponent;
  const Eigen::MatrixXd fields = s.fields;
  const Eigen::VectorXd rates = s.rates;
  const Eigen::VectorXd coeff = s.coeff;
  auto fn = phi.phi;
  k.integrand = [fields, rates, coeff, fn](double t) -> Eigen::VectorXd {
    if (t == 0.0) return Eigen::VectorXd::Zero(fields.rows());
    Eigen::VectorXd c(coeff.size());
    for (int i = 0; i < c.size(); ++i) c[i] = coeff[i] * fn(t * rates[i]);
    return (fields * c).array().square() / t;
  };
  return run_engine(op, k, opt, s.removed);
}

FunctionalResult generalized_g(const SpectralOperator& op, const DecayClass& F,
                               const Eigen::VectorXd& f, const FunctionalOptions& opt) {
  if (op.is_forms()) throw InvalidInput("generalized_g expects a scalar operator");
  if (F.canonical_heat) {
    FunctionalResult r = conical_g(op, f, opt);
    return r;
  }
  if (opt.engine == EngineChoice::Exact)
    throw InvalidInput(
        "generalized_g: exact engine requires the canonical heat symbol");

  const Eigen::VectorXd vw = potential_weight_vector(op, opt.potential_weight);
  Stripped s = strip_kernel(op, f, vw, true);

  ConeKernel k;
  k.geom = {ConeScaling::SqrtT, 1.0};
  k.rate_hint = s.rates.size() ? s.rates.minCoeff() : 0.0;
  k.finite_origin = true;

  const DiscreteManifold& M = op.manifold();
  const Eigen::MatrixXd fields = s.fields;
  const Eigen::VectorXd rates = s.rates;
  const Eigen::VectorXd coeff = s.coeff;
  auto fn = F.F;
  k.integrand = [&M, fields, rates, coeff, fn, vw](double t) -> Eigen::VectorXd {
    Eigen::VectorXd c(coeff.size());
    for (int i = 0; i < c.size(); ++i) c[i] = coeff[i] * fn(t * rates[i]);
    const Eigen::VectorXd u = fields * c;
    Eigen::VectorXd out = gradient_modulus_sq(M, u);
    if (vw.size()) out.array() += vw.array() * u.array().square();
    return out;
  };
  FunctionalResult r = run_engine(op, k, opt, s.removed);
  // The symbol only decays polynomially, |F(tl)|^2 ~ t^{-2 delta}; replace the
  // exponential-model tail estimate with the matching power-law one.
  if (r.engine == EngineChoice::Quadrature && s.rates.size()) {
    const double t_hi = opt.quad.hi_factor / s.rates.minCoeff();
    const Eigen::VectorXd psi = k.integrand(t_hi);
    double mass = 0.0;
    for (int y = 0; y < M.vertex_count(); ++y)
      mass += M.mu(y) * psi[y] / M.total_measure();
    r.diag.tail_bound = mass * t_hi / std::max(2.0 * F.delta - 1.0, 0.1);
  }
  return r;
}

FunctionalResult vertical_h(const SpectralOperator& op, const Eigen::VectorXd& f,
                            PotentialWeight w) {
  if (op.is_forms()) throw InvalidInput("vertical_h expects a scalar operator");
  const Eigen::VectorXd vw = potential_weight_vector(op, w);
  Stripped s = strip_kernel(op, f, vw, true);
  const DiscreteManifold& M = op.manifold();
  const int n = M.vertex_count();
  const int K = static_cast<int>(s.coeff.size());
  if (K == 0)
    return finish(Eigen::VectorXd::Zero(n), EngineChoice::Exact, s.removed, {});

  Eigen::MatrixXd B(K, K);
  for (int j = 0; j < K; ++j)
    for (int i = 0; i < K; ++i)
      B(i, j) = s.coeff[i] * s.coeff[j] / (s.rates[i] + s.rates[j]);
  const Eigen::MatrixXd P = s.fields * B;  // q(a,b) = P.row(a) . fields.row(b)

  Eigen::VectorXd qdiag(n);
  for (int x = 0; x < n; ++x) qdiag[x] = P.row(x).dot(s.fields.row(x));

  Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (const Neighbor& nb : M.neighbors(x)) {
      const double qxz = P.row(x).dot(s.fields.row(nb.vertex));
      acc += nb.w * (qdiag[nb.vertex] - 2.0 * qxz + qdiag[x]);
    }
    sq[x] = acc / (2.0 * M.mu(x));
    if (vw.size()) sq[x] += vw[x] * qdiag[x];
  }
  return finish(std::move(sq), EngineChoice::Exact, s.removed, {});
}

PoissonParts poisson_p(const SpectralOperator& op, const Eigen::VectorXd& f,
                       const FunctionalOptions& opt) {
  if (op.is_forms()) throw InvalidInput("poisson_p expects a scalar operator");
  const Eigen::VectorXd vw = potential_weight_vector(op, opt.potential_weight);
  Stripped s = strip_kernel(op, f, vw, true);
  const Eigen::VectorXd sr = s.rates.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd u = s.fields * s.coeff.asDiagonal();

  ConeKernel time_k;
  time_k.geom = {ConeScaling::LinearT, 1.0};
  time_k.time_power = 1;
  time_k.rates = sr;
  {
    ConeChannel ch;
    ch.type = ConeChannel::Type::Value;
    ch.fields = u * sr.asDiagonal();
    time_k.channels.push_back(std::move(ch));
  }

  ConeKernel space_k;
  space_k.geom = {ConeScaling::LinearT, 1.0};
  space_k.time_power = 1;
  space_k.rates = sr;
  {
    ConeChannel grad;
    grad.type = ConeChannel::Type::Gradient;
    grad.fields = u;
    space_k.channels.push_back(std::move(grad));
    if (vw.size() && vw.maxCoeff() > 0.0) {
      ConeChannel pot;
      pot.type = ConeChannel::Type::Value;
      pot.fields = u;
      pot.vertex_weight = vw.cwiseSqrt();
      space_k.channels.push_back(std::move(pot));
    }
  }

  PoissonParts parts;
  ConeDiagnostics dt, dx;
  Eigen::VectorXd sq_t, sq_x;
  if (opt.engine == EngineChoice::Exact) {
    sq_t = cone_integral_exact(op.manifold(), time_k);
    sq_x = cone_integral_exact(op.manifold(), space_k);
  } else {
    sq_t = cone_integral_quadrature(op.manifold(), time_k, opt.quad, &dt);
    sq_x = cone_integral_quadrature(op.manifold(), space_k, opt.quad, &dx);
  }
  parts.time_part = finish(sq_t, opt.engine, s.removed, dt);
  parts.space_part = finish(sq_x, opt.engine, s.removed, dx);
  ConeDiagnostics dfull;
  dfull.tail_bound = dt.tail_bound + dx.tail_bound;
  dfull.small_t_bound = dt.small_t_bound + dx.small_t_bound;
  dfull.quad_error = dt.quad_error + dx.quad_error;
  parts.full = finish(sq_t + sq_x, opt.engine, s.removed, dfull);
  return parts;
}

}  // namespace lps
