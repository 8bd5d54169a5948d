#include "lpslab/forms.hpp"

#include <cmath>

namespace lps {

namespace {

struct FormsStripped {
  Eigen::VectorXd coeff;
  Eigen::VectorXd rates;
  Eigen::MatrixXd harmonicless_modes;  // edge profiles above the kernel
  double removed = 0.0;
};

FormsStripped strip_harmonics(const SpectralOperator& hodge, const Eigen::VectorXd& eta) {
  if (!hodge.is_forms()) throw InvalidInput("expected a forms operator");
  if (eta.size() != hodge.dof())
    throw InvalidInput("edge field has the wrong length");
  const int K = hodge.dof();
  const int kd = hodge.kernel_dim();
  Eigen::VectorXd c = hodge.coefficients(eta);
  FormsStripped s;
  s.removed = c.head(kd).squaredNorm();
  s.coeff = c.tail(K - kd);
  s.rates = hodge.eigenvalues().tail(K - kd);
  s.harmonicless_modes = hodge.modes().rightCols(K - kd);
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

FunctionalResult run_engine(const DiscreteManifold& M, const ConeKernel& k,
                            const FunctionalOptions& opt, double removed) {
  ConeDiagnostics diag;
  Eigen::VectorXd sq;
  if (opt.engine == EngineChoice::Exact)
    sq = cone_integral_exact(M, k);
  else
    sq = cone_integral_quadrature(M, k, opt.quad, &diag);
  return finish(std::move(sq), opt.engine, removed, diag);
}

}  // namespace

Eigen::VectorXd d_op(const DiscreteManifold& M, const Eigen::VectorXd& f) {
  if (f.size() != M.vertex_count()) throw InvalidInput("d: vertex field length mismatch");
  Eigen::VectorXd out(M.edge_count());
  for (int e = 0; e < M.edge_count(); ++e)
    out[e] = f[M.edges()[e].v] - f[M.edges()[e].u];
  return out;
}

Eigen::VectorXd dstar_op(const DiscreteManifold& M, const Eigen::VectorXd& beta) {
  if (beta.size() != M.edge_count()) throw InvalidInput("d*: edge field length mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(M.vertex_count());
  for (int e = 0; e < M.edge_count(); ++e) {
    const Edge& ed = M.edges()[e];
    out[ed.v] += ed.w * beta[e];
    out[ed.u] -= ed.w * beta[e];
  }
  return out.cwiseQuotient(M.measures());
}

Eigen::MatrixXd incidence_matrix(const DiscreteManifold& M) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(M.edge_count(), M.vertex_count());
  for (int e = 0; e < M.edge_count(); ++e) {
    D(e, M.edges()[e].u) = -1.0;
    D(e, M.edges()[e].v) = 1.0;
  }
  return D;
}

Eigen::VectorXd edge_modulus_sq(const DiscreteManifold& M, const Eigen::VectorXd& beta) {
  if (beta.size() != M.edge_count())
    throw InvalidInput("edge modulus: edge field length mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(M.vertex_count());
  for (int e = 0; e < M.edge_count(); ++e) {
    const Edge& ed = M.edges()[e];
    const double q = ed.w * beta[e] * beta[e];
    out[ed.u] += q;
    out[ed.v] += q;
  }
  return (out.array() / (2.0 * M.measures().array())).matrix();
}

SpectralOperator hodge_assemble(std::shared_ptr<const DiscreteManifold> M) {
  if (!M) throw InvalidInput("hodge_assemble: null manifold");
  const int m = M->edge_count();
  Eigen::VectorXd w(m), sw(m);
  for (int e = 0; e < m; ++e) {
    w[e] = M->edges()[e].w;
    sw[e] = std::sqrt(w[e]);
  }
  const Eigen::MatrixXd D = incidence_matrix(*M);
  const Eigen::MatrixXd A = sw.asDiagonal() * D *
                            M->measures().cwiseInverse().asDiagonal() *
                            D.transpose() * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Eigen::MatrixXd(0.5 * (A + A.transpose())));
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const double cut = lam.size() ? 1e-10 * std::max(lam[m - 1], 0.0) : 0.0;
  int kd = 0;
  while (kd < m && lam[kd] <= cut) lam[kd++] = 0.0;
  Eigen::MatrixXd modes = sw.cwiseInverse().asDiagonal() * es.eigenvectors();
  return SpectralOperator(OperatorKind::Forms, M, std::move(lam), std::move(modes),
                          std::move(w), kd, PotentialSplit::zero(M->vertex_count()));
}

FunctionalResult conical_g_forms(const SpectralOperator& hodge,
                                 const Eigen::VectorXd& eta,
                                 const FunctionalOptions& opt) {
  FormsStripped s = strip_harmonics(hodge, eta);
  const DiscreteManifold& M = hodge.manifold();
  const int K = static_cast<int>(s.coeff.size());

  ConeKernel k;
  k.geom = {ConeScaling::SqrtT, 1.0};
  k.time_power = 0;
  k.rates = s.rates;
  ConeChannel ch;
  ch.type = ConeChannel::Type::Value;
  ch.fields.resize(M.vertex_count(), K);
  for (int j = 0; j < K; ++j)
    ch.fields.col(j) = s.coeff[j] * dstar_op(M, s.harmonicless_modes.col(j));
  k.channels.push_back(std::move(ch));
  return run_engine(M, k, opt, s.removed);
}

PoissonFormsParts poisson_forms(const SpectralOperator& hodge,
                                const Eigen::VectorXd& eta,
                                const FunctionalOptions& opt) {
  FormsStripped s = strip_harmonics(hodge, eta);
  const DiscreteManifold& M = hodge.manifold();
  const int K = static_cast<int>(s.coeff.size());
  const Eigen::VectorXd sr = s.rates.cwiseSqrt();

  ConeKernel time_k;
  time_k.geom = {ConeScaling::LinearT, 1.0};
  time_k.time_power = 1;
  time_k.rates = sr;
  {
    ConeChannel ch;
    ch.type = ConeChannel::Type::EdgeModulus;
    ch.fields = s.harmonicless_modes * (s.coeff.array() * sr.array()).matrix().asDiagonal();
    time_k.channels.push_back(std::move(ch));
  }

  ConeKernel space_k;
  space_k.geom = {ConeScaling::LinearT, 1.0};
  space_k.time_power = 1;
  space_k.rates = sr;
  {
    ConeChannel ch;
    ch.type = ConeChannel::Type::Value;
    ch.fields.resize(M.vertex_count(), K);
    for (int j = 0; j < K; ++j)
      ch.fields.col(j) = s.coeff[j] * dstar_op(M, s.harmonicless_modes.col(j));
    space_k.channels.push_back(std::move(ch));
  }

  PoissonFormsParts parts;
  ConeDiagnostics dt, dx;
  Eigen::VectorXd sq_t, sq_x;
  if (opt.engine == EngineChoice::Exact) {
    sq_t = cone_integral_exact(M, time_k);
    sq_x = cone_integral_exact(M, space_k);
  } else {
    sq_t = cone_integral_quadrature(M, time_k, opt.quad, &dt);
    sq_x = cone_integral_quadrature(M, space_k, opt.quad, &dx);
  }
  parts.time_part = finish(sq_t, opt.engine, s.removed, dt);
  parts.dstar_part = finish(sq_x, opt.engine, s.removed, dx);
  parts.d_part =
      finish(Eigen::VectorXd::Zero(M.vertex_count()), opt.engine, s.removed, {});
  ConeDiagnostics dfull;
  dfull.tail_bound = dt.tail_bound + dx.tail_bound;
  dfull.small_t_bound = dt.small_t_bound + dx.small_t_bound;
  dfull.quad_error = dt.quad_error + dx.quad_error;
  parts.full = finish(sq_t + sq_x, opt.engine, s.removed, dfull);
  return parts;
}

FieldMap riesz_scalar(const SpectralOperator& op) {
  if (op.is_forms()) throw InvalidInput("riesz_scalar expects a scalar operator");
  auto Mptr = op.manifold_ptr();
  return [Mptr, modes = op.modes(), lam = op.eigenvalues(), w = op.weight(),
          kd = op.kernel_dim()](const Eigen::VectorXd& f) {
    Eigen::VectorXd c = modes.transpose() * (w.asDiagonal() * f);
    for (int k = 0; k < c.size(); ++k)
      c[k] = k < kd ? 0.0 : c[k] / std::sqrt(lam[k]);
    return d_op(*Mptr, modes * c);
  };
}

FieldMap riesz_forms(const SpectralOperator& hodge) {
  if (!hodge.is_forms()) throw InvalidInput("riesz_forms expects a forms operator");
  auto Mptr = hodge.manifold_ptr();
  return [Mptr, modes = hodge.modes(), lam = hodge.eigenvalues(), w = hodge.weight(),
          kd = hodge.kernel_dim()](const Eigen::VectorXd& beta) {
    Eigen::VectorXd c = modes.transpose() * (w.asDiagonal() * beta);
    for (int k = 0; k < c.size(); ++k)
      c[k] = k < kd ? 0.0 : c[k] / std::sqrt(lam[k]);
    return dstar_op(*Mptr, modes * c);
  };
}

double commutation_residual(const DiscreteManifold& M) {
  const Eigen::MatrixXd D = incidence_matrix(M);
  Eigen::VectorXd w(M.edge_count());
  for (int e = 0; e < M.edge_count(); ++e) w[e] = M.edges()[e].w;
  const Eigen::MatrixXd Minv = M.measures().cwiseInverse().asDiagonal();
  const Eigen::MatrixXd L0 = Minv * D.transpose() * w.asDiagonal() * D;
  const Eigen::MatrixXd L1 = D * Minv * D.transpose() * w.asDiagonal();
  const Eigen::MatrixXd lhs = D * L0;
  const Eigen::MatrixXd rhs = L1 * D;
  const double scale = std::max(lhs.cwiseAbs().maxCoeff(), 1.0);
  return (lhs - rhs).cwiseAbs().maxCoeff() / scale;
}

double intertwining_residual(const DiscreteManifold& M) {
  const Eigen::MatrixXd D = incidence_matrix(M);
  Eigen::VectorXd w(M.edge_count());
  for (int e = 0; e < M.edge_count(); ++e) w[e] = M.edges()[e].w;
  const Eigen::MatrixXd Minv = M.measures().cwiseInverse().asDiagonal();
  const Eigen::MatrixXd Dstar = Minv * D.transpose() * w.asDiagonal();
  const Eigen::MatrixXd L0 = Minv * D.transpose() * w.asDiagonal() * D;
  const Eigen::MatrixXd L1 = D * Minv * D.transpose() * w.asDiagonal();
  const Eigen::MatrixXd lhs = L0 * Dstar;
  const Eigen::MatrixXd rhs = Dstar * L1;
  const double scale = std::max(lhs.cwiseAbs().maxCoeff(), 1.0);
  return (lhs - rhs).cwiseAbs().maxCoeff() / scale;
}

}  // namespace lps
