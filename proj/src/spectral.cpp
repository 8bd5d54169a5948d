#include "lpslab/spectral.hpp"

#include <cmath>

namespace lps {

SpectralOperator::SpectralOperator(OperatorKind kind,
                                   std::shared_ptr<const DiscreteManifold> M,
                                   Eigen::VectorXd lambda, Eigen::MatrixXd modes,
                                   Eigen::VectorXd weight, int kernel_dim,
                                   PotentialSplit V)
    : kind_(kind),
      M_(std::move(M)),
      lambda_(std::move(lambda)),
      modes_(std::move(modes)),
      weight_(std::move(weight)),
      kernel_dim_(kernel_dim),
      V_(std::move(V)) {}

double SpectralOperator::spectral_gap() const {
  if (kernel_dim_ >= dof())
    throw NumericalGuard("operator has no spectrum above its kernel");
  return lambda_[kernel_dim_];
}

Eigen::VectorXd SpectralOperator::coefficients(const Eigen::VectorXd& f) const {
  return modes_.transpose() * (weight_.asDiagonal() * f);
}

Eigen::VectorXd SpectralOperator::project_out_kernel(const Eigen::VectorXd& f,
                                                     double* removed_mass) const {
  if (kernel_dim_ == 0) {
    if (removed_mass) *removed_mass = 0.0;
    return f;
  }
  Eigen::VectorXd c = coefficients(f);
  double mass = 0.0;
  for (int k = 0; k < kernel_dim_; ++k) {
    mass += c[k] * c[k];
    c[k] = 0.0;
  }
  if (removed_mass) *removed_mass = mass;
  return synthesize(c);
}

Eigen::VectorXd SpectralOperator::calculus(const std::function<double(double)>& phi,
                                           const Eigen::VectorXd& f,
                                           KernelPolicy policy) const {
  Eigen::VectorXd c = coefficients(f);
  for (int k = 0; k < dof(); ++k) {
    const double v = phi(lambda_[k]);
    if (!std::isfinite(v)) {
      if (policy == KernelPolicy::ProjectOut && k < kernel_dim_) {
        c[k] = 0.0;
        continue;
      }
      throw NumericalGuard("spectral calculus: function undefined at eigenvalue " +
                           std::to_string(lambda_[k]));
    }
    c[k] *= v;
  }
  return synthesize(c);
}

Eigen::VectorXd SpectralOperator::heat_apply(double t, const Eigen::VectorXd& f) const {
  return calculus([t](double l) { return std::exp(-t * l); }, f);
}

Eigen::VectorXd SpectralOperator::poisson_apply(double t, const Eigen::VectorXd& f) const {
  // Eigenvalues can sit a hair below zero from rounding; the guard in
  // assemble() has already bounded how far.
  return calculus([t](double l) { return std::exp(-t * std::sqrt(std::max(l, 0.0))); }, f);
}

Eigen::MatrixXd SpectralOperator::heat_kernel(double t) const {
  Eigen::VectorXd e = (-t * lambda_.array()).exp();
  return modes_ * e.asDiagonal() * modes_.transpose();
}

Eigen::VectorXd laplacian_apply(const DiscreteManifold& M, const PotentialSplit& V,
                                const Eigen::VectorXd& f) {
  const int n = M.vertex_count();
  Eigen::VectorXd out(n);
  const Eigen::VectorXd veff = V.effective();
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (const Neighbor& nb : M.neighbors(x)) acc += nb.w * (f[x] - f[nb.vertex]);
    out[x] = acc / M.mu(x) + veff[x] * f[x];
  }
  return out;
}

Eigen::VectorXd gradient_modulus_sq(const DiscreteManifold& M, const Eigen::VectorXd& f) {
  const int n = M.vertex_count();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (const Neighbor& nb : M.neighbors(x)) {
      const double d = f[nb.vertex] - f[x];
      acc += nb.w * d * d;
    }
    out[x] = acc / (2.0 * M.mu(x));
  }
  return out;
}

SpectralOperator assemble(std::shared_ptr<const DiscreteManifold> M,
                          const PotentialSplit& V) {
  const int n = M->vertex_count();
  if (V.vplus.size() != n || V.vminus.size() != n)
    throw InvalidInput("assemble: potential size does not match the model");
  if (V.vplus.minCoeff() < 0.0 || V.vminus.minCoeff() < 0.0)
    throw InvalidInput("assemble: potential split parts must be nonnegative");

  // Symmetrized form  S = Mu^{-1/2} (stiffness) Mu^{-1/2} + diag(V).
  const Eigen::VectorXd veff = V.effective();
  Eigen::VectorXd isq = M->measures().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : M->edges()) {
    S(e.u, e.u) += e.w * isq[e.u] * isq[e.u];
    S(e.v, e.v) += e.w * isq[e.v] * isq[e.v];
    S(e.u, e.v) -= e.w * isq[e.u] * isq[e.v];
    S(e.v, e.u) -= e.w * isq[e.u] * isq[e.v];
  }
  for (int i = 0; i < n; ++i) S(i, i) += veff[i];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw NumericalGuard("assemble: eigendecomposition failed");
  Eigen::VectorXd lambda = es.eigenvalues();
  const double lmax = lambda[n - 1];
  const double scale = std::max(std::abs(lmax), std::abs(lambda[0]));
  if (lambda[0] < -1e-8 * std::max(scale, 1.0))
    throw NumericalGuard("assemble: indefinite operator, eigenvalue " +
                         std::to_string(lambda[0]));

  const double ktol = 1e-10 * std::max(lmax, 0.0);
  int kdim = 0;
  while (kdim < n && lambda[kdim] <= ktol) ++kdim;

  Eigen::MatrixXd modes = isq.asDiagonal() * es.eigenvectors();
  Eigen::VectorXd weight = M->measures();
  return SpectralOperator(OperatorKind::Scalar, std::move(M), std::move(lambda),
                          std::move(modes), std::move(weight), kdim, V);
}

}  // namespace lps
