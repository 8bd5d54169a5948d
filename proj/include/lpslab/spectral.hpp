#pragma once

#include <functional>
#include <memory>

#include <Eigen/Dense>

#include "lpslab/manifold.hpp"

namespace lps {

enum class OperatorKind { Scalar, Forms };
enum class KernelPolicy { Reject, ProjectOut };

// Dense eigendecomposition of a Schroedinger operator L = Delta + V on
// functions (or of the Hodge Laplacian on edge fields, see forms.hpp).
// Modes are orthonormal with respect to the weighted inner product
// <f, g> = sum_i weight_i f_i g_i (vertex measure mu, or edge conductances).
class SpectralOperator {
 public:
  SpectralOperator(OperatorKind kind, std::shared_ptr<const DiscreteManifold> M,
                   Eigen::VectorXd lambda, Eigen::MatrixXd modes,
                   Eigen::VectorXd weight, int kernel_dim, PotentialSplit V);

  OperatorKind kind() const { return kind_; }
  bool is_forms() const { return kind_ == OperatorKind::Forms; }
  int dof() const { return static_cast<int>(lambda_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::MatrixXd& modes() const { return modes_; }
  const Eigen::VectorXd& weight() const { return weight_; }
  int kernel_dim() const { return kernel_dim_; }
  const DiscreteManifold& manifold() const { return *M_; }
  std::shared_ptr<const DiscreteManifold> manifold_ptr() const { return M_; }
  const PotentialSplit& potential() const { return V_; }

  // Smallest eigenvalue above the kernel cut (throws if none).
  double spectral_gap() const;

  double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
    return (weight_.array() * f.array() * g.array()).sum();
  }
  double norm(const Eigen::VectorXd& f) const { return std::sqrt(inner(f, f)); }

  Eigen::VectorXd coefficients(const Eigen::VectorXd& f) const;  // <f, mode_k>
  Eigen::VectorXd synthesize(const Eigen::VectorXd& c) const { return modes_ * c; }
  Eigen::VectorXd project_out_kernel(const Eigen::VectorXd& f,
                                     double* removed_mass = nullptr) const;

  // phi(L) f via the spectral theorem.  A non-finite phi(lambda_k) is an
  // error unless the mode is in the kernel and policy allows projecting it
  // out (the convention used by inverse powers).
  Eigen::VectorXd calculus(const std::function<double(double)>& phi,
                           const Eigen::VectorXd& f,
                           KernelPolicy policy = KernelPolicy::Reject) const;

  Eigen::VectorXd heat_apply(double t, const Eigen::VectorXd& f) const;
  Eigen::VectorXd poisson_apply(double t, const Eigen::VectorXd& f) const;
  // Kernel matrix p_t with  (e^{-tL} f)(x) = sum_y p_t(x,y) f(y) weight_y.
  Eigen::MatrixXd heat_kernel(double t) const;

 private:
  OperatorKind kind_;
  std::shared_ptr<const DiscreteManifold> M_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd modes_;
  Eigen::VectorXd weight_;
  int kernel_dim_;
  PotentialSplit V_;
};

// (Delta f)(x) = (1/mu(x)) sum_y w(x,y) (f(x) - f(y)) + V(x) f(x).
Eigen::VectorXd laplacian_apply(const DiscreteManifold& M, const PotentialSplit& V,
                                const Eigen::VectorXd& f);

// |grad f|^2(x) = (1/(2 mu(x))) sum_y w(x,y) (f(y) - f(x))^2.
Eigen::VectorXd gradient_modulus_sq(const DiscreteManifold& M, const Eigen::VectorXd& f);

// Assemble L = Delta + V (effective potential vplus - vminus) and
// diagonalize.  Throws NumericalGuard if the operator is indefinite beyond
// rounding (smallest eigenvalue below -1e-8 times the spectral scale).
SpectralOperator assemble(std::shared_ptr<const DiscreteManifold> M,
                          const PotentialSplit& V);

}  // namespace lps
