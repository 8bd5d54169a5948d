#pragma once

#include <memory>

#include "lpslab/functionals.hpp"
#include "lpslab/probes.hpp"
#include "lpslab/spectral.hpp"

namespace lps {

// Exterior derivative on the canonical orientation u < v:  (df)_e = f(v) - f(u).
Eigen::VectorXd d_op(const DiscreteManifold& M, const Eigen::VectorXd& f);

// Adjoint of d for <f,g>_mu on vertices and <a,b>_w on edges:
//   (d* b)(x) = (1/mu_x) ( sum_{e: head x} w_e b_e - sum_{e: tail x} w_e b_e ).
Eigen::VectorXd dstar_op(const DiscreteManifold& M, const Eigen::VectorXd& beta);

// Signed incidence matrix D (edges x vertices) with D f = d f.
Eigen::MatrixXd incidence_matrix(const DiscreteManifold& M);

// Pointwise modulus of an edge field:
//   |beta|^2(x) = (1/(2 mu_x)) sum_{e ~ x} w_e beta_e^2.
Eigen::VectorXd edge_modulus_sq(const DiscreteManifold& M, const Eigen::VectorXd& beta);

// Hodge Laplacian on 1-forms, Delta_1 = d d*, diagonalized in the
// conductance inner product.  Its kernel is the cycle space (harmonic
// fields); the complex has no 2-forms, so d vanishes on 1-forms.
SpectralOperator hodge_assemble(std::shared_ptr<const DiscreteManifold> M);

// Conical square function on 1-forms, heat scaling:
//   G_1 eta(x)^2 = int int_{B(x, sqrt t)} |d* e^{-t Delta_1} eta|^2(y) dmu dt / Vol(y, sqrt t).
// Harmonic content is annihilated by d*; its squared mass is reported as
// kernel_mass_removed rather than guarded, since nothing diverges.
FunctionalResult conical_g_forms(const SpectralOperator& hodge,
                                 const Eigen::VectorXd& eta,
                                 const FunctionalOptions& opt = {});

// Poisson conical square function on 1-forms, u_t = e^{-t sqrt(Delta_1)} eta:
//   P_1 eta(x)^2 = int int_{B(x,t)} t (|d_t u_t|^2 + |d u_t|^2 + |d* u_t|^2)(y) dmu dt / Vol(y, t).
// The d-part is identically zero (no 2-forms) and is returned as such.
struct PoissonFormsParts {
  FunctionalResult full, time_part, dstar_part, d_part;
};
PoissonFormsParts poisson_forms(const SpectralOperator& hodge,
                                const Eigen::VectorXd& eta,
                                const FunctionalOptions& opt = {});

// Riesz transforms.  Scalar: f -> d L^{-1/2} f (edge field; kernel projected
// out).  Forms: beta -> d* Delta_1^{-1/2} beta (vertex function).  Use with
// ratio_search and the matching in/out measures.
FieldMap riesz_scalar(const SpectralOperator& op);
FieldMap riesz_forms(const SpectralOperator& hodge);

// Exact matrix identities (zero up to rounding), returned as relative
// residuals:  d Delta_0 = Delta_1 d  and  Delta_0 d* = d* Delta_1  for the
// potential-free Laplacians.
double commutation_residual(const DiscreteManifold& M);
double intertwining_residual(const DiscreteManifold& M);

}  // namespace lps
