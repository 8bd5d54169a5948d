#pragma once

#include <functional>

#include "lpslab/cone.hpp"
#include "lpslab/spectral.hpp"

namespace lps {

enum class EngineChoice { Exact, Quadrature };

// Weight used for the potential term inside square functionals when the
// potential has a negative part: |V| (the default) or V_+ only.  Both keep
// the integrand nonnegative; for V >= 0 they coincide.
enum class PotentialWeight { Magnitude, PositivePart };

// Scalar symbol class |F(z)| <= C z^tau / (1 + z^{tau+delta}) with
// delta > 1/2.  tau > 0 gives vanishing at the origin; tau = 0 is admitted
// as a boundary case so that the plain heat symbol e^{-z} (which has
// F(0) = 1) can be registered — the envelope check is still enforced with
// the declared parameters on a log grid z in [1e-6, 1e6].
struct DecayClass {
  std::function<double(double)> F;
  double tau = 1.0;
  double delta = 1.0;
  double cbound = 1.0;
  bool canonical_heat = false;

  static DecayClass validated(std::function<double(double)> F, double tau,
                              double delta, double cbound);
  static DecayClass heat();  // e^{-z}: tau = 0, delta = 1, C = 1
};

// Time profile phi for the variable-aperture square functional
// S_phi f(x)^2 = int int_{B(x, sqrt t)} |phi(tL) f|^2(y) dmu dt / (t Vol(y, sqrt t)).
// origin_exponent kappa declares phi(z) ~ z^kappa near 0; the canonical
// profile phi0(z) = sqrt(z) e^{-z} is the only one with an exact engine.
struct PhiSpec {
  std::function<double(double)> phi;
  double origin_exponent = 1.0;
  bool canonical = false;

  static PhiSpec canonical_phi0();
};

struct FunctionalResult {
  Eigen::VectorXd values;  // per vertex, nonnegative
  EngineChoice engine = EngineChoice::Exact;
  double kernel_mass_removed = 0.0;  // squared-norm mass projected out of f
  ConeDiagnostics diag;
};

struct FunctionalOptions {
  EngineChoice engine = EngineChoice::Exact;
  PotentialWeight potential_weight = PotentialWeight::Magnitude;
  QuadratureConfig quad;
};

// Conical square function of the heat semigroup:
//   G f(x)^2 = int int_{B(x, sqrt t)} (|grad u_t|^2 + V_w u_t^2)(y) dmu dt / Vol(y, sqrt t).
FunctionalResult conical_g(const SpectralOperator& op, const Eigen::VectorXd& f,
                           const FunctionalOptions& opt = {});

// Horizontal square function:
//   S f(x)^2 = int int_{B(x, sqrt t)} t |L u_t|^2(y) dmu dt / Vol(y, sqrt t).
FunctionalResult horizontal_s(const SpectralOperator& op, const Eigen::VectorXd& f,
                              const FunctionalOptions& opt = {});

// Variable-profile square function (see PhiSpec).
FunctionalResult s_phi(const SpectralOperator& op, const PhiSpec& phi,
                       const Eigen::VectorXd& f, const FunctionalOptions& opt = {});

// Conical square function of a general symbol F in the decay class:
//   G_F f(x)^2 = int int_{B(x, sqrt t)} (|grad F(tL) f|^2 + V_w |F(tL) f|^2)(y) dmu dt / Vol(y, sqrt t).
// The exact engine is available exactly when F is the canonical heat symbol,
// in which case the result coincides with conical_g by definition.
FunctionalResult generalized_g(const SpectralOperator& op, const DecayClass& F,
                               const Eigen::VectorXd& f,
                               const FunctionalOptions& opt = {});

// Vertical square function, closed form:
//   H f(x)^2 = int_0^inf (|grad u_t|^2 + V_w u_t^2)(x) dt
//            = sum_{j,k} c_j c_k Gamma(phi_j, phi_k)(x) / (lambda_j + lambda_k).
FunctionalResult vertical_h(const SpectralOperator& op, const Eigen::VectorXd& f,
                            PotentialWeight w = PotentialWeight::Magnitude);

// Poisson conical square function with linear aperture, u_t = e^{-t sqrt L} f:
//   P f(x)^2 = int int_{B(x,t)} t (|d_t u_t|^2 + |grad u_t|^2 + V_w u_t^2)(y) dmu dt / Vol(y, t)
// split into the time part (|d_t u|) and space part (gradient + potential).
struct PoissonParts {
  FunctionalResult full, time_part, space_part;
};
PoissonParts poisson_p(const SpectralOperator& op, const Eigen::VectorXd& f,
                       const FunctionalOptions& opt = {});

}  // namespace lps
