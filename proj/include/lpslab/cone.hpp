#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "lpslab/manifold.hpp"

namespace lps {

// Cone aperture:  at time t the cone over x collects vertices within
// radius_factor * sqrt(t)  (heat scaling) or  radius_factor * t  (Poisson
// scaling) of x.
enum class ConeScaling { SqrtT, LinearT };

struct ConeGeometry {
  ConeScaling scaling = ConeScaling::SqrtT;
  double radius_factor = 1.0;

  double radius(double t) const {
    const double s = scaling == ConeScaling::SqrtT ? std::sqrt(t) : t;
    return radius_factor * s;
  }
  double entry_time(double d) const {
    const double s = d / radius_factor;
    return scaling == ConeScaling::SqrtT ? s * s : s;
  }
};

// One additive piece of the integrand.  Each channel contributes, at vertex
// y and time t, a sum of squared amplitudes that are linear in the mode
// profiles scaled by exp(-rate_k t):
//   Value:       ( vertex_weight(y) * sum_k fields(y,k) e^{-r_k t} )^2
//   Gradient:    local gradient energy of u_t = fields * e^{-rates t} at y
//   EdgeModulus: (1/(2 mu_y)) sum_{e ~ y} w_e ( sum_k fields(e,k) e^{-r_k t} )^2
struct ConeChannel {
  enum class Type { Value, Gradient, EdgeModulus };
  Type type = Type::Value;
  Eigen::MatrixXd fields;         // Value/Gradient: n x K;  EdgeModulus: m x K
  Eigen::VectorXd vertex_weight;  // Value channels; empty means all ones
};

// Everything the integration engines need:
//   F(x)^2 = int_0^inf t^q  sum_{y in cone_x(t)} psi_t(y) mu(y) / Vol(y, radius(t)) dt
// where psi_t is either assembled from spectral channels (exact engine and
// default quadrature path) or given directly as a callback (quadrature only).
struct ConeKernel {
  ConeGeometry geom;
  int time_power = 0;     // q in {0, 1}
  Eigen::VectorXd rates;  // one positive decay rate per retained mode
  std::vector<ConeChannel> channels;

  // Custom integrand psi_t (already including the t^q factor).  When set it
  // replaces the channel evaluation; the exact engine refuses such kernels.
  std::function<Eigen::VectorXd(double)> integrand;
  double rate_hint = 0.0;  // decay scale when rates is empty

  // Behavior of the integrand near t = 0: psi_t ~ t^{origin_exponent - 1}.
  // When finite_origin is false the quadrature starts at a positive cutoff
  // and reports an estimate of the missed mass below it.
  bool finite_origin = true;
  double origin_exponent = 1.0;
};

struct QuadratureConfig {
  int log_points = 200;     // log-spaced backbone of the node set
  double lo_factor = 1e-4;  // node range [lo, hi] / (smallest decay rate)
  double hi_factor = 1e3;
  bool adaptive = true;
  double rel_tol = 1e-9;
  int max_depth = 22;
};

struct ConeDiagnostics {
  double tail_bound = 0.0;
  double small_t_bound = 0.0;
  double quad_error = 0.0;
};

// Piecewise-spectral closed form: between consecutive cone breakpoints the
// integrand is a fixed quadratic in decaying exponentials and is integrated
// analytically.  Returns the squared functional per vertex.
Eigen::VectorXd cone_integral_exact(const DiscreteManifold& M, const ConeKernel& k);

// Breakpoint-aware numerical integration on a log grid refined by adaptive
// Simpson panels.  Returns the squared functional per vertex.
Eigen::VectorXd cone_integral_quadrature(const DiscreteManifold& M, const ConeKernel& k,
                                         const QuadratureConfig& cfg,
                                         ConeDiagnostics* diag = nullptr);

// Evaluate the channel integrand at one time (the quadrature path's view of
// the kernel); exposed for tests and custom probes.
Eigen::VectorXd cone_channel_integrand(const DiscreteManifold& M, const ConeKernel& k,
                                       double t);

}  // namespace lps
