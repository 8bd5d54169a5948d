#pragma once

#include "lpslab/cone.hpp"
#include "lpslab/manifold.hpp"

namespace lps {

// A function on the upper half space (vertex, time), sampled on a strictly
// increasing positive time grid.  Time integrals against dt/t use the
// trapezoid rule in log t, so the grid need not be uniform.
struct ConeFunction {
  Eigen::MatrixXd samples;  // n x m
  Eigen::VectorXd tgrid;    // m
  ConeGeometry geom;        // aperture used by the area functional
};

// Quadrature weights for int ... dt/t on the grid (trapezoid in log t).
Eigen::VectorXd log_time_weights(const Eigen::VectorXd& tgrid);

// A(F)(x)^2 = int sum_{y in B(x, r(t))} |F(y,t)|^2 mu(y) / Vol(y, r(t)) dt/t
Eigen::VectorXd area_functional(const DiscreteManifold& M, const ConeFunction& F);

// V(F)(x)^2 = int |F(x,t)|^2 dt/t
Eigen::VectorXd vertical_functional(const DiscreteManifold& M, const ConeFunction& F);

// Tent norm: for p < inf the L^p(mu) norm of A(F); for p = inf
//   sup over balls B of ( (1/mu(B)) int_0^{r_B} sum_{y in B} |F|^2 mu dt/t )^{1/2},
// the sup running over all centers and all breakpoint radii.
double tent_norm(const DiscreteManifold& M, const ConeFunction& F, double p);

}  // namespace lps
