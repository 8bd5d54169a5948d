#pragma once

#include <vector>

#include "lpslab/manifold.hpp"
#include "lpslab/spectral.hpp"

namespace lps {

// Centered Hardy-Littlewood maximal function over the radii where balls
// around x actually change; the r = 0 ball makes Mf >= |f| pointwise.
Eigen::VectorXd maximal_function(const DiscreteManifold& M, const Eigen::VectorXd& f);

struct BadPart {
  Eigen::VectorXd field;  // supported inside ball
  BallSpec ball;
  double ball_measure = 0.0;
};

// Level decomposition f = good + sum_i bad_i at height lambda in the L^p
// scale.  good is bounded by a multiple of lambda, each bad part lives on a
// Whitney ball inside Omega = { (M|f|^p)^{1/p} > lambda } and has zero mean.
struct CZDecomposition {
  double lambda = 0.0;
  double p = 1.0;
  Eigen::VectorXd good;
  std::vector<BadPart> bad;
  std::vector<int> omega;
  int overlap = 0;  // max over x of #{ i : x in 4 B_i }
  FitReport report;
};

// Whitney radii r(x) = d(x, Omega^c)/2, greedy Vitali center selection by
// decreasing radius, partition of unity by normalized ball indicators,
// b_i = (f - chi_i-weighted average) chi_i.  Omega = everything is rejected
// (the message names the smallest admissible level); Omega empty gives the
// trivial decomposition.
CZDecomposition cz_decompose(const DiscreteManifold& M, const Eigen::VectorXd& f,
                             double lambda, double p);

// Remainder interaction table: with h_i = (I - e^{-r_i^2 L})^K b_i,
//   I_{i,j}^2 = (1/2) int_0^inf || grad e^{-sL} h_i ||^2_{L2(C_j(B_i))} ds
// computed by quadrature for j = 0..jmax, fitted against
//   I_{i,j} <= C mu(B_i)^{1/2} 2^{-2jK},
// with the mean per-step log2 decay slope reported.  Empty annuli give a
// zero row and are excluded from the fit.
FitReport cz_remainder(const SpectralOperator& op, const CZDecomposition& dec,
                       int K, int jmax);

}  // namespace lps
