#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lpslab/functionals.hpp"
#include "lpslab/manifold.hpp"
#include "lpslab/spectral.hpp"

namespace lps {

// Weighted L^p norm; p = inf gives the sup norm.
double lp_norm(const Eigen::VectorXd& mu, const Eigen::VectorXd& f, double p);

// Weak L^p quasinorm  sup_l l * mu{|f| >= l}^{1/p}  (max over the distinct
// values of |f|, where the sup is attained).
double weak_lp(const Eigen::VectorXd& mu, const Eigen::VectorXd& f, double p);

struct SearchConfig {
  int restarts = 8;
  int steps = 24;
  // 0: full coordinate basis up to 96 dof, random batches of 16 above;
  // otherwise the batch size for finite-difference directions.
  int directions = 0;
  double step = 0.25;
  std::uint64_t seed = 42;
  // Prepended to the internal battery (vertex indicators + Gaussian fields);
  // callers typically add extreme eigenmodes here.
  std::vector<Eigen::VectorXd> extra_starts;
};

struct NormEstimate {
  double ratio = 0.0;
  Eigen::VectorXd witness;
  double p = 2.0;
  // True when the best ascent was still improving on its final allowed step.
  bool budget_exhausted = false;
  int evaluations = 0;
};

using FieldMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Empirical lower bound on sup ||T f||_p / ||f||_p over f != 0 for a
// positively homogeneous T (|T(cf)| = |c| |T f|; verified on a sample, else
// rejected).  Projected finite-difference ascent from a battery of starts;
// deterministic for a fixed seed, and the best ratio never decreases as the
// budget grows.  The output norm may live on a different measure (mu_out)
// than the input, e.g. edge fields produced from vertex functions.
NormEstimate ratio_search(const FieldMap& T, const Eigen::VectorXd& mu_in,
                          const Eigen::VectorXd& mu_out, double p,
                          const SearchConfig& cfg);
inline NormEstimate ratio_search(const FieldMap& T, const Eigen::VectorXd& mu,
                                 double p, const SearchConfig& cfg = {}) {
  return ratio_search(T, mu, mu, p, cfg);
}

// Exact mu-weighted L2 -> L2 operator norm of a dense linear map (oracle).
double l2_operator_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& mu_out,
                        const Eigen::VectorXd& mu_in);

// A time-indexed family of linear maps together with the bookkeeping needed
// to restrict inputs/outputs to vertex sets and take weighted L2 norms.
struct OperatorFamily {
  std::function<Eigen::MatrixXd(double)> matrix;  // q x dof_in
  Eigen::VectorXd in_weight;                      // dof_in
  Eigen::VectorXd out_weight;                     // q
  std::vector<int> out_vertex;                    // owning vertex per output row
  std::function<std::vector<int>(const DiscreteManifold&, const std::vector<int>&)>
      in_columns;  // input columns supported in a vertex set
  std::string label;
};

OperatorFamily family_heat(const SpectralOperator& op);
OperatorFamily family_sqrt_t_grad_heat(const SpectralOperator& op);
OperatorFamily family_sqrt_t_grad_symbol(const SpectralOperator& op, DecayClass F);
OperatorFamily family_sqrt_t_dstar_heat(const SpectralOperator& forms_op);

// Exact restricted operator norms  t -> || chi_F T_t chi_E ||_{L2(E) -> L2(F)}
// against the decay model C e^{-c d(E,F)^2 / t}: least-squares decay rate
// (clamped >= 0), then the smallest feasible amplitude, so reported
// violations are zero by construction and the slack column shows sharpness.
FitReport davies_gaffney(const DiscreteManifold& M, const OperatorFamily& fam,
                         const std::vector<int>& E, const std::vector<int>& F,
                         const std::vector<double>& ts);

// Log-log slope of || chi_F T_t chi_E || against t on the given grid
// (small-time vanishing order probe).
FitReport decay_slope(const DiscreteManifold& M, const OperatorFamily& fam,
                      const std::vector<int>& E, const std::vector<int>& F,
                      const std::vector<double>& ts);

// Heat kernel upper bound p_t(x,y) <= C e^{-c d^2/t} / Vol(y, sqrt t) over a
// time window; entries below the numerical floor are excluded and counted.
FitReport gaussian_fit(const SpectralOperator& op, const std::vector<double>& ts);

// L^p(B) -> L2(C_j(B)) decay of a family against
//   C mu(B)^{1/2 - 1/p} max(2^j r_B / sqrt t, sqrt t / (2^j r_B))^beta e^{-c 4^j r_B^2 / t}.
// p = 1 is computed exactly (column extremes); otherwise a seeded sample of
// normalized inputs is used.  beta is chosen from a small grid to minimize
// the fitted amplitude.
FitReport offdiag_lp_l2(const SpectralOperator& op, const OperatorFamily& fam,
                        const BallSpec& B, int jmax, const std::vector<double>& ts,
                        double p, int draws, std::uint64_t seed);

// Randomized R-boundedness probe for the heat family:
//   || (sum_i |T_{t_i} f_i|^2)^{1/2} ||_p / || (sum_i |f_i|^2)^{1/2} ||_p
// maximized over seeded draws of times and inputs.
FitReport rbound_probe(const SpectralOperator& op, double p, int tuple_size,
                       int draws, std::uint64_t seed);

// Largest alpha with  int V_- f^2 dmu <= alpha ( int |grad f|^2 + V_+ f^2 dmu )
// over f != 0 (generalized eigenvalue).  Supercritical when alpha >= 1 or when
// V_- charges the kernel of the reference form (alpha = infinity).
struct Subcriticality {
  double alpha = 0.0;
  bool supercritical = false;
};
Subcriticality subcriticality_alpha(const DiscreteManifold& M, const PotentialSplit& V);

// Critical exponent window from the subcriticality constant and volume
// exponent:  p0' = (2 / (1 - sqrt(1 - alpha))) * N / (N - 2), p0 its dual;
// degenerate cases (N <= 2 or alpha = 0) give (1, infinity).
struct CriticalExponents {
  double p0 = 1.0;
  double p0_prime = std::numeric_limits<double>::infinity();
};
CriticalExponents compute_p0(double alpha, double N);

}  // namespace lps
