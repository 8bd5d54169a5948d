#include "lpslab/czd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lps {

namespace {

double adaptive_simpson(const std::function<double(double)>& g, double a, double b,
                        double fa, double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double refined = left + right;
  if (depth <= 0 || std::abs(refined - whole) <= 15.0 * tol)
    return refined + (refined - whole) / 15.0;
  return adaptive_simpson(g, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         adaptive_simpson(g, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate_panel(const std::function<double(double)>& g, double a, double b,
                       double tol) {
  const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
  return adaptive_simpson(g, a, b, fa, fm, fb, tol, 18);
}

}  // namespace

Eigen::VectorXd maximal_function(const DiscreteManifold& M, const Eigen::VectorXd& f) {
  const int n = M.vertex_count();
  if (f.size() != n) throw InvalidInput("maximal_function: field length mismatch");
  const Eigen::VectorXd mass = M.measures().cwiseProduct(f.cwiseAbs());
  Eigen::VectorXd out(n);
  std::vector<std::pair<double, double>> byd(n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) byd[y] = {M.distance(x, y), mass[y]};
    std::sort(byd.begin(), byd.end());
    double best = 0.0, acc = 0.0;
    std::size_t i = 0;
    while (i < byd.size()) {
      const double r = byd[i].first;
      while (i < byd.size() && byd[i].first == r) acc += byd[i++].second;
      best = std::max(best, acc / M.volume(x, r));
    }
    out[x] = best;
  }
  return out;
}

CZDecomposition cz_decompose(const DiscreteManifold& M, const Eigen::VectorXd& f,
                             double lambda, double p) {
  const int n = M.vertex_count();
  if (f.size() != n) throw InvalidInput("cz_decompose: field length mismatch");
  if (!(lambda > 0.0)) throw InvalidInput("cz_decompose: level must be positive");
  if (!(p >= 1.0) || p >= 2.0) throw InvalidInput("cz_decompose: p must lie in [1, 2)");

  CZDecomposition dec;
  dec.lambda = lambda;
  dec.p = p;

  const Eigen::VectorXd fp = f.array().abs().pow(p);
  const Eigen::VectorXd mp = maximal_function(M, fp).array().pow(1.0 / p);
  std::vector<char> in_omega(n, 0);
  for (int x = 0; x < n; ++x)
    if (mp[x] > lambda) {
      in_omega[x] = 1;
      dec.omega.push_back(x);
    }
  if (static_cast<int>(dec.omega.size()) == n)
    throw InvalidInput("cz_decompose: level too small, the bad set covers the "
                       "whole space; smallest admissible level is " +
                       std::to_string(mp.minCoeff()));

  const double fpnorm = (M.measures().array() * fp.array()).sum();
  dec.good = f;
  if (dec.omega.empty()) {
    dec.report.set("overlap", 0.0);
    dec.report.set("good_bound", f.size() ? f.cwiseAbs().maxCoeff() / lambda : 0.0);
    dec.report.set("bad_bound_lambda_p", 0.0);
    dec.report.set("bad_bound_lambda", 0.0);
    dec.report.set("ball_mass", 0.0);
    dec.report.set("balls", 0.0);
    dec.report.set("reconstruction", 0.0);
    dec.report.columns = {"center", "radius", "measure"};
    return dec;
  }

  // Whitney radii and greedy Vitali selection: walk centers by decreasing
  // radius, keep those not yet inside a chosen ball, so chosen balls cover
  // Omega without dilation.
  std::vector<double> whitney(n, 0.0);
  for (int x : dec.omega) {
    double d = std::numeric_limits<double>::infinity();
    for (int y = 0; y < n; ++y)
      if (!in_omega[y]) d = std::min(d, M.distance(x, y));
    whitney[x] = 0.5 * d;
  }
  std::vector<int> order = dec.omega;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (whitney[a] != whitney[b]) return whitney[a] > whitney[b];
    return a < b;
  });
  std::vector<char> covered(n, 0);
  std::vector<int> centers;
  for (int x : order) {
    if (covered[x]) continue;
    centers.push_back(x);
    for (int y : dec.omega)
      if (M.distance(x, y) <= whitney[x]) covered[y] = 1;
  }

  const int nb = static_cast<int>(centers.size());
  std::vector<std::vector<int>> members(nb);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(n);
  for (int i = 0; i < nb; ++i) {
    members[i] = M.ball({centers[i], whitney[centers[i]]});
    for (int y : members[i]) {
      if (!in_omega[y])
        throw NumericalGuard("cz_decompose: Whitney ball leaks out of the bad set");
      count[y] += 1;
    }
  }

  dec.report.columns = {"center", "radius", "measure"};
  double mass_sum = 0.0, bad_p = 0.0;
  for (int i = 0; i < nb; ++i) {
    BadPart part;
    part.ball = {centers[i], whitney[centers[i]]};
    part.field = Eigen::VectorXd::Zero(n);
    double num = 0.0, den = 0.0;
    for (int y : members[i]) {
      const double chi = 1.0 / count[y];
      num += M.mu(y) * chi * f[y];
      den += M.mu(y) * chi;
      part.ball_measure += M.mu(y);
    }
    const double avg = num / den;
    double bpnorm = 0.0;
    for (int y : members[i]) {
      const double chi = 1.0 / count[y];
      part.field[y] = (f[y] - avg) * chi;
      bpnorm += M.mu(y) * std::pow(std::abs(part.field[y]), p);
    }
    dec.good -= part.field;
    mass_sum += part.ball_measure;
    bad_p = std::max(bad_p, bpnorm / part.ball_measure);
    dec.report.rows.push_back(
        {static_cast<double>(centers[i]), part.ball.radius, part.ball_measure});
    dec.bad.push_back(std::move(part));
  }

  for (int x = 0; x < n; ++x) {
    int c = 0;
    for (int i = 0; i < nb; ++i)
      if (M.distance(centers[i], x) <= 4.0 * whitney[centers[i]]) ++c;
    dec.overlap = std::max(dec.overlap, c);
  }

  Eigen::VectorXd recon = dec.good;
  for (const BadPart& part : dec.bad) recon += part.field;
  dec.report.set("overlap", dec.overlap);
  dec.report.set("good_bound", dec.good.cwiseAbs().maxCoeff() / lambda);
  dec.report.set("bad_bound_lambda_p", bad_p / std::pow(lambda, p));
  dec.report.set("bad_bound_lambda", bad_p / lambda);
  dec.report.set("ball_mass", mass_sum * std::pow(lambda, p) / fpnorm);
  dec.report.set("balls", nb);
  dec.report.set("reconstruction", (recon - f).cwiseAbs().maxCoeff());
  return dec;
}

FitReport cz_remainder(const SpectralOperator& op, const CZDecomposition& dec,
                       int K, int jmax) {
  if (op.is_forms()) throw InvalidInput("cz_remainder expects a scalar operator");
  if (K < 1) throw InvalidInput("cz_remainder: K must be >= 1");
  if (jmax < 0) throw InvalidInput("cz_remainder: empty annulus range");
  const DiscreteManifold& M = op.manifold();

  FitReport rep;
  rep.columns = {"ball", "j", "remainder", "ball_mass", "bound_ratio"};
  double cfit = 0.0;
  std::vector<double> slopes;

  for (std::size_t i = 0; i < dec.bad.size(); ++i) {
    const BadPart& part = dec.bad[i];
    const double r = part.ball.radius;
    Eigen::VectorXd h = op.coefficients(part.field);
    for (int a = 0; a < h.size(); ++a)
      h[a] *= std::pow(1.0 - std::exp(-r * r * op.eigenvalues()[a]), K);

    double rho_min = std::numeric_limits<double>::infinity();
    double rho_max = 0.0;
    const double ctol = 1e-14 * std::max(h.cwiseAbs().maxCoeff(), 1e-300);
    for (int a = 0; a < h.size(); ++a) {
      if (std::abs(h[a]) <= ctol) continue;
      rho_min = std::min(rho_min, op.eigenvalues()[a]);
      rho_max = std::max(rho_max, op.eigenvalues()[a]);
    }
    const bool empty_h = !(rho_max > 0.0) || !std::isfinite(rho_min);

    double prev = -1.0;
    for (int j = 0; j <= jmax; ++j) {
      const std::vector<int> Cj = M.annulus(part.ball, j);
      double I = 0.0;
      if (!Cj.empty() && !empty_h) {
        const auto G = [&](double s) -> double {
          const Eigen::VectorXd u =
              op.synthesize((h.array() * (-s * op.eigenvalues().array()).exp()).matrix());
          const Eigen::VectorXd gms = gradient_modulus_sq(M, u);
          double acc = 0.0;
          for (int y : Cj) acc += M.mu(y) * gms[y];
          return acc;
        };
        const double s_lo = 1e-6 / rho_max;
        const double s_hi = 40.0 / rho_min;
        double total = integrate_panel(G, 0.0, s_lo, 1e-12 * G(s_lo) * s_lo + 1e-300);
        double a = s_lo;
        while (a < s_hi) {
          const double b = std::min(2.0 * a, s_hi);
          total += integrate_panel(G, a, b, 1e-10 * std::max(total, G(a) * (b - a)) + 1e-300);
          a = b;
        }
        total += G(s_hi) / (2.0 * rho_min);
        I = std::sqrt(std::max(0.5 * total, 0.0));
      }
      const double bound = std::sqrt(part.ball_measure) * std::exp2(-2.0 * j * K);
      const double ratio = bound > 0.0 ? I / bound : 0.0;
      cfit = std::max(cfit, ratio);
      rep.rows.push_back({static_cast<double>(i), static_cast<double>(j), I,
                          part.ball_measure, ratio});
      if (prev > 1e-280 && I > 1e-280) slopes.push_back(std::log2(prev / I));
      prev = I;
    }
  }

  rep.set("amplitude", cfit);
  rep.set("mean_slope",
          slopes.empty() ? 0.0
                         : std::accumulate(slopes.begin(), slopes.end(), 0.0) /
                               static_cast<double>(slopes.size()));
  rep.set("smoothing_order", K);
  rep.set("balls", static_cast<double>(dec.bad.size()));
  if (slopes.empty()) rep.notes.push_back("no consecutive annuli to fit a slope");
  return rep;
}

}  // namespace lps
