#include "lpslab/tent.hpp"

#include <cmath>

#include "lpslab/probes.hpp"

namespace lps {

namespace {

void check(const DiscreteManifold& M, const ConeFunction& F) {
  const int m = static_cast<int>(F.tgrid.size());
  if (m < 8) throw InvalidInput("cone function: time grid needs at least 8 points");
  if (F.samples.rows() != M.vertex_count() || F.samples.cols() != m)
    throw InvalidInput("cone function: sample matrix must be vertices x times");
  if (!(F.tgrid[0] > 0.0)) throw InvalidInput("cone function: times must be positive");
  for (int i = 1; i < m; ++i)
    if (!(F.tgrid[i] > F.tgrid[i - 1]))
      throw InvalidInput("cone function: time grid must increase strictly");
}

}  // namespace

Eigen::VectorXd log_time_weights(const Eigen::VectorXd& tgrid) {
  const int m = static_cast<int>(tgrid.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (int i = 0; i + 1 < m; ++i) {
    const double h = std::log(tgrid[i + 1]) - std::log(tgrid[i]);
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

Eigen::VectorXd area_functional(const DiscreteManifold& M, const ConeFunction& F) {
  check(M, F);
  const int n = M.vertex_count();
  const int m = static_cast<int>(F.tgrid.size());
  const Eigen::VectorXd w = log_time_weights(F.tgrid);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s(n);
  for (int i = 0; i < m; ++i) {
    const double r = F.geom.radius(F.tgrid[i]);
    for (int y = 0; y < n; ++y)
      s[y] = F.samples(y, i) * F.samples(y, i) * M.mu(y) / M.volume(y, r);
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int y = 0; y < n; ++y)
        if (M.distance(x, y) <= r) acc += s[y];
      sq[x] += w[i] * acc;
    }
  }
  return sq.cwiseSqrt();
}

Eigen::VectorXd vertical_functional(const DiscreteManifold& M, const ConeFunction& F) {
  check(M, F);
  const Eigen::VectorXd w = log_time_weights(F.tgrid);
  return (F.samples.array().square().matrix() * w).cwiseSqrt();
}

double tent_norm(const DiscreteManifold& M, const ConeFunction& F, double p) {
  check(M, F);
  if (!(p >= 1.0)) throw InvalidInput("tent norm: p must be >= 1");
  if (std::isfinite(p))
    return lp_norm(M.measures(), area_functional(M, F), p);

  const int n = M.vertex_count();
  const int m = static_cast<int>(F.tgrid.size());
  const Eigen::VectorXd w = log_time_weights(F.tgrid);
  // Per vertex, running time mass  sum_{i <= j} w_i |F(y, t_i)|^2 mu(y).
  Eigen::MatrixXd prefix(n, m);
  for (int y = 0; y < n; ++y) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      acc += w[i] * F.samples(y, i) * F.samples(y, i) * M.mu(y);
      prefix(y, i) = acc;
    }
  }
  double best = 0.0;
  for (int x = 0; x < n; ++x) {
    for (double r : M.radii(x)) {
      int j = -1;
      for (int i = 0; i < m && F.tgrid[i] <= r; ++i) j = i;
      if (j < 0) continue;
      double mass = 0.0, vol = 0.0;
      for (int y = 0; y < n; ++y) {
        if (M.distance(x, y) <= r) {
          mass += prefix(y, j);
          vol += M.mu(y);
        }
      }
      best = std::max(best, mass / vol);
    }
  }
  return std::sqrt(best);
}

}  // namespace lps
