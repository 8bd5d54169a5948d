#include "lpslab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace lps {

namespace {

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

DiscreteManifold DiscreteManifold::grid(int dim, int side) {
  if (dim < 1 || dim > 3) throw InvalidInput("grid: dim must be 1, 2 or 3");
  if (side < 1) throw InvalidInput("grid: side must be >= 1");
  const int n = ipow(side, dim);
  DiscreteManifold M;
  M.mu_ = Eigen::VectorXd::Ones(n);
  auto at = [&](int x, int y, int z) {
    return x + side * (y + side * z);
  };
  const int sy = dim >= 2 ? side : 1;
  const int sz = dim >= 3 ? side : 1;
  for (int z = 0; z < sz; ++z)
    for (int y = 0; y < sy; ++y)
      for (int x = 0; x < side; ++x) {
        if (x + 1 < side) M.edges_.push_back({at(x, y, z), at(x + 1, y, z), 1.0, 1.0});
        if (y + 1 < sy) M.edges_.push_back({at(x, y, z), at(x, y + 1, z), 1.0, 1.0});
        if (z + 1 < sz) M.edges_.push_back({at(x, y, z), at(x, y, z + 1), 1.0, 1.0});
      }
  M.finalize();
  return M;
}

DiscreteManifold DiscreteManifold::dumbbell(int dim, int side) {
  if (side % 2 == 0)
    throw InvalidInput("dumbbell: side must be odd (sheets glue at their central vertex)");
  DiscreteManifold sheet = grid(dim, side);
  const int ns = sheet.vertex_count();
  int center = 0;
  for (int d = 0, stride = 1; d < dim; ++d, stride *= side)
    center += (side / 2) * stride;

  // Second sheet: every vertex except its center gets a fresh index.
  std::vector<int> remap(ns);
  int next = ns;
  for (int v = 0; v < ns; ++v) remap[v] = (v == center) ? center : next++;

  DiscreteManifold M;
  M.mu_ = Eigen::VectorXd::Ones(2 * ns - 1);
  M.edges_ = sheet.edges_;
  for (const Edge& e : sheet.edges_) {
    int u = remap[e.u], v = remap[e.v];
    if (u > v) std::swap(u, v);
    M.edges_.push_back({u, v, e.w, e.len});
  }
  M.finalize();
  return M;
}

DiscreteManifold DiscreteManifold::binary_tree(int depth) {
  if (depth < 0 || depth > 24) throw InvalidInput("binary_tree: depth out of range");
  const int n = (1 << (depth + 1)) - 1;
  DiscreteManifold M;
  M.mu_ = Eigen::VectorXd::Ones(n);
  for (int v = 0; v < n; ++v) {
    const int l = 2 * v + 1, r = 2 * v + 2;
    if (l < n) M.edges_.push_back({v, l, 1.0, 1.0});
    if (r < n) M.edges_.push_back({v, r, 1.0, 1.0});
  }
  M.finalize();
  return M;
}

DiscreteManifold DiscreteManifold::from_parts(Eigen::VectorXd mu, std::vector<Edge> edges) {
  DiscreteManifold M;
  M.mu_ = std::move(mu);
  M.edges_ = std::move(edges);
  M.finalize();
  return M;
}

void DiscreteManifold::finalize() {
  const int n = vertex_count();
  if (n < 1) throw InvalidInput("model has no vertices");
  for (int i = 0; i < n; ++i)
    if (!(mu_[i] > 0.0) || !std::isfinite(mu_[i]))
      throw InvalidInput("vertex measure must be positive and finite");

  std::set<std::pair<int, int>> seen;
  for (Edge& e : edges_) {
    if (e.u == e.v) throw InvalidInput("self-loop edge rejected");
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u < 0 || e.v >= n) throw InvalidInput("edge endpoint out of range");
    if (!(e.w > 0.0) || !std::isfinite(e.w))
      throw InvalidInput("edge weight must be positive and finite");
    if (!(e.len > 0.0) || !std::isfinite(e.len))
      throw InvalidInput("edge length must be positive and finite");
    if (!seen.insert({e.u, e.v}).second)
      throw InvalidInput("duplicate edge rejected");
  }

  adj_.assign(n, {});
  for (int i = 0; i < static_cast<int>(edges_.size()); ++i) {
    const Edge& e = edges_[i];
    adj_[e.u].push_back({e.v, e.w, i});
    adj_[e.v].push_back({e.u, e.w, i});
  }

  // All-pairs shortest paths (Dijkstra from every source), symmetrized so the
  // exact double d(x,y) is shared by both orders.
  const double inf = std::numeric_limits<double>::infinity();
  dist_.setConstant(n, n, inf);
  using QE = std::pair<double, int>;
  for (int s = 0; s < n; ++s) {
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> q;
    dist_(s, s) = 0.0;
    q.push({0.0, s});
    while (!q.empty()) {
      auto [d, x] = q.top();
      q.pop();
      if (d > dist_(s, x)) continue;
      for (const Neighbor& nb : adj_[x]) {
        const double nd = d + edges_[nb.edge].len;
        if (nd < dist_(s, nb.vertex)) {
          dist_(s, nb.vertex) = nd;
          q.push({nd, nb.vertex});
        }
      }
    }
  }
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      if (!std::isfinite(dist_(x, y)) || !std::isfinite(dist_(y, x)))
        throw InvalidInput("model is not connected");
      dist_(y, x) = dist_(x, y);
    }

  std::set<double> bp;
  for (int x = 0; x < n; ++x)
    for (int y = x; y < n; ++y) bp.insert(dist_(x, y));
  breakpoints_.assign(bp.begin(), bp.end());
  diameter_ = breakpoints_.back();
  total_measure_ = mu_.sum();

  sorted_dist_.assign(n, {});
  cum_vol_.assign(n, {});
  std::vector<int> order(n);
  for (int x = 0; x < n; ++x) {
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (dist_(x, a) != dist_(x, b)) return dist_(x, a) < dist_(x, b);
      return a < b;
    });
    sorted_dist_[x].resize(n);
    cum_vol_[x].resize(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      sorted_dist_[x][i] = dist_(x, order[i]);
      acc += mu_[order[i]];
      cum_vol_[x][i] = acc;
    }
  }
}

double DiscreteManifold::volume(int x, double r) const {
  if (r < 0.0) return 0.0;
  const auto& sd = sorted_dist_[x];
  const auto it = std::upper_bound(sd.begin(), sd.end(), r);
  const int k = static_cast<int>(it - sd.begin());
  return k == 0 ? 0.0 : cum_vol_[x][k - 1];
}

std::vector<int> DiscreteManifold::ball(const BallSpec& b) const {
  std::vector<int> out;
  for (int y = 0; y < vertex_count(); ++y)
    if (dist_(b.center, y) <= b.radius) out.push_back(y);
  return out;
}

std::vector<int> DiscreteManifold::annulus(const BallSpec& b, int j) const {
  if (j < 0) throw InvalidInput("annulus index must be >= 0");
  const double inner = std::ldexp(b.radius, j);      // 2^j r
  const double outer = std::ldexp(b.radius, j + 1);  // 2^{j+1} r
  std::vector<int> out;
  for (int y = 0; y < vertex_count(); ++y) {
    const double d = dist_(b.center, y);
    if (d > inner && d <= outer) out.push_back(y);
  }
  return out;
}

std::vector<double> DiscreteManifold::radii(int x) const {
  std::vector<double> r;
  for (double d : sorted_dist_[x])
    if (r.empty() || d != r.back()) r.push_back(d);
  return r;
}

FitReport doubling_fit(const DiscreteManifold& M, double rmin, double rmax) {
  if (!(rmin > 0.0) || !(rmax > rmin))
    throw InvalidInput("doubling_fit: window must satisfy 0 < rmin < rmax");
  FitReport rep;
  rep.columns = {"r", "doubling_ratio_max", "vol_min", "vol_max"};

  const int n = M.vertex_count();
  if (n == 1) {
    rep.set("N", 0.0);
    rep.set("doubling_C", 1.0);
    rep.set("N_ols", 0.0);
    rep.set("increment_C", 0.0);
    return rep;
  }

  std::vector<double> radii;
  for (double r : M.breakpoints())
    if (r >= rmin && r <= rmax) radii.push_back(r);
  if (radii.size() < 2)
    throw InvalidInput("doubling_fit: degenerate window (fewer than 2 radii)");

  double cmax = 0.0, cmin = std::numeric_limits<double>::infinity();
  for (double r : radii) {
    double worst = 0.0, vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
    for (int x = 0; x < n; ++x) {
      const double v = M.volume(x, r);
      worst = std::max(worst, M.volume(x, 2.0 * r) / v);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    rep.rows.push_back({r, worst, vmin, vmax});
    cmax = std::max(cmax, worst);
    cmin = std::min(cmin, worst);
  }
  // The worst ratio is attained away from the graph edge, so this exponent is
  // immune to the truncation that drags a pooled regression down on finite
  // models; the pooled slope stays available as N_ols.
  rep.set("N", std::log2(cmax));
  rep.set("doubling_C", cmax);
  if (cmax > 2.0 * cmin) rep.notes.push_back("doubling suspect");

  // Pooled least squares of log Vol(x, r) on log r.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long m = 0;
  for (double r : radii) {
    const double lx = std::log(r);
    for (int x = 0; x < n; ++x) {
      const double ly = std::log(M.volume(x, r));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
  }
  rep.set("N_ols", (m * sxy - sx * sy) / (m * sxx - sx * sx));

  // max over x and consecutive window radii of  r * dVol / (dr * Vol).
  double inc = 0.0;
  for (size_t i = 0; i + 1 < radii.size(); ++i) {
    const double r = radii[i], h = radii[i + 1] - radii[i];
    for (int x = 0; x < n; ++x) {
      const double v = M.volume(x, r);
      inc = std::max(inc, r * (M.volume(x, radii[i + 1]) - v) / (h * v));
    }
  }
  rep.set("increment_C", inc);
  return rep;
}

}  // namespace lps
