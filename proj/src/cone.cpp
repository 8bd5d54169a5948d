#include "lpslab/cone.hpp"

#include <algorithm>
#include <cmath>

namespace lps {

namespace {

// Map each pairwise distance to its index in the breakpoint list (the same
// doubles, so exact lookup is safe).
int breakpoint_index(const std::vector<double>& bps, double d) {
  const auto it = std::lower_bound(bps.begin(), bps.end(), d);
  return static_cast<int>(it - bps.begin());
}

// J holds, per vertex y and breakpoint segment i, the time integral of
// psi_t(y) / Vol(y, r_i) over that segment.  The squared functional at x sums
// suffix integrals of the vertices, started at their cone entry segment.
Eigen::VectorXd aggregate_cone(const DiscreteManifold& M, Eigen::MatrixXd& J) {
  const int n = M.vertex_count();
  const int B = static_cast<int>(J.cols());
  for (int i = B - 2; i >= 0; --i) J.col(i) += J.col(i + 1);
  const auto& bps = M.breakpoints();
  Eigen::VectorXd out(n);
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (int y = 0; y < n; ++y) {
      const int idx = breakpoint_index(bps, M.distance(x, y));
      acc += M.mu(y) * J(y, idx);
    }
    out[x] = std::max(acc, 0.0);
  }
  return out;
}

struct ChannelColumns {
  Eigen::MatrixXd amp;       // K x C
  std::vector<int> owner;    // C
};

ChannelColumns build_columns(const DiscreteManifold& M, const ConeKernel& k) {
  const int n = M.vertex_count();
  const int K = static_cast<int>(k.rates.size());
  std::vector<Eigen::VectorXd> cols;
  std::vector<int> owner;
  for (const ConeChannel& ch : k.channels) {
    switch (ch.type) {
      case ConeChannel::Type::Value:
        for (int y = 0; y < n; ++y) {
          const double wv = ch.vertex_weight.size() ? ch.vertex_weight[y] : 1.0;
          if (wv == 0.0) continue;
          Eigen::VectorXd a = wv * ch.fields.row(y).transpose();
          if (a.squaredNorm() == 0.0) continue;
          cols.push_back(std::move(a));
          owner.push_back(y);
        }
        break;
      case ConeChannel::Type::Gradient:
        for (int y = 0; y < n; ++y) {
          const double inv = 1.0 / (2.0 * M.mu(y));
          for (const Neighbor& nb : M.neighbors(y)) {
            Eigen::VectorXd a = std::sqrt(nb.w * inv) *
                (ch.fields.row(nb.vertex) - ch.fields.row(y)).transpose();
            if (a.squaredNorm() == 0.0) continue;
            cols.push_back(std::move(a));
            owner.push_back(y);
          }
        }
        break;
      case ConeChannel::Type::EdgeModulus:
        for (int y = 0; y < n; ++y) {
          const double inv = 1.0 / (2.0 * M.mu(y));
          for (const Neighbor& nb : M.neighbors(y)) {
            Eigen::VectorXd a = std::sqrt(nb.w * inv) *
                ch.fields.row(nb.edge).transpose();
            if (a.squaredNorm() == 0.0) continue;
            cols.push_back(std::move(a));
            owner.push_back(y);
          }
        }
        break;
    }
  }
  ChannelColumns out;
  out.amp.resize(K, static_cast<int>(cols.size()));
  for (int c = 0; c < out.amp.cols(); ++c) out.amp.col(c) = cols[c];
  out.owner = std::move(owner);
  return out;
}

}  // namespace

Eigen::VectorXd cone_integral_exact(const DiscreteManifold& M, const ConeKernel& k) {
  if (k.integrand)
    throw InvalidInput("exact engine cannot integrate a custom integrand");
  if (k.time_power != 0 && k.time_power != 1)
    throw InvalidInput("exact engine supports time powers 0 and 1");
  const int n = M.vertex_count();
  const int K = static_cast<int>(k.rates.size());
  if (K == 0) return Eigen::VectorXd::Zero(n);
  if (k.rates.minCoeff() <= 0.0)
    throw NumericalGuard("divergent time integral: nonpositive decay rate");

  ChannelColumns cc = build_columns(M, k);
  const int C = static_cast<int>(cc.amp.cols());
  if (C == 0) return Eigen::VectorXd::Zero(n);

  Eigen::MatrixXd R1(K, K);
  for (int j = 0; j < K; ++j)
    for (int i = 0; i < K; ++i) R1(i, j) = 1.0 / (k.rates[i] + k.rates[j]);
  Eigen::MatrixXd R2;
  if (k.time_power == 1) R2 = R1.cwiseProduct(R1);

  const auto& bps = M.breakpoints();
  const int B = static_cast<int>(bps.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, B);

  // Antiderivative bookkeeping at a breakpoint time T, per column:
  //   q == 0:  int_T^inf e^{-S t} dt        -> s1 = v' R1 v
  //   q == 1:  int_T^inf t e^{-S t} dt      -> T s1 + s2,  s2 = v' R2 v
  // with v = amp .* e^{-rates T}; segment integrals are differences.
  Eigen::VectorXd s1_prev(C), s2_prev(C), s1(C), s2(C);
  double t_prev = 0.0;
  Eigen::MatrixXd V(K, C), W(K, C);
  for (int i = 0; i < B; ++i) {
    const double T = k.geom.entry_time(bps[i]);
    V = (-k.rates.array() * T).exp().matrix().asDiagonal() * cc.amp;
    W.noalias() = R1 * V;
    s1 = V.cwiseProduct(W).colwise().sum();
    if (k.time_power == 1) {
      W.noalias() = R2 * V;
      s2 = V.cwiseProduct(W).colwise().sum();
    }
    if (i > 0) {
      for (int c = 0; c < C; ++c) {
        const double seg = k.time_power == 0
            ? s1_prev[c] - s1[c]
            : (t_prev * s1_prev[c] + s2_prev[c]) - (T * s1[c] + s2[c]);
        J(cc.owner[c], i - 1) += seg;
      }
    }
    s1_prev = s1;
    if (k.time_power == 1) s2_prev = s2;
    t_prev = T;
  }
  for (int c = 0; c < C; ++c) {  // last segment reaches t = infinity
    const double seg = k.time_power == 0 ? s1_prev[c] : t_prev * s1_prev[c] + s2_prev[c];
    J(cc.owner[c], B - 1) += seg;
  }

  for (int i = 0; i < B; ++i) {
    for (int y = 0; y < n; ++y)
      if (J(y, i) != 0.0) J(y, i) /= M.volume(y, bps[i]);
  }
  return aggregate_cone(M, J);
}

Eigen::VectorXd cone_channel_integrand(const DiscreteManifold& M, const ConeKernel& k,
                                       double t) {
  const int n = M.vertex_count();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd decay = (-k.rates.array() * t).exp();
  for (const ConeChannel& ch : k.channels) {
    const Eigen::VectorXd u = ch.fields * decay;
    switch (ch.type) {
      case ConeChannel::Type::Value:
        for (int y = 0; y < n; ++y) {
          const double wv = ch.vertex_weight.size() ? ch.vertex_weight[y] : 1.0;
          const double a = wv * u[y];
          out[y] += a * a;
        }
        break;
      case ConeChannel::Type::Gradient:
        for (int y = 0; y < n; ++y) {
          double acc = 0.0;
          for (const Neighbor& nb : M.neighbors(y)) {
            const double d = u[nb.vertex] - u[y];
            acc += nb.w * d * d;
          }
          out[y] += acc / (2.0 * M.mu(y));
        }
        break;
      case ConeChannel::Type::EdgeModulus:
        for (int y = 0; y < n; ++y) {
          double acc = 0.0;
          for (const Neighbor& nb : M.neighbors(y)) acc += nb.w * u[nb.edge] * u[nb.edge];
          out[y] += acc / (2.0 * M.mu(y));
        }
        break;
    }
  }
  if (k.time_power == 1) out *= t;
  return out;
}

namespace {

struct PanelIntegrator {
  const std::function<Eigen::VectorXd(double)>& f;
  int max_depth;
  double* err_acc;

  Eigen::VectorXd simpson(double a, double b, const Eigen::VectorXd& fa,
                          const Eigen::VectorXd& fm, const Eigen::VectorXd& fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  }

  Eigen::VectorXd adaptive(double a, double b, const Eigen::VectorXd& fa,
                           const Eigen::VectorXd& fm, const Eigen::VectorXd& fb,
                           const Eigen::VectorXd& whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const Eigen::VectorXd fl = f(0.5 * (a + m));
    const Eigen::VectorXd fr = f(0.5 * (m + b));
    const Eigen::VectorXd left = simpson(a, m, fa, fl, fm);
    const Eigen::VectorXd right = simpson(m, b, fm, fr, fb);
    const Eigen::VectorXd sum = left + right;
    const double err = (sum - whole).template lpNorm<1>() / 15.0;
    if (err <= tol || depth >= max_depth) {
      if (err_acc) *err_acc += err;
      return sum + (sum - whole) / 15.0;
    }
    return adaptive(a, m, fa, fl, fm, left, 0.5 * tol, depth + 1) +
           adaptive(m, b, fm, fr, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

Eigen::VectorXd cone_integral_quadrature(const DiscreteManifold& M, const ConeKernel& k,
                                         const QuadratureConfig& cfg,
                                         ConeDiagnostics* diag) {
  const int n = M.vertex_count();
  double rate = k.rate_hint;
  if (k.rates.size() > 0) rate = k.rates.minCoeff();
  if (!(rate > 0.0))
    throw NumericalGuard("divergent time integral: no positive decay scale");
  if (!k.integrand && k.channels.empty()) return Eigen::VectorXd::Zero(n);

  const std::function<Eigen::VectorXd(double)> psi = k.integrand
      ? k.integrand
      : [&](double t) { return cone_channel_integrand(M, k, t); };

  const double t_lo = cfg.lo_factor / rate;
  const double t_hi = cfg.hi_factor / rate;
  const auto& bps = M.breakpoints();
  const int B = static_cast<int>(bps.size());

  std::vector<double> nodes;
  nodes.push_back(k.finite_origin ? 0.0 : t_lo);
  const double lgl = std::log(t_lo), lgh = std::log(t_hi);
  for (int i = 0; i < cfg.log_points; ++i)
    nodes.push_back(std::exp(lgl + (lgh - lgl) * i / (cfg.log_points - 1.0)));
  for (int i = 0; i < B; ++i) {
    const double T = k.geom.entry_time(bps[i]);
    if (T > nodes.front() && T < t_hi) nodes.push_back(T);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  const int NI = static_cast<int>(nodes.size()) - 1;

  // Coarse Simpson pass per interval, then adaptive refinement with the
  // tolerance budget spread by the coarse mass.
  std::vector<Eigen::VectorXd> fa(NI + 1), fm(NI);
  for (int i = 0; i <= NI; ++i) fa[i] = psi(nodes[i]);
  std::vector<Eigen::VectorXd> coarse(NI);
  double total = 0.0;
  for (int i = 0; i < NI; ++i) {
    fm[i] = psi(0.5 * (nodes[i] + nodes[i + 1]));
    coarse[i] = (nodes[i + 1] - nodes[i]) / 6.0 * (fa[i] + 4.0 * fm[i] + fa[i + 1]);
    total += coarse[i].lpNorm<1>();
  }

  double err_acc = 0.0;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, B);
  PanelIntegrator pi{psi, cfg.max_depth, &err_acc};
  for (int i = 0; i < NI; ++i) {
    Eigen::VectorXd I = coarse[i];
    if (cfg.adaptive) {
      const double tol =
          cfg.rel_tol * (total / NI + coarse[i].lpNorm<1>()) * 0.5 + 1e-300;
      I = pi.adaptive(nodes[i], nodes[i + 1], fa[i], fm[i], fa[i + 1], coarse[i],
                      tol, 0);
    }
    // Segment owning this interval: the last breakpoint entered before it.
    const double rmid = k.geom.radius(0.5 * (nodes[i] + nodes[i + 1]));
    const auto it = std::upper_bound(bps.begin(), bps.end(), rmid);
    const int seg = static_cast<int>(it - bps.begin()) - 1;
    for (int y = 0; y < n; ++y)
      if (I[y] != 0.0) J(y, seg) += I[y] / M.volume(y, bps[seg]);
  }

  if (diag) {
    diag->quad_error = err_acc;
    const Eigen::VectorXd tailv = fa[NI];
    double tail = 0.0;
    for (int y = 0; y < n; ++y) tail += M.mu(y) * tailv[y] / M.volume(y, bps[B - 1]);
    const double horizon = k.time_power == 0
        ? 1.0 / (2.0 * rate)
        : (t_hi + 1.0 / (2.0 * rate)) / (2.0 * rate * std::max(t_hi, 1e-300));
    diag->tail_bound = tail * horizon * (k.time_power == 1 ? t_hi : 1.0);
    if (!k.finite_origin) {
      double head = 0.0;
      for (int y = 0; y < n; ++y) head += M.mu(y) * fa[0][y] / M.volume(y, bps[0]);
      diag->small_t_bound = head * t_lo / std::max(k.origin_exponent, 0.05);
    }
  }

  return aggregate_cone(M, J);
}

}  // namespace lps
