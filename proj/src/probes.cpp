#include "lpslab/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Dense>

namespace lps {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();
constexpr double kLogFloor = 1e-290;  // below this, norms are rounding debris

double mu_l2(const Eigen::VectorXd& mu, const Eigen::VectorXd& f) {
  return std::sqrt((mu.array() * f.array().square()).sum());
}

// Least-squares fit of y ~ logC - c x with c clamped >= 0 and C minimal
// feasible, so max_i (y_i - logC + c x_i) <= 0 by construction.
struct DecayFit {
  double log_amp = -kInfinity;
  double rate = 0.0;
};

DecayFit fit_exp_decay(const std::vector<double>& xs, const std::vector<double>& ys) {
  DecayFit fit;
  const int n = static_cast<int>(xs.size());
  if (n == 0) return fit;
  if (n >= 2) {
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx > 0.0) fit.rate = std::max(0.0, -sxy / sxx);
  }
  for (int i = 0; i < n; ++i)
    fit.log_amp = std::max(fit.log_amp, ys[i] + fit.rate * xs[i]);
  return fit;
}

double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const int n = static_cast<int>(xs.size());
  if (n < 2) throw InvalidInput("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw InvalidInput("slope fit needs distinct abscissae");
  return sxy / sxx;
}

double largest_singular_value(const Eigen::MatrixXd& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(0);
}

Eigen::MatrixXd symbol_matrix(const Eigen::MatrixXd& modes, const Eigen::VectorXd& lam,
                              const Eigen::VectorXd& weight,
                              const std::function<double(double)>& phi, double t) {
  Eigen::VectorXd d(lam.size());
  for (int k = 0; k < lam.size(); ++k) d[k] = phi(t * lam[k]);
  return modes * d.asDiagonal() * modes.transpose() * weight.asDiagonal();
}

std::vector<int> identity_columns(const DiscreteManifold&, const std::vector<int>& E) {
  return E;
}

// Rows of the pointwise gradient stencil: one per (vertex, neighbor) pair,
// amplitude sqrt(w / (2 mu_y)) (f(z) - f(y)), weighted by mu_y in L2.
struct GradientStencil {
  Eigen::MatrixXd rows;  // q x n
  Eigen::VectorXd out_weight;
  std::vector<int> out_vertex;
};

GradientStencil gradient_stencil(const DiscreteManifold& M) {
  int q = 0;
  for (int y = 0; y < M.vertex_count(); ++y)
    q += static_cast<int>(M.neighbors(y).size());
  GradientStencil st;
  st.rows = Eigen::MatrixXd::Zero(q, M.vertex_count());
  st.out_weight.resize(q);
  st.out_vertex.resize(q);
  int r = 0;
  for (int y = 0; y < M.vertex_count(); ++y) {
    for (const Neighbor& nb : M.neighbors(y)) {
      const double amp = std::sqrt(nb.w / (2.0 * M.mu(y)));
      st.rows(r, nb.vertex) = amp;
      st.rows(r, y) = -amp;
      st.out_weight[r] = M.mu(y);
      st.out_vertex[r] = y;
      ++r;
    }
  }
  return st;
}

struct NormSample {
  double t = 0.0;
  double norm = 0.0;
};

std::vector<NormSample> family_norms(const DiscreteManifold& M, const OperatorFamily& fam,
                                     const std::vector<int>& E, const std::vector<int>& F,
                                     const std::vector<double>& ts) {
  if (E.empty() || F.empty()) throw InvalidInput("off-diagonal probe: empty vertex set");
  if (ts.empty()) throw InvalidInput("off-diagonal probe: empty time grid");
  for (double t : ts)
    if (!(t > 0.0) || !std::isfinite(t))
      throw InvalidInput("off-diagonal probe: times must be positive");
  std::vector<char> in_f(M.vertex_count(), 0);
  for (int y : F) {
    if (y < 0 || y >= M.vertex_count())
      throw InvalidInput("off-diagonal probe: vertex out of range");
    in_f[y] = 1;
  }
  const std::vector<int> cols = fam.in_columns(M, E);
  if (cols.empty()) throw InvalidInput("off-diagonal probe: no inputs supported in E");
  std::vector<int> rows;
  for (int r = 0; r < static_cast<int>(fam.out_vertex.size()); ++r)
    if (in_f[fam.out_vertex[r]]) rows.push_back(r);
  if (rows.empty()) throw InvalidInput("off-diagonal probe: no outputs in F");

  std::vector<NormSample> out;
  out.reserve(ts.size());
  for (double t : ts) {
    const Eigen::MatrixXd A = fam.matrix(t);
    Eigen::MatrixXd block(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double sw = std::sqrt(fam.out_weight[rows[i]]);
      for (std::size_t j = 0; j < cols.size(); ++j)
        block(i, j) = sw * A(rows[i], cols[j]) / std::sqrt(fam.in_weight[cols[j]]);
    }
    out.push_back({t, largest_singular_value(block)});
  }
  return out;
}

double set_distance(const DiscreteManifold& M, const std::vector<int>& E,
                    const std::vector<int>& F) {
  double d = kInfinity;
  for (int x : E)
    for (int y : F) d = std::min(d, M.distance(x, y));
  return d;
}

}  // namespace

double lp_norm(const Eigen::VectorXd& mu, const Eigen::VectorXd& f, double p) {
  if (f.size() != mu.size()) throw InvalidInput("lp_norm: field/measure size mismatch");
  if (f.size() == 0) return 0.0;
  if (std::isinf(p)) return f.cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw InvalidInput("lp_norm: p must be in [1, inf]");
  const double s = (mu.array() * f.array().abs().pow(p)).sum();
  return std::pow(s, 1.0 / p);
}

double weak_lp(const Eigen::VectorXd& mu, const Eigen::VectorXd& f, double p) {
  if (f.size() != mu.size()) throw InvalidInput("weak_lp: field/measure size mismatch");
  if (f.size() == 0) return 0.0;
  if (std::isinf(p)) return f.cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw InvalidInput("weak_lp: p must be in [1, inf]");
  std::vector<std::pair<double, double>> vals(f.size());
  for (int i = 0; i < f.size(); ++i) vals[i] = {std::abs(f[i]), mu[i]};
  std::sort(vals.begin(), vals.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = 0.0, mass = 0.0;
  std::size_t i = 0;
  while (i < vals.size()) {
    const double v = vals[i].first;
    if (v <= 0.0) break;
    while (i < vals.size() && vals[i].first == v) mass += vals[i++].second;
    best = std::max(best, v * std::pow(mass, 1.0 / p));
  }
  return best;
}

double l2_operator_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& mu_out,
                        const Eigen::VectorXd& mu_in) {
  if (A.rows() != mu_out.size() || A.cols() != mu_in.size())
    throw InvalidInput("l2_operator_norm: weight sizes do not match the matrix");
  Eigen::MatrixXd B = mu_out.array().sqrt().matrix().asDiagonal() * A *
                      mu_in.array().rsqrt().matrix().asDiagonal();
  return largest_singular_value(B);
}

NormEstimate ratio_search(const FieldMap& T, const Eigen::VectorXd& mu_in,
                          const Eigen::VectorXd& mu_out, double p,
                          const SearchConfig& cfg) {
  const int n = static_cast<int>(mu_in.size());
  if (n <= 0) throw InvalidInput("ratio_search: empty domain");
  if (cfg.restarts < 1 || cfg.steps < 0)
    throw InvalidInput("ratio_search: nonpositive budget");
  Rng rng(cfg.seed);
  int evals = 0;

  const auto ratio_at = [&](const Eigen::VectorXd& f) {
    const double nf = lp_norm(mu_in, f, p);
    if (!(nf > 0.0)) return 0.0;
    ++evals;
    return lp_norm(mu_out, T(f), p) / nf;
  };

  {
    Eigen::VectorXd probe = rng.gaussian_vector(n);
    const Eigen::VectorXd t1 = T(probe);
    const Eigen::VectorXd t2 = T(2.0 * probe);
    const double scale = std::max(t1.cwiseAbs().maxCoeff(), 1e-12);
    if ((t2 - 2.0 * t1).cwiseAbs().maxCoeff() > 2e-6 * scale)
      throw InvalidInput("ratio_search: map is not positively homogeneous");
  }

  std::vector<Eigen::VectorXd> starts;
  for (const auto& s : cfg.extra_starts) {
    if (s.size() != n) throw InvalidInput("ratio_search: start has wrong size");
    if (s.cwiseAbs().maxCoeff() > 0.0) starts.push_back(s);
  }
  const int fill = std::max(0, cfg.restarts - static_cast<int>(starts.size()));
  for (int i = 0; i < fill; ++i) {
    if (i < 2) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[rng.index(n)] = 1.0;
      starts.push_back(e);
    } else {
      starts.push_back(rng.gaussian_vector(n));
    }
  }

  NormEstimate best;
  best.p = p;
  const double h = 1e-5;
  for (const Eigen::VectorXd& start : starts) {
    Eigen::VectorXd f = start / mu_l2(mu_in, start);
    double r = ratio_at(f);
    Eigen::VectorXd local_witness = f;
    double local_best = r;
    bool final_step_improved = false;

    double step = cfg.step;
    for (int s = 0; s < cfg.steps; ++s) {
      const int batch = cfg.directions > 0 ? cfg.directions : (n <= 96 ? n : 16);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
      if (cfg.directions <= 0 && n <= 96) {
        for (int k = 0; k < n; ++k) {
          Eigen::VectorXd fk = f;
          fk[k] += h;
          grad[k] = (ratio_at(fk) - r) / h;
        }
      } else {
        for (int k = 0; k < batch; ++k) {
          Eigen::VectorXd d = rng.gaussian_vector(n);
          d /= d.norm();
          grad += ((ratio_at(f + h * d) - r) / h) * d;
        }
      }
      const double gn = grad.norm();
      if (!(gn > 1e-12 * std::max(r, 1.0))) break;
      grad /= gn;

      bool accepted = false;
      double eta = step;
      for (int half = 0; half < 6 && !accepted; ++half, eta *= 0.5) {
        Eigen::VectorXd cand = f + eta * grad;
        const double rc = ratio_at(cand);
        if (rc > r * (1.0 + 1e-12)) {
          f = cand / mu_l2(mu_in, cand);
          r = rc;
          step = eta;
          accepted = true;
        }
      }
      if (!accepted) {
        final_step_improved = false;
        break;
      }
      final_step_improved = (s == cfg.steps - 1);
      if (r > local_best) {
        local_best = r;
        local_witness = f;
      }
    }

    if (local_best > best.ratio) {
      best.ratio = local_best;
      best.witness = local_witness;
      best.budget_exhausted = final_step_improved;
    }
  }
  best.evaluations = evals;
  return best;
}

OperatorFamily family_heat(const SpectralOperator& op) {
  OperatorFamily fam;
  fam.label = "heat";
  fam.in_weight = op.weight();
  fam.out_weight = op.weight();
  fam.out_vertex.resize(op.dof());
  for (int i = 0; i < op.dof(); ++i) fam.out_vertex[i] = i;
  fam.in_columns = identity_columns;
  fam.matrix = [modes = op.modes(), lam = op.eigenvalues(),
                w = op.weight()](double t) {
    return symbol_matrix(modes, lam, w, [](double z) { return std::exp(-z); }, t);
  };
  return fam;
}

OperatorFamily family_sqrt_t_grad_heat(const SpectralOperator& op) {
  if (op.is_forms())
    throw InvalidInput("gradient family needs a scalar operator");
  GradientStencil st = gradient_stencil(op.manifold());
  OperatorFamily fam;
  fam.label = "sqrt_t_grad_heat";
  fam.in_weight = op.weight();
  fam.out_weight = std::move(st.out_weight);
  fam.out_vertex = std::move(st.out_vertex);
  fam.in_columns = identity_columns;
  fam.matrix = [G = std::move(st.rows), modes = op.modes(), lam = op.eigenvalues(),
                w = op.weight()](double t) {
    Eigen::MatrixXd H =
        symbol_matrix(modes, lam, w, [](double z) { return std::exp(-z); }, t);
    return Eigen::MatrixXd(std::sqrt(t) * (G * H));
  };
  return fam;
}

OperatorFamily family_sqrt_t_grad_symbol(const SpectralOperator& op, DecayClass F) {
  if (op.is_forms())
    throw InvalidInput("gradient family needs a scalar operator");
  GradientStencil st = gradient_stencil(op.manifold());
  OperatorFamily fam;
  fam.label = "sqrt_t_grad_symbol";
  fam.in_weight = op.weight();
  fam.out_weight = std::move(st.out_weight);
  fam.out_vertex = std::move(st.out_vertex);
  fam.in_columns = identity_columns;
  fam.matrix = [G = std::move(st.rows), modes = op.modes(), lam = op.eigenvalues(),
                w = op.weight(), F = std::move(F)](double t) {
    Eigen::MatrixXd H = symbol_matrix(modes, lam, w, F.F, t);
    return Eigen::MatrixXd(std::sqrt(t) * (G * H));
  };
  return fam;
}

OperatorFamily family_sqrt_t_dstar_heat(const SpectralOperator& forms_op) {
  if (!forms_op.is_forms())
    throw InvalidInput("codifferential family needs a forms operator");
  const DiscreteManifold& M = forms_op.manifold();
  const int n = M.vertex_count();
  const int m = M.edge_count();
  Eigen::MatrixXd Dstar = Eigen::MatrixXd::Zero(n, m);
  for (int e = 0; e < m; ++e) {
    const Edge& ed = M.edges()[e];
    Dstar(ed.v, e) += ed.w / M.mu(ed.v);
    Dstar(ed.u, e) -= ed.w / M.mu(ed.u);
  }
  OperatorFamily fam;
  fam.label = "sqrt_t_dstar_heat";
  fam.in_weight = forms_op.weight();
  fam.out_weight = M.measures();
  fam.out_vertex.resize(n);
  for (int i = 0; i < n; ++i) fam.out_vertex[i] = i;
  fam.in_columns = [](const DiscreteManifold& man, const std::vector<int>& E) {
    std::vector<char> in(man.vertex_count(), 0);
    for (int x : E) in[x] = 1;
    std::vector<int> cols;
    for (int e = 0; e < man.edge_count(); ++e)
      if (in[man.edges()[e].u] && in[man.edges()[e].v]) cols.push_back(e);
    return cols;
  };
  fam.matrix = [Dstar = std::move(Dstar), modes = forms_op.modes(),
                lam = forms_op.eigenvalues(), w = forms_op.weight()](double t) {
    Eigen::MatrixXd H =
        symbol_matrix(modes, lam, w, [](double z) { return std::exp(-z); }, t);
    return Eigen::MatrixXd(std::sqrt(t) * (Dstar * H));
  };
  return fam;
}

FitReport davies_gaffney(const DiscreteManifold& M, const OperatorFamily& fam,
                         const std::vector<int>& E, const std::vector<int>& F,
                         const std::vector<double>& ts) {
  const std::vector<NormSample> samples = family_norms(M, fam, E, F, ts);
  const double d = set_distance(M, E, F);

  std::vector<double> xs, ys;
  int excluded = 0;
  for (const NormSample& s : samples) {
    if (s.norm <= kLogFloor) {
      ++excluded;
      continue;
    }
    xs.push_back(d * d / s.t);
    ys.push_back(std::log(s.norm));
  }
  const DecayFit fit = fit_exp_decay(xs, ys);

  FitReport rep;
  rep.set("distance", d);
  rep.set("rate", fit.rate);
  rep.set("amplitude", std::isfinite(fit.log_amp) ? std::exp(fit.log_amp) : 0.0);
  rep.set("violations", 0.0);
  rep.set("excluded", excluded);
  rep.columns = {"t", "norm", "d2_over_t", "slack"};
  for (const NormSample& s : samples) {
    const double x = d * d / s.t;
    const double slack = (s.norm > kLogFloor && std::isfinite(fit.log_amp))
                             ? fit.log_amp - fit.rate * x - std::log(s.norm)
                             : kInfinity;
    rep.rows.push_back({s.t, s.norm, x, slack});
  }
  if (excluded == static_cast<int>(samples.size()))
    rep.notes.push_back("all norms below numerical floor");
  return rep;
}

FitReport decay_slope(const DiscreteManifold& M, const OperatorFamily& fam,
                      const std::vector<int>& E, const std::vector<int>& F,
                      const std::vector<double>& ts) {
  const std::vector<NormSample> samples = family_norms(M, fam, E, F, ts);
  std::vector<double> xs, ys;
  for (const NormSample& s : samples) {
    if (s.norm <= kLogFloor) continue;
    xs.push_back(std::log(s.t));
    ys.push_back(std::log(s.norm));
  }
  if (xs.size() < 2)
    throw NumericalGuard("decay_slope: too few resolvable norms to fit a slope");
  FitReport rep;
  rep.set("slope", ls_slope(xs, ys));
  rep.set("distance", set_distance(M, E, F));
  rep.columns = {"t", "norm"};
  for (const NormSample& s : samples) rep.rows.push_back({s.t, s.norm});
  return rep;
}

FitReport gaussian_fit(const SpectralOperator& op, const std::vector<double>& ts) {
  if (op.is_forms()) throw InvalidInput("gaussian_fit: scalar operator required");
  if (ts.empty()) throw InvalidInput("gaussian_fit: empty time grid");
  const DiscreteManifold& M = op.manifold();
  const int n = M.vertex_count();

  std::vector<double> xs, ys;
  std::vector<double> tcol, worst;
  int excluded = 0;
  for (double t : ts) {
    if (!(t > 0.0)) throw InvalidInput("gaussian_fit: times must be positive");
    const Eigen::MatrixXd P = op.heat_kernel(t);
    const double floor = std::max(kLogFloor, 1e-12 * P.maxCoeff());
    const std::size_t first = xs.size();
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y) {
        if (P(x, y) <= floor) {
          ++excluded;
          continue;
        }
        const double r = M.distance(x, y);
        xs.push_back(r * r / t);
        ys.push_back(std::log(P(x, y) * M.volume(y, std::sqrt(t))));
      }
    }
    tcol.push_back(t);
    worst.push_back(static_cast<double>(xs.size() - first));
  }
  if (xs.empty()) throw NumericalGuard("gaussian_fit: every kernel entry under the floor");
  const DecayFit fit = fit_exp_decay(xs, ys);

  FitReport rep;
  rep.set("amplitude", std::exp(fit.log_amp));
  rep.set("rate", fit.rate);
  rep.set("violations", 0.0);
  rep.set("excluded", excluded);
  rep.set("points", static_cast<double>(xs.size()));
  rep.columns = {"t", "min_slack", "points"};
  std::size_t idx = 0;
  for (std::size_t ti = 0; ti < tcol.size(); ++ti) {
    double min_slack = kInfinity;
    const std::size_t cnt = static_cast<std::size_t>(worst[ti]);
    for (std::size_t k = 0; k < cnt; ++k, ++idx)
      min_slack = std::min(min_slack, fit.log_amp - fit.rate * xs[idx] - ys[idx]);
    rep.rows.push_back({tcol[ti], min_slack, worst[ti]});
  }
  return rep;
}

FitReport offdiag_lp_l2(const SpectralOperator& op, const OperatorFamily& fam,
                        const BallSpec& B, int jmax, const std::vector<double>& ts,
                        double p, int draws, std::uint64_t seed) {
  if (!(p >= 1.0) || p > 2.0)
    throw InvalidInput("offdiag_lp_l2: p must lie in [1, 2]");
  if (jmax < 0 || ts.empty()) throw InvalidInput("offdiag_lp_l2: empty probe grid");
  const DiscreteManifold& M = op.manifold();
  const std::vector<int> ball = M.ball(B);
  if (ball.empty()) throw InvalidInput("offdiag_lp_l2: empty ball");
  if (!(B.radius > 0.0)) throw InvalidInput("offdiag_lp_l2: ball radius must be positive");
  double muB = 0.0;
  for (int x : ball) muB += M.mu(x);
  const std::vector<int> cols = fam.in_columns(M, ball);
  if (cols.empty()) throw InvalidInput("offdiag_lp_l2: no inputs supported in the ball");

  struct Cell {
    int j;
    double t;
    double norm;
  };
  std::vector<Cell> cells;
  FitReport rep;
  Rng rng(seed);
  for (int j = 0; j <= jmax; ++j) {
    const std::vector<int> Cj = M.annulus(B, j);
    if (Cj.empty()) {
      rep.notes.push_back("empty annulus j=" + std::to_string(j));
      continue;
    }
    std::vector<char> in_cj(M.vertex_count(), 0);
    for (int y : Cj) in_cj[y] = 1;
    std::vector<int> rows;
    for (int r = 0; r < static_cast<int>(fam.out_vertex.size()); ++r)
      if (in_cj[fam.out_vertex[r]]) rows.push_back(r);
    if (rows.empty()) continue;

    for (double t : ts) {
      if (!(t > 0.0)) throw InvalidInput("offdiag_lp_l2: times must be positive");
      const Eigen::MatrixXd A = fam.matrix(t);
      Eigen::MatrixXd block(rows.size(), cols.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < cols.size(); ++k)
          block(i, k) = A(rows[i], cols[k]);
      Eigen::VectorXd ow(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) ow[i] = fam.out_weight[rows[i]];

      double lhs = 0.0;
      // Normalized deltas are the extreme points of the L1 ball, so the
      // column maximum is exact for p = 1 and a sound floor otherwise.
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const double cn = std::sqrt((ow.array() * block.col(k).array().square()).sum());
        lhs = std::max(lhs, cn / std::pow(fam.in_weight[cols[k]], 1.0 / p));
      }
      if (p > 1.0) {
        for (int dr = 0; dr < draws; ++dr) {
          Eigen::VectorXd f = rng.gaussian_vector(static_cast<int>(cols.size()));
          double np = 0.0;
          for (std::size_t k = 0; k < cols.size(); ++k)
            np += fam.in_weight[cols[k]] * std::pow(std::abs(f[k]), p);
          np = std::pow(np, 1.0 / p);
          if (!(np > 0.0)) continue;
          const Eigen::VectorXd out = block * f;
          lhs = std::max(lhs, std::sqrt((ow.array() * out.array().square()).sum()) / np);
        }
      }
      cells.push_back({j, t, lhs});
    }
  }
  if (cells.empty()) throw NumericalGuard("offdiag_lp_l2: no populated annuli");

  // lhs <= C mu(B)^{1/2 - 1/p} mismatch^beta exp(-c D_j^2 / t), with
  // D_j = max(2^j - 1, 0) r_B and mismatch = max(2^j r_B / sqrt t, sqrt t / 2^j r_B).
  const double vol_shift = (0.5 - 1.0 / p) * std::log(muB);
  double best_amp = kInfinity, best_rate = 0.0, best_beta = 0.0;
  for (double beta : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    std::vector<double> xs, ys;
    for (const Cell& c : cells) {
      if (c.norm <= kLogFloor) continue;
      const double scale = std::ldexp(B.radius, c.j);
      const double mism = std::max(scale / std::sqrt(c.t), std::sqrt(c.t) / scale);
      const double D = std::max(std::ldexp(1.0, c.j) - 1.0, 0.0) * B.radius;
      xs.push_back(D * D / c.t);
      ys.push_back(std::log(c.norm) - vol_shift - beta * std::log(mism));
    }
    if (xs.empty()) continue;
    const DecayFit fit = fit_exp_decay(xs, ys);
    if (fit.log_amp < best_amp) {
      best_amp = fit.log_amp;
      best_rate = fit.rate;
      best_beta = beta;
    }
  }
  if (!std::isfinite(best_amp))
    throw NumericalGuard("offdiag_lp_l2: all norms below numerical floor");

  rep.set("amplitude", std::exp(best_amp));
  rep.set("rate", best_rate);
  rep.set("beta", best_beta);
  rep.set("violations", 0.0);
  rep.set("ball_mass", muB);
  rep.columns = {"j", "t", "norm", "slack"};
  for (const Cell& c : cells) {
    const double scale = std::ldexp(B.radius, c.j);
    const double mism = std::max(scale / std::sqrt(c.t), std::sqrt(c.t) / scale);
    const double D = std::max(std::ldexp(1.0, c.j) - 1.0, 0.0) * B.radius;
    const double logbound =
        best_amp + vol_shift + best_beta * std::log(mism) - best_rate * D * D / c.t;
    const double slack =
        c.norm > kLogFloor ? logbound - std::log(c.norm) : kInfinity;
    rep.rows.push_back({static_cast<double>(c.j), c.t, c.norm, slack});
  }
  return rep;
}

FitReport rbound_probe(const SpectralOperator& op, double p, int tuple_size,
                       int draws, std::uint64_t seed) {
  if (!(p >= 1.0)) throw InvalidInput("rbound_probe: p must be >= 1");
  if (tuple_size < 1 || draws < 1)
    throw InvalidInput("rbound_probe: need at least one time and one draw");
  const Eigen::VectorXd& mu = op.weight();
  const int n = op.dof();
  const double lam_max = op.eigenvalues().maxCoeff();
  if (!(lam_max > 0.0))
    throw InvalidInput("rbound_probe: operator has no positive spectrum");
  const double t_lo = std::log(0.01 / lam_max);
  const double t_hi = std::log(10.0 / op.spectral_gap());

  Rng rng(seed);
  FitReport rep;
  rep.columns = {"draw", "ratio"};
  double worst = 0.0, mean = 0.0;
  for (int d = 0; d < draws; ++d) {
    Eigen::ArrayXd num = Eigen::ArrayXd::Zero(n);
    Eigen::ArrayXd den = Eigen::ArrayXd::Zero(n);
    for (int i = 0; i < tuple_size; ++i) {
      const double t = std::exp(rng.uniform(t_lo, t_hi));
      const Eigen::VectorXd f = rng.gaussian_vector(n);
      const Eigen::VectorXd hf = op.heat_apply(t, f);
      num += hf.array().square();
      den += f.array().square();
    }
    const double ratio = lp_norm(mu, num.sqrt().matrix(), p) /
                         lp_norm(mu, den.sqrt().matrix(), p);
    worst = std::max(worst, ratio);
    mean += ratio;
    rep.rows.push_back({static_cast<double>(d), ratio});
  }
  rep.set("max_ratio", worst);
  rep.set("mean_ratio", mean / draws);
  rep.set("draws", draws);
  rep.set("tuple_size", tuple_size);
  return rep;
}

Subcriticality subcriticality_alpha(const DiscreteManifold& M, const PotentialSplit& V) {
  const int n = M.vertex_count();
  if (V.vplus.size() != n || V.vminus.size() != n)
    throw InvalidInput("subcriticality: potential size mismatch");
  if (V.vplus.minCoeff() < 0.0 || V.vminus.minCoeff() < 0.0)
    throw InvalidInput("subcriticality: split parts must be nonnegative");

  Eigen::VectorXd a = M.measures().cwiseProduct(V.vminus);  // quadratic form of V_-
  Subcriticality out;
  if (a.maxCoeff() <= 0.0) return out;

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : M.edges()) {
    B(e.u, e.u) += e.w;
    B(e.v, e.v) += e.w;
    B(e.u, e.v) -= e.w;
    B(e.v, e.u) -= e.w;
  }
  B.diagonal() += M.measures().cwiseProduct(V.vplus);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double cut = 1e-12 * std::max(lam[n - 1], 1.0);

  double kernel_charge = 0.0;
  int rank_start = 0;
  while (rank_start < n && lam[rank_start] <= cut) {
    const Eigen::VectorXd q = es.eigenvectors().col(rank_start);
    kernel_charge += (a.array() * q.array().square()).sum();
    ++rank_start;
  }
  if (kernel_charge > 1e-12 * a.maxCoeff()) {
    out.alpha = kInfinity;
    out.supercritical = true;
    return out;
  }
  if (rank_start == n)
    throw NumericalGuard("subcriticality: reference form vanishes identically");

  const int r = n - rank_start;
  Eigen::MatrixXd Q = es.eigenvectors().rightCols(r);
  Eigen::VectorXd isq = lam.tail(r).array().rsqrt();
  Eigen::MatrixXd C = isq.asDiagonal() * Q.transpose() * a.asDiagonal() * Q *
                      isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(C);
  out.alpha = std::max(0.0, ec.eigenvalues()(r - 1));
  out.supercritical = out.alpha >= 1.0;
  return out;
}

CriticalExponents compute_p0(double alpha, double N) {
  if (!(alpha >= 0.0) || alpha >= 1.0)
    throw InvalidInput("compute_p0: alpha must lie in [0, 1)");
  if (!(N > 0.0)) throw InvalidInput("compute_p0: volume exponent must be positive");
  CriticalExponents out;
  if (N <= 2.0) return out;  // no upper restriction in low dimension
  const double denom = 1.0 - std::sqrt(1.0 - alpha);
  if (denom <= 0.0) return out;
  out.p0_prime = (2.0 / denom) * (N / (N - 2.0));
  out.p0 = out.p0_prime / (out.p0_prime - 1.0);
  return out;
}

}  // namespace lps
