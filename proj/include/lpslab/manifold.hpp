#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lpslab/common.hpp"

namespace lps {

struct Edge {
  int u = 0, v = 0;      // canonical orientation u < v
  double w = 1.0;        // conductance
  double len = 1.0;      // metric length
};

struct Neighbor {
  int vertex;
  double w;
  int edge;  // index into the edge list
};

struct BallSpec {
  int center = 0;
  double radius = 0.0;
};

// Nonnegative split V = vplus - vminus of a vertex potential.
struct PotentialSplit {
  Eigen::VectorXd vplus, vminus;

  static PotentialSplit zero(int n) {
    PotentialSplit p;
    p.vplus = Eigen::VectorXd::Zero(n);
    p.vminus = Eigen::VectorXd::Zero(n);
    return p;
  }
  static PotentialSplit nonnegative(const Eigen::VectorXd& v) {
    PotentialSplit p;
    p.vplus = v.cwiseMax(0.0);
    p.vminus = (-v).cwiseMax(0.0);
    return p;
  }
  Eigen::VectorXd effective() const { return vplus - vminus; }
  Eigen::VectorXd magnitude() const { return vplus + vminus; }
  bool has_negative_part() const {
    return vminus.size() > 0 && vminus.maxCoeff() > 0.0;
  }
};

// Finite connected weighted graph with a vertex measure and a shortest-path
// metric.  Distances, per-vertex cumulative ball volumes, and the global set
// of pairwise distances are precomputed on construction; everything else is
// answered from those tables.
class DiscreteManifold {
 public:
  static DiscreteManifold grid(int dim, int side);
  static DiscreteManifold dumbbell(int dim, int side);  // two grids, shared central vertex
  static DiscreteManifold binary_tree(int depth);
  static DiscreteManifold from_parts(Eigen::VectorXd mu, std::vector<Edge> edges);

  int vertex_count() const { return static_cast<int>(mu_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  double mu(int x) const { return mu_[x]; }
  const Eigen::VectorXd& measures() const { return mu_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Neighbor>& neighbors(int x) const { return adj_[x]; }

  double distance(int x, int y) const { return dist_(x, y); }
  const Eigen::MatrixXd& distances() const { return dist_; }
  double diameter() const { return diameter_; }
  double total_measure() const { return total_measure_; }

  // Closed-ball volume  Vol(x, r) = sum of mu over { y : d(x,y) <= r }.
  double volume(int x, double r) const;
  std::vector<int> ball(const BallSpec& b) const;
  // C_j(B) = B(x, 2^{j+1} r) \ B(x, 2^j r), j >= 0.
  std::vector<int> annulus(const BallSpec& b, int j) const;

  // Sorted distinct pairwise distances, starting at 0.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  // Sorted distinct distances from x (radii at which balls around x change).
  std::vector<double> radii(int x) const;

 private:
  DiscreteManifold() = default;
  void finalize();  // validate, compute distances and volume tables

  Eigen::VectorXd mu_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adj_;
  Eigen::MatrixXd dist_;
  std::vector<double> breakpoints_;
  // Per vertex: distances to all vertices in ascending order, and the running
  // mu-mass in that order (index i holds the mass of the i+1 nearest).
  std::vector<std::vector<double>> sorted_dist_;
  std::vector<std::vector<double>> cum_vol_;
  double diameter_ = 0.0;
  double total_measure_ = 0.0;
};

// Generic report for empirical fits and probes: named constants, a sample
// table (plot-ready), and free-form flags.
struct FitReport {
  std::vector<std::pair<std::string, double>> constants;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> notes;

  double constant(const std::string& name) const {
    for (const auto& [k, v] : constants)
      if (k == name) return v;
    throw InvalidInput("unknown fit constant: " + name);
  }
  bool has_note(const std::string& n) const {
    for (const auto& s : notes)
      if (s == n) return true;
    return false;
  }
  void set(const std::string& name, double v) { constants.emplace_back(name, v); }
};

// Volume-growth exponent over a radius window. The headline N is log2 of the
// worst doubling ratio Vol(x, 2r)/Vol(x, r) over the window; the report also
// carries the pooled least-squares slope of log Vol(x, r) against log r
// (N_ols) and the discrete analog of the derivative bound
// |d/dr Vol| <= C Vol / r. Flags "doubling suspect" when the doubling ratio
// drifts by more than a factor 2 across the window.
FitReport doubling_fit(const DiscreteManifold& M, double rmin, double rmax);

}  // namespace lps
