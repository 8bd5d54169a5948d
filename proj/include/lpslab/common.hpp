#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lps {

// Bad user input: malformed models, out-of-domain parameters, unusable configs.
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Computation refused mid-flight: indefinite operators, divergent time
// integrals, and similar guards that indicate the requested quantity does
// not exist rather than a bad argument.
struct NumericalGuard : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic random source. The transformation from raw engine output to
// doubles is spelled out here (instead of std::*_distribution) so that
// streams are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller with a cached spare.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  int index(int n) {  // uniform on {0, ..., n-1}
    return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline double relative_error(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

}  // namespace lps
