#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "finslerlab/types.hpp"

namespace finslerlab {

/// Seeded generator with portable derived distributions. std::mt19937_64 output
/// is fixed by the standard; the std:: distributions are not, so uniform and
/// normal variates are derived here by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal (Box-Muller, both variates used).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  /// Gaussian vector in C^m (real and imaginary parts independent N(0,1)).
  CVec complex_normal(Eigen::Index m) {
    CVec v(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double re = normal();
      const double im = normal();
      v[i] = cplx(re, im);
    }
    return v;
  }

  /// Uniform direction on the unit sphere of C^m.
  CVec unit_vector(Eigen::Index m) {
    CVec v = complex_normal(m);
    while (v.norm() < 1e-12) v = complex_normal(m);
    return v / v.norm();
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace finslerlab
