#include "finslerlab/quadrature.hpp"

#include <cmath>

#include "finslerlab/errors.hpp"
#include "finslerlab/random.hpp"

namespace finslerlab::l2 {

void gauss_legendre01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw DomainError("gauss_legendre01: need at least one node");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const auto idx = static_cast<std::size_t>(n - 1 - i);  // ascending order
    nodes[idx] = 0.5 * (x + 1.0);
    weights[idx] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2 / ((1-x^2) P'^2), halved for [0,1]
  }
}

double fs_volume(int r) { return std::pow(M_PI, r - 1) / std::tgamma(static_cast<double>(r)); }

namespace {

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double out = 0.0;
  while (i > 0) {
    out += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return out;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

QuadratureRule product_rule(int resolution, int min_angular) {
  QuadratureRule rule;
  rule.rank = 2;
  rule.resolution = resolution;
  rule.angular_nodes = std::max(resolution, min_angular);
  rule.kind = RuleKind::kProduct;
  std::vector<double> u, wu;
  gauss_legendre01(resolution, u, wu);
  const int nt = rule.angular_nodes;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double rho = std::sqrt(u[j] / (1.0 - u[j]));
    // dA = rho d rho d theta = du / (2 (1-u)^2) d theta
    const double radial = 0.5 * wu[j] / ((1.0 - u[j]) * (1.0 - u[j]));
    for (int t = 0; t < nt; ++t) {
      CVec w(1);
      w[0] = std::polar(rho, 2.0 * M_PI * t / nt);
      rule.nodes.push_back(w);
      rule.weights.push_back(radial * 2.0 * M_PI / nt);
      rule.fs_density.push_back((1.0 - u[j]) * (1.0 - u[j]));
    }
  }
  return rule;
}

QuadratureRule qmc_rule(int r, int resolution, std::uint64_t seed) {
  QuadratureRule rule;
  rule.rank = r;
  rule.resolution = resolution;
  rule.kind = RuleKind::kQuasiMonteCarlo;
  rule.replicates = 8;
  const int per = 64 * resolution;
  const int dims = 2 * r - 1;  // r exponential draws for the simplex, r - 1 phases
  const double vol = fs_volume(r);
  Rng rng(seed);
  std::vector<double> replicate_sums(static_cast<std::size_t>(rule.replicates), 0.0);
  for (int rep = 0; rep < rule.replicates; ++rep) {
    std::vector<double> shift(static_cast<std::size_t>(dims));
    for (double& s : shift) s = rng.uniform();
    for (int i = 0; i < per; ++i) {
      std::vector<double> x(static_cast<std::size_t>(dims));
      for (int d = 0; d < dims; ++d) {
        double v = radical_inverse(static_cast<std::uint64_t>(i + 1), kPrimes[d]) + shift[static_cast<std::size_t>(d)];
        x[static_cast<std::size_t>(d)] = v - std::floor(v);
      }
      // |zeta_i|^2 = E_i / sum E with E_i exponential: uniform on the simplex.
      std::vector<double> e(static_cast<std::size_t>(r));
      double total = 0.0;
      for (int a = 0; a < r; ++a) {
        const double xa = std::max(x[static_cast<std::size_t>(a)], 1e-300);
        e[static_cast<std::size_t>(a)] = -std::log(xa);
        total += e[static_cast<std::size_t>(a)];
      }
      const double last = e[static_cast<std::size_t>(r - 1)] / total;
      if (!(last > 1e-300)) continue;
      CVec w(r - 1);
      double norm2 = 0.0;
      for (int a = 0; a < r - 1; ++a) {
        const double s = e[static_cast<std::size_t>(a)] / total;
        const double phase = 2.0 * M_PI * x[static_cast<std::size_t>(r + a)];
        w[a] = std::polar(std::sqrt(s / last), phase);
        norm2 += s / last;
      }
      const double density = std::pow(1.0 + norm2, -r);
      rule.nodes.push_back(w);
      rule.fs_density.push_back(density);
      // FS-uniform sample: int f dA = vol * E[f / density].
      rule.weights.push_back(vol / (per * rule.replicates) / density);
      rule.replicate.push_back(rep);
      replicate_sums[static_cast<std::size_t>(rep)] += vol / per;
    }
  }
  double mean = 0.0;
  for (double s : replicate_sums) mean += s / rule.replicates;
  double var = 0.0;
  for (double s : replicate_sums) var += (s - mean) * (s - mean);
  rule.error_estimate = std::sqrt(var / (rule.replicates - 1) / rule.replicates);
  return rule;
}

}  // namespace

QuadratureRule cp_quadrature(int r, int resolution, int min_angular, std::uint64_t seed) {
  if (resolution < 1) throw DomainError("cp_quadrature: resolution must be >= 1");
  if (r == 2) return product_rule(resolution, min_angular);
  if (r == 3 || r == 4) return qmc_rule(r, resolution, seed);
  throw DomainError("cp_quadrature: rank " + std::to_string(r) + " unsupported (expected 2, 3 or 4)");
}

}  // namespace finslerlab::l2
