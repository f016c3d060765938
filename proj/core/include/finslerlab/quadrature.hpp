#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finslerlab/types.hpp"

namespace finslerlab::l2 {

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre01(int n, std::vector<double>& nodes, std::vector<double>& weights);

enum class RuleKind { kProduct, kQuasiMonteCarlo };

/// Nodes on the chart C^{r-1} of P^{r-1}. `weights` integrate against Lebesgue
/// measure dx dy on each coordinate: sum_i weights[i] f(nodes[i]) ~ int f dA.
struct QuadratureRule {
  int rank = 2;
  int resolution = 0;
  int angular_nodes = 0;   // r = 2 only
  RuleKind kind = RuleKind::kProduct;
  std::vector<CVec> nodes;
  std::vector<double> weights;
  std::vector<double> fs_density;  // (1 + |w|^2)^-r at each node
  std::vector<int> replicate;      // QMC replicate index per node (empty for r = 2)
  int replicates = 0;
  double error_estimate = 0.0;     // of int 1 * fs_density; 0 for the exact r = 2 rule
  std::string density_convention = "lebesgue dx dy on w-chart";
};

/// r = 2: trapezoid in angle (max(resolution, min_angular) nodes) times
/// Gauss-Legendre (resolution nodes) in u = |w|^2 / (1 + |w|^2).
/// r = 3, 4: randomized Halton points on S^{2r-1} reduced by U(1), 8 seeded
/// Cranley-Patterson replicates of 64 * resolution points each.
QuadratureRule cp_quadrature(int r, int resolution, int min_angular = 0, std::uint64_t seed = 0x51ed);

/// Volume of P^{r-1} under the density (1 + |w|^2)^-r: pi^{r-1} / (r-1)!.
double fs_volume(int r);

}  // namespace finslerlab::l2
