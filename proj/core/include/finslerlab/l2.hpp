#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finslerlab/bundles.hpp"
#include "finslerlab/curvature.hpp"
#include "finslerlab/metric.hpp"
#include "finslerlab/multilinear.hpp"
#include "finslerlab/quadrature.hpp"

// L^2 metrics H_k on S^k E^* built from a Finsler metric on E, the k-th root
// metrics F_k on E^*, and the Griffiths scan over k.
namespace finslerlab::l2 {

/// Fiber density omega^{r-1} on P(E_z).
///   kInduced:    det Levi_w log G(z, lift(w)), i.e. the Fubini-Study form of h_G
///   kFubiniStudy: (1 + |w|^2)^-r, the flat-frame density
enum class Density { kInduced, kFubiniStudy };
const char* to_string(Density d);
Density parse_density(const std::string& name);

struct L2Options {
  int resolution = 24;
  Density density = Density::kInduced;
  bool check_resolution = true;  // r = 2 only: doubling must move no entry by more than 1e-8
  double resolution_tol = 1e-8;
  std::uint64_t qmc_seed = 0x51ed;
};

/// Sum_alpha u_alpha lift(w, pivot)^alpha: Phi_k(u) in the frame (e^*)^k of the pivot chart.
std::function<cplx(const CVec&)> phi_k_local(const CVec& u, const multilinear::SymBasis& basis, int pivot);

/// Density value at chart point w (pivot chart) for the metric's h_G at z.
double fiber_density(const finsler::FinslerMetric& metric, int chart, const CVec& z, const CVec& w, int pivot,
                     Density density);

/// Gram matrix of H_k at z on the monomial basis of S^k E^*_z:
///   H[a][b] = int conj(zeta^a) zeta^b / G(z, zeta)^k * density dA,  zeta = lift(w, pivot).
/// pivot < 0 selects the last coordinate. Throws NumericalError if the result is not positive definite.
multilinear::GramMatrix hk_gram(const finsler::FinslerMetric& metric, int chart, const CVec& z, int k,
                                const QuadratureRule& rule, Density density = Density::kInduced, int pivot = -1);

/// Same data as hk_gram, with the rule built from the options (resolution check included).
multilinear::GramMatrix hk_gram(const finsler::FinslerMetric& metric, int chart, const CVec& z, int k,
                                const L2Options& options = {});

struct GramProvenance {
  std::string metric;
  std::string density;
  std::string measure = "lebesgue dx dy on the fiber chart";
  int k = 1;
  int rank = 0;
  std::size_t sym_rank = 0;
  std::string rule;  // "gauss-legendre x trapezoid" or "randomized halton"
  int resolution = 0;
  int angular_nodes = 0;
  std::size_t nodes = 0;
  double rule_error_estimate = 0.0;
  bool resolution_checked = false;
  double resolution_change = 0.0;  // max entry change under doubled resolution
};

/// z -> H_k(z) on an atlas, cached per (chart, z). Copies share the cache.
class GramField {
 public:
  GramField(finsler::MetricPtr metric, bundles::AtlasPtr atlas, int k, L2Options options = {});

  int k() const;
  const multilinear::SymBasis& basis() const;
  const bundles::BundleAtlas& atlas() const;
  const finsler::FinslerMetric& metric() const;
  finsler::MetricPtr metric_ptr() const;
  bundles::AtlasPtr atlas_ptr() const;
  const L2Options& options() const;

  CMat operator()(int chart, const CVec& z) const;
  multilinear::GramMatrix gram(int chart, const CVec& z) const;
  finsler::GramFieldFn as_fn() const;
  /// Provenance; the resolution fields are filled by the first evaluation.
  GramProvenance provenance() const;
  std::size_t cache_size() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

/// F_k(v) = H_k(v^k, v^k)^{1/2k}.
double fk_norm(const GramField& field, int chart, const CVec& z, const CVec& v);

/// F_k^2 as a Finsler metric on E^*; Hermitian when k = 1.
class KthRootMetric final : public finsler::FinslerMetric {
 public:
  explicit KthRootMetric(GramField field);
  double G(int chart, const CVec& z, const CVec& eta) const override;
  ComplexScalarFn fiber_G(int chart, const CVec& z) const override;
  std::optional<CMat> hermitian_gram(int chart, const CVec& z) const override;
  bool is_hermitian() const override;
  const GramField& field() const { return field_; }

 private:
  GramField field_;
};

/// Matrix of u -> u(g^-1 .) on S^k coefficient vectors: the S^k E^* transition for fiber matrix g.
CMat sym_power_dual_transition(const CMat& g, const multilinear::SymBasis& basis);

/// Atlas of S^k E^* (k = 1 gives E^*).
bundles::AtlasPtr sym_power_dual_atlas(const bundles::BundleAtlas& atlas, int k);

/// H_k for a point-space inner product h on V^* (Gram of G on V^*): a Gram matrix on S^k V.
multilinear::GramMatrix dual_side_gram(const CMat& h, int k, const L2Options& options = {});

/// Levi_z [k log G(z, lift(w)) - log det g(z, w)] with g the fiber density matrix.
struct CurvatureDiagnostic {
  int chart = 0;
  CVec z;
  CVec w;
  int pivot = 0;
  CMat matrix;
  double max_eigenvalue = 0.0;
};
CurvatureDiagnostic curvature_diagnostic(const finsler::FinslerMetric& metric, int chart, const CVec& z, const CVec& zeta,
                                    int k, Density density = Density::kInduced);

struct ScanOptions {
  int k_min = 1;
  int k_max = 4;
  bundles::SamplingPlan plan{};
  double band = curvature::kSignatureBand;
  curvature::JetOptions jet{};
  L2Options l2{};
  std::size_t diagnostic_samples = 5;
  double chart_tolerance = 1e-6;
  bool stop_at_first = true;
  /// Reuse a gate computed by the caller on the same samples.
  std::optional<curvature::KobayashiSignReport> gate;
};

struct ScanStep {
  int k = 0;
  std::size_t sym_rank = 0;
  curvature::GriffithsReport griffiths;
  double chart_residual = 0.0;
  bool chart_consistent = false;
  std::vector<CurvatureDiagnostic> diagnostics;
  double diagnostic_max = 0.0;  // largest eigenvalue over diagnostics
  GramProvenance provenance;
  bool passed = false;
};

struct ScanReport {
  curvature::KobayashiSignReport gate;
  std::vector<ScanStep> steps;
  std::optional<int> found_k;
  std::size_t samples = 0;
};

/// Kobayashi gate (DomainError unless positive), then per-k Griffiths sign of H_k.
ScanReport griffiths_scan(finsler::MetricPtr metric, bundles::AtlasPtr atlas, const ScanOptions& options = {});

}  // namespace finslerlab::l2
