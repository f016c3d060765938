#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "finslerlab/bundles.hpp"
#include "finslerlab/metric.hpp"
#include "finslerlab/multilinear.hpp"

namespace finslerlab::finsler {

inline constexpr double kJetTolerance = 1e-8;

/// Fiber derivatives of G at (z, zeta). `hessian` is the matrix M with
/// M_ij = d^2 G / d zeta_i-bar d zeta_j, i.e. the form zeta -> v^* M v; for
/// G = zeta^* H zeta it equals H. `gradient_i` = dG / d zeta_i.
struct FiberJet2 {
  int chart = 0;
  CVec z;
  CVec zeta;
  double G = 0.0;
  CVec gradient;
  CMat hessian;
  double euler_gradient_residual = 0.0;  // |sum G_i zeta_i - G| / G
  double euler_hessian_residual = 0.0;   // |zeta^* M zeta - G| / G
};

/// Jet without the Euler assertion (used by the homogeneity report).
FiberJet2 compute_jet(const FinslerMetric& metric, int chart, const CVec& z, const CVec& zeta);

/// Jet with the Euler identities asserted: throws NumericalError
/// "evaluator inconsistent with homogeneity" if a residual exceeds 100 * kJetTolerance.
FiberJet2 fiber_jet(const FinslerMetric& metric, int chart, const CVec& z, const CVec& zeta);

struct HomogeneityReport {
  bool passed = true;
  std::size_t samples = 0;
  double tolerance = kJetTolerance;
  double worst_euler_gradient = 0.0;
  double worst_euler_hessian = 0.0;
  double worst_invariance = 0.0;           // max |M(lambda zeta) - M(zeta)| / max |M(zeta)|
  double worst_absolute_euler = 0.0;       // max |sum G_i zeta_i - G|
  std::optional<bundles::SamplePoint> witness;
};

HomogeneityReport check_homogeneity(const FinslerMetric& metric, std::span<const bundles::SamplePoint> samples,
                                    std::uint64_t seed, double tolerance = kJetTolerance);

struct PseudoconvexityReport {
  bool passed = true;
  std::size_t samples = 0;
  double tolerance = 1e-7;  // relative: min eig > tolerance * max eig
  double min_eigenvalue = 0.0;
  double min_normalized_eigenvalue = 0.0;
  std::optional<bundles::SamplePoint> witness;
};

/// min eig of (G_ij-bar) > 0 at every sample.
PseudoconvexityReport strong_pseudoconvexity_check(const FinslerMetric& metric,
                                                   std::span<const bundles::SamplePoint> samples,
                                                   double tolerance = 1e-7);

struct ProbePlan {
  std::size_t pairs = 1000;
  std::size_t hessian_points = 100;
  std::uint64_t seed = 42;
};

/// Fiber norm zeta -> F(z, zeta) checked with convexity_probe.
multilinear::ConvexityReport convexity_check(const FinslerMetric& metric, int chart, const CVec& z,
                                             const ProbePlan& plan,
                                             const multilinear::ConvexityTolerances& tol = {});
/// Same, with caller-chosen Hessian probe points.
multilinear::ConvexityReport convexity_check_at(const FinslerMetric& metric, int chart, const CVec& z,
                                                std::span<const CVec> hessian_points, std::size_t pairs,
                                                std::uint64_t seed,
                                                const multilinear::ConvexityTolerances& tol = {});

struct StrongConvexityReport {
  bool passed = true;
  std::size_t probes = 0;
  double tolerance = 1e-6;  // relative: min eig > tolerance * max eig of the real Hessian of G
  double min_normalized_eigenvalue = 0.0;
  std::optional<CVec> witness;
  std::vector<double> min_eigenvalues;  // per probe, input order
};

StrongConvexityReport strong_convexity_check(const FinslerMetric& metric, int chart, const CVec& z,
                                             std::span<const CVec> probes, double tolerance = 1e-6);
StrongConvexityReport strong_convexity_check(const FinslerMetric& metric, int chart, const CVec& z,
                                             const ProbePlan& plan, double tolerance = 1e-6);

/// Seeded nonzero probe vectors with |zeta| in [0.1, 10].
std::vector<CVec> probe_vectors(int rank, std::size_t count, std::uint64_t seed);

/// Point of P(E) in the inhomogeneous chart zeta_pivot = 1.
struct ProjChartPoint {
  int chart = 0;
  CVec z;
  CVec w;  // r - 1 coordinates: zeta_i / zeta_pivot for i != pivot, in index order
  int pivot = 0;
};

/// Chart chosen by maximal |zeta_i|; ties go to the highest index.
ProjChartPoint proj_point(int chart, const CVec& z, const CVec& zeta);
/// Representative with 1 in the pivot slot.
CVec lift(const CVec& w, int pivot);

/// h_G in the frame (sum zeta_i s_i) / zeta_pivot: G(z, lift(w, pivot)).
double hG_weight(const FinslerMetric& metric, const ProjChartPoint& p);

/// G + eps * zeta^* H0(z) zeta.
class RegularizedMetric final : public FinslerMetric {
 public:
  RegularizedMetric(MetricPtr base, GramFieldFn h0, double eps);
  double G(int chart, const CVec& z, const CVec& zeta) const override;
  ComplexScalarFn fiber_G(int chart, const CVec& z) const override;
  std::optional<CMat> hermitian_gram(int chart, const CVec& z) const override;
  bool is_hermitian() const override { return base_->is_hermitian(); }
  double epsilon() const { return eps_; }

 private:
  MetricPtr base_;
  GramFieldFn h0_;
  double eps_;
};

/// Returns `metric` itself when eps == 0.
MetricPtr add_hermitian(MetricPtr metric, GramFieldFn h0, double eps);

struct DualNormOptions {
  int starts = 32;
  int ascent_iterations = 12;
  int refine_starts = 4;
  int newton_iterations = 40;
  double rel_tol = 1e-8;
  std::uint64_t seed = 0x5eed;
};

struct DualNormResult {
  double value = 0.0;  // F*(xi)
  double lower = 0.0;  // certified by a feasible point
  double upper = 0.0;  // Newton-decrement estimate
  bool converged = false;
  int newton_steps = 0;
  CVec argmax;  // unit-F point attaining the sup
};

/// F*(xi) = max { |sum xi_i zeta_i| : F(zeta) = 1 } for a fiber norm given by G = F^2.
/// Throws NumericalError with the bracket if the refinement does not converge.
DualNormResult dual_norm(const ComplexScalarFn& fiber_G, const CVec& xi, const DualNormOptions& options = {});

/// Metric on the dual bundle, F*(z, .) fiberwise. Hermitian sources are
/// dualized in closed form (Gram conj(H^-1)) unless `force_optimizer`.
class DualMetric final : public FinslerMetric {
 public:
  DualMetric(MetricPtr source, DualNormOptions options = {}, bool force_optimizer = false);
  double G(int chart, const CVec& z, const CVec& xi) const override;
  ComplexScalarFn fiber_G(int chart, const CVec& z) const override;
  std::optional<CMat> hermitian_gram(int chart, const CVec& z) const override;
  bool is_hermitian() const override { return closed_form_; }
  const FinslerMetric& source() const { return *source_; }

 private:
  MetricPtr source_;
  DualNormOptions options_;
  bool closed_form_;
};

/// Fiber evaluator of F* at z.
ComplexScalarFn dual_finsler(const FinslerMetric& metric, int chart, const CVec& z, const DualNormOptions& options = {});
MetricPtr make_dual(MetricPtr metric, bool force_optimizer = false);

}  // namespace finslerlab::finsler
