#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finslerlab/bundles.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/metric.hpp"

namespace finslerlab::curvature {

inline constexpr double kSignatureBand = 1e-7;

enum class FormDomain { kFiber, kBase, kTotal, kProjChart, kLine };
const char* to_string(FormDomain d);

/// Coefficient matrix of a real (1,1)-form at a point; its value on (v, v-bar) is v^* M v.
struct HermitianFormAt {
  CVec point;
  CMat matrix;
  FormDomain domain = FormDomain::kTotal;
};

struct Signature {
  int positive = 0;
  int negative = 0;
  int zero = 0;
  double band = kSignatureBand;
  bool conclusive = true;  // false if some |eigenvalue| lies in (band/2, 2 band)
  RVec eigenvalues;

  bool matches(int p, int q, int z) const { return conclusive && positive == p && negative == q && zero == z; }
};
std::string to_string(const Signature& s);

/// Complex Hessian of f at `point` (fourth-order differences). `steps[i]` is the real
/// step for coordinate i; default 1e-3 * (1 + |point|).
HermitianFormAt levi_form(const ComplexScalarFn& f, const CVec& point, std::optional<RVec> steps = std::nullopt,
                          FormDomain domain = FormDomain::kTotal);

/// -levi_form(log weight): curvature of the line-bundle metric with local weight `weight`.
HermitianFormAt line_curvature(const ComplexScalarFn& weight, const CVec& point,
                               std::optional<RVec> steps = std::nullopt, FormDomain domain = FormDomain::kProjChart);

Signature signature_of(const CMat& m, double band = kSignatureBand);
Signature signature_of(const HermitianFormAt& form, double band = kSignatureBand);

/// Theta(h_G) on the P(E)-chart around [zeta] in coordinates (z_1..z_n, w_1..w_{r-1}).
HermitianFormAt projective_curvature(const finsler::FinslerMetric& metric, int chart, const CVec& z, const CVec& zeta);

struct JetOptions {
  double agreement = 1e-5;       // flag threshold between the two solvers
  double hard_disagreement = 1e-4;
  int descent_starts = 3;
  int descent_sweeps = 60;
  std::uint64_t seed = 7;
};

struct KobayashiJet {
  double value = 0.0;             // K_v(zeta), from the normal equations
  double descent_value = 0.0;     // independent coordinate-descent estimate
  double disagreement = 0.0;      // |value - descent_value| / max(1, |value|)
  bool flagged = false;
  CVec c_star;                    // minimizing first-order jet, in units of zeta / |zeta|
  CMat levi;                      // Levi form of (t, s) -> log G(z0 + t v, zeta + s)
};

/// L(c) = d^2/dt dt-bar log G(z0 + t v, zeta + t c) at t = 0, by finite differences in t.
double jet_objective(const finsler::FinslerMetric& metric, int chart, const CVec& z0, const CVec& zeta, const CVec& v,
                     const CVec& c);

/// K_v(zeta) = -inf_c L(c). Throws DomainError for n = 0 and NumericalError
/// "jet minimization unstable" when the two solvers disagree beyond hard_disagreement.
KobayashiJet kobayashi_jet(const finsler::FinslerMetric& metric, int chart, const CVec& z0, const CVec& zeta,
                           const CVec& v, const JetOptions& options = {});

/// Closed-form Chern-curvature ratio for G = zeta^* H(z) zeta, with H and its
/// derivatives along v taken by finite differences of the Gram field.
double hermitian_curvature_ratio(const finsler::GramFieldFn& gram, int chart, const CVec& z0, const CVec& zeta,
                                 const CVec& v);

enum class SignVerdict { kPositive, kNegative, kIndefinite, kFlat, kInconclusive };
const char* to_string(SignVerdict v);

struct SignWitness {
  bundles::SamplePoint sample;
  CVec direction;
  double value = 0.0;
};

struct KobayashiSignReport {
  SignVerdict verdict = SignVerdict::kInconclusive;
  std::size_t evaluations = 0;
  double band = kSignatureBand;
  double min_value = 0.0;
  double max_value = 0.0;
  std::optional<SignWitness> min_witness;
  std::optional<SignWitness> max_witness;
  std::size_t flagged = 0;
  // Cross-check on the first sample: Schur complement of Theta(h_G) and its signature.
  double cross_check_jet = 0.0;
  double cross_check_schur = 0.0;
  Signature cross_check_signature;
  bool cross_check_done = false;
};

/// Evaluates K over samples x (coordinate directions + the sample's own direction).
KobayashiSignReport kobayashi_sign(const finsler::FinslerMetric& metric, const bundles::BundleAtlas& atlas,
                                   std::span<const bundles::SamplePoint> samples, double band = kSignatureBand,
                                   const JetOptions& options = {});

struct GriffithsReport {
  SignVerdict verdict = SignVerdict::kInconclusive;  // kNegative = Griffiths negative
  std::size_t evaluations = 0;
  double band = kSignatureBand;
  double min_margin = 0.0;  // inf over samples of inf_c Levi log H(s, s)(v, v-bar)
  double max_margin = 0.0;
  double worst_oracle_gap = 0.0;
  std::optional<SignWitness> min_witness;
  std::optional<SignWitness> max_witness;
};

/// Griffiths sign of a Hermitian Gram field via the jet test, cross-checked
/// against hermitian_curvature_ratio (disagreement beyond 1e-5 throws).
GriffithsReport griffiths_sign(const finsler::GramFieldFn& gram, const bundles::BundleAtlas& atlas,
                               std::span<const bundles::SamplePoint> samples, double band = kSignatureBand,
                               const JetOptions& options = {});

struct TransversalSample {
  double fiber_min_eig = 0.0;    // of L_ff, normalized by the spectral scale of L
  double schur_max_eig = 0.0;    // of L_bb - L_bf L_ff^-1 L_fb, normalized likewise
  bool passed = false;
  bool inconclusive = false;
  CMat witness_subspace;         // (n + r) x n basis of W
};

struct TransversalReport {
  bool passed = false;
  std::size_t samples = 0;
  std::size_t inconclusive = 0;
  double band = kSignatureBand;
  double worst_fiber_min_eig = 0.0;
  double worst_schur_max_eig = 0.0;
  std::optional<bundles::SamplePoint> witness;
  std::optional<CMat> first_subspace;
  // Chained checks at the same samples, run when every sample passes.
  bool chain_run = false;
  bool chain_pseudoconvex = false;
  SignVerdict chain_kobayashi = SignVerdict::kInconclusive;
  std::string note;
};

/// Levi form of F = sqrt(G) on the total space, coordinates (z, zeta).
HermitianFormAt total_levi(const ComplexScalarFn& f, int n, const CVec& z, const CVec& zeta);

TransversalReport transversal_signature_check(const finsler::FinslerMetric& metric, const bundles::BundleAtlas& atlas,
                                              std::span<const bundles::SamplePoint> samples,
                                              double band = kSignatureBand, const JetOptions& options = {});

struct PshTotalReport {
  bool agree = false;
  bool g_psh = false;
  double min_levi_eig = 0.0;  // normalized by spectral scale
  SignVerdict kobayashi = SignVerdict::kInconclusive;
  std::size_t samples = 0;
  std::optional<bundles::SamplePoint> witness;
};

PshTotalReport psh_total_check(const finsler::FinslerMetric& metric, const bundles::BundleAtlas& atlas,
                               std::span<const bundles::SamplePoint> samples, double band = kSignatureBand);

}  // namespace finslerlab::curvature
