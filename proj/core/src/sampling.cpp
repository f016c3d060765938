#include <cmath>

#include "finslerlab/bundles.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/numdiff.hpp"
#include "finslerlab/random.hpp"

namespace finslerlab::bundles {

namespace {

cplx disc_point(Rng& rng, double r_min, double r_max) {
  // area-uniform on the annulus r_min <= |z| <= r_max
  const double r = std::sqrt(rng.uniform(r_min * r_min, r_max * r_max));
  const double t = rng.uniform(0.0, 2.0 * M_PI);
  return std::polar(r, t);
}

CVec fiber_vector(Rng& rng, int rank) {
  const double size = std::pow(10.0, rng.uniform(-1.0, 1.0));
  return size * rng.unit_vector(rank);
}

}  // namespace

std::vector<SamplePoint> sample_points(const BundleAtlas& atlas, const SamplingPlan& plan) {
  if (plan.count < 1) throw DomainError("sample_points: count must be >= 1");
  Rng rng(plan.seed);
  const int n = atlas.base_dim();
  const int nchart = static_cast<int>(atlas.charts().size());
  std::vector<SamplePoint> out;
  out.reserve(plan.count);
  for (std::size_t i = 0; i < plan.count; ++i) {
    SamplePoint p;
    p.chart = atlas.charts()[static_cast<std::size_t>(nchart > 1 ? rng.next() % nchart : 0)].id;
    p.z = CVec(n);
    for (int a = 0; a < n; ++a) {
      p.z[a] = atlas.base_kind() == BaseKind::kProjectiveLine ? disc_point(rng, 0.0, 1.5) : disc_point(rng, 0.0, 0.8);
    }
    p.zeta = fiber_vector(rng, atlas.rank());
    p.direction = n > 0 ? rng.unit_vector(n) : CVec(0);
    out.push_back(std::move(p));
  }
  return out;
}

AtlasCheckReport check_atlas(const BundleAtlas& atlas, const finsler::FinslerMetric& metric,
                             std::size_t samples, std::uint64_t seed, double tolerance) {
  AtlasCheckReport report;
  report.tolerance = tolerance;
  if (metric.rank() != atlas.rank()) throw DomainError("check_atlas: metric rank differs from atlas rank");
  const auto& transitions = atlas.transitions();
  if (transitions.empty()) {
    report.note = "single chart: no overlaps to check";
    return report;
  }
  Rng rng(seed);
  report.min_abs_det = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const TransitionMap& t = transitions[i % transitions.size()];
    const TransitionMap* back = atlas.transition(t.target, t.source);
    SamplePoint p;
    p.chart = t.source;
    p.z = CVec(atlas.base_dim());
    for (Eigen::Index a = 0; a < p.z.size(); ++a) p.z[a] = disc_point(rng, 0.5, 2.0);
    p.zeta = fiber_vector(rng, atlas.rank());

    const CVec zt = t.base_map(p.z);
    const CMat g = t.fiber_matrix(p.z);
    const CVec zb = back->base_map(zt);
    const CMat gb = back->fiber_matrix(zt);
    const double det = std::abs(g.determinant());
    report.min_abs_det = std::min(report.min_abs_det, det);
    const double cocycle = std::max((zb - p.z).norm() / (1.0 + p.z.norm()),
                                    (gb * g - CMat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    report.worst_cocycle = std::max(report.worst_cocycle, cocycle);

    const double gs = metric.G(t.source, p.z, p.zeta);
    const double gt = metric.G(t.target, zt, g * p.zeta);
    if (!std::isfinite(gs) || !std::isfinite(gt)) {
      throw EvaluationError("check_atlas: non-finite metric value at chart " + std::to_string(t.source) +
                            " z=" + numdiff::format_point(p.z) + " zeta=" + numdiff::format_point(p.zeta));
    }
    const double residual = std::abs(gs - gt) / std::max(std::abs(gs), 1e-300);
    if (residual > report.worst_metric || !report.witness) {
      report.worst_metric = residual;
      report.witness = p;
      report.witness_target_chart = t.target;
    }
    ++report.samples;
  }
  report.passed = report.worst_cocycle <= tolerance && report.worst_metric <= tolerance && report.min_abs_det > 1e-12;
  if (!report.passed) {
    report.note = report.worst_metric > tolerance ? "metric not compatible with fiber transitions" : "cocycle condition fails";
  }
  return report;
}

}  // namespace finslerlab::bundles
