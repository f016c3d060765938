#include "finslerlab/pipeline.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "finslerlab/numdiff.hpp"

namespace finslerlab::pipeline {

namespace {

std::string describe(const bundles::SamplePoint& s) {
  std::string out = "chart " + std::to_string(s.chart);
  if (s.z.size() > 0) out += " z=" + numdiff::format_point(s.z);
  if (s.zeta.size() > 0) out += " zeta=" + numdiff::format_point(s.zeta);
  return out;
}

std::vector<bundles::SamplePoint> base_points(const std::vector<bundles::SamplePoint>& samples, std::size_t count) {
  std::vector<bundles::SamplePoint> out;
  for (std::size_t i = 0; i < std::min(count, samples.size()); ++i) out.push_back(samples[i]);
  if (out.empty()) out.push_back(bundles::SamplePoint{0, CVec(0), CVec(0), CVec(0)});
  return out;
}

StageRecord convexity_stage(const std::string& name, const finsler::FinslerMetric& metric,
                            const std::vector<bundles::SamplePoint>& points, const finsler::ProbePlan& probe) {
  StageRecord rec{name, true, "", {}};
  double worst = std::numeric_limits<double>::infinity();
  std::size_t triangle = 0;
  std::size_t hessian = 0;
  for (const auto& p : points) {
    const auto report = finsler::convexity_check(metric, p.chart, p.z, probe);
    triangle += report.triangle_probes;
    hessian += report.hessian_probes;
    worst = std::min(worst, report.worst_normalized_eigenvalue);
    if (report.verdict != multilinear::ConvexityVerdict::kConvex) {
      std::string witness = "chart " + std::to_string(p.chart) + " z=" + numdiff::format_point(p.z);
      if (!report.hessian_violations.empty()) {
        witness += " hessian point " + numdiff::format_point(report.hessian_violations.front().point);
      } else if (!report.triangle_violations.empty()) {
        witness += " triangle pair u=" + numdiff::format_point(report.triangle_violations.front().u) +
                   " v=" + numdiff::format_point(report.triangle_violations.front().v);
      }
      throw PipelineStageError(name, std::string("convexity verdict ") + multilinear::to_string(report.verdict),
                               witness);
    }
  }
  rec.summary = "convex at " + std::to_string(points.size()) + " base points";
  rec.values = {{"base_points", static_cast<double>(points.size())},
                {"triangle_probes", static_cast<double>(triangle)},
                {"hessian_probes", static_cast<double>(hessian)},
                {"worst_normalized_eigenvalue", worst}};
  return rec;
}

StageRecord strong_psh_stage(const finsler::FinslerMetric& metric, int n,
                             const std::vector<bundles::SamplePoint>& samples, double band) {
  StageRecord rec{"fk_strong_psh", true, "", {}};
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const ComplexScalarFn F = [&metric, chart = s.chart, n](const CVec& u) {
      return std::sqrt(std::max(0.0, metric.G(chart, CVec(u.head(n)), CVec(u.tail(u.size() - n)))));
    };
    const CMat L = curvature::total_levi(F, n, s.z, s.zeta).matrix;
    const RVec eig = Eigen::SelfAdjointEigenSolver<CMat>(L, Eigen::EigenvaluesOnly).eigenvalues();
    const double lo = eig.minCoeff() / std::max(eig.cwiseAbs().maxCoeff(), 1e-300);
    worst = std::min(worst, lo);
    if (!(lo > band)) {
      throw PipelineStageError("fk_strong_psh", "normalized min Levi eigenvalue " + std::to_string(lo), describe(s));
    }
  }
  rec.summary = "F_k strictly plurisubharmonic at " + std::to_string(samples.size()) + " total-space samples";
  rec.values = {{"samples", static_cast<double>(samples.size())}, {"min_normalized_levi_eigenvalue", worst}};
  return rec;
}

curvature::TransversalReport transversal(const finsler::FinslerMetric& metric, const bundles::BundleAtlas& atlas,
                                         const std::vector<bundles::SamplePoint>& samples, const PipelineOptions& o) {
  return curvature::transversal_signature_check(metric, atlas, samples, o.band, o.jet);
}

}  // namespace

PipelineReport theorem1_pipeline(const l2::GramField& field, const PipelineOptions& options) {
  PipelineReport report;
  report.k = field.k();
  report.epsilon = options.epsilon;
  const bundles::BundleAtlas& atlas = field.atlas();
  const int n = atlas.base_dim();
  const int r = atlas.rank();
  const bundles::AtlasPtr dual_atlas = l2::sym_power_dual_atlas(atlas, 1);

  if (n > 0) {
    if (options.gate) {
      report.gate = options.gate;
    } else {
      const bundles::AtlasPtr sym = l2::sym_power_dual_atlas(atlas, field.k());
      report.gate = curvature::griffiths_sign(field.as_fn(), *sym, bundles::sample_points(*sym, options.plan),
                                              options.band, options.jet);
    }
    StageRecord gate{"griffiths_gate", report.gate->verdict == curvature::SignVerdict::kNegative, "", {}};
    gate.summary = std::string("H_k Griffiths verdict ") + curvature::to_string(report.gate->verdict);
    gate.values = {{"evaluations", static_cast<double>(report.gate->evaluations)},
                   {"min_margin", report.gate->min_margin},
                   {"max_margin", report.gate->max_margin},
                   {"band", report.gate->band}};
    report.stages.push_back(gate);
    if (!gate.passed) {
      report.hypothesis_holds = false;
      report.hypothesis_note = "hypothesis fails: H_k is not Griffiths negative (" + gate.summary + ")";
      report.provenance = field.provenance();
      return report;
    }
  }

  report.fk = std::make_shared<l2::KthRootMetric>(field);
  const auto dual_samples = n > 0 ? bundles::sample_points(*dual_atlas, options.plan)
                                  : std::vector<bundles::SamplePoint>{};
  const auto points = base_points(dual_samples, options.convexity_points);
  report.stages.push_back(convexity_stage("fk_convexity", *report.fk, points, options.probe));
  if (n == 0) {
    report.certified = true;
    report.stages.back().summary += "; base is a point, convexity is the whole certificate";
    report.provenance = field.provenance();
    return report;
  }

  report.stages.push_back(strong_psh_stage(*report.fk, n, dual_samples, options.band));

  finsler::GramFieldFn h0;
  if (options.h0) {
    h0 = *options.h0;
    report.h0_source = "caller";
  } else if (field.metric().is_hermitian()) {
    h0 = [src = field.metric_ptr()](int chart, const CVec& z) -> CMat {
      return src->hermitian_gram(chart, z)->inverse().conjugate();
    };
    report.h0_source = "dual of the source Hermitian metric";
  } else {
    l2::GramField h1(field.metric_ptr(), field.atlas_ptr(), 1, field.options());
    h0 = h1.as_fn();
    report.h0_source = "H_1 of the source metric";
  }

  const auto build = [&](double eps) {
    auto reg = finsler::add_hermitian(report.fk, h0, eps);
    auto dual = finsler::make_dual(reg, options.force_dual_optimizer);
    return std::make_pair(reg, dual);
  };
  auto [reg, result] = build(options.epsilon);
  report.regularized = reg;
  report.result = result;
  report.stages.push_back(StageRecord{"regularization", true,
                                      "added epsilon * h0 with h0 = " + report.h0_source,
                                      {{"epsilon", options.epsilon}}});

  StageRecord dual_stage = convexity_stage("dualization", *result, points, options.probe);
  dual_stage.summary = std::string(result->is_hermitian() ? "closed-form" : "optimizer") + " dual, " +
                       dual_stage.summary;
  report.stages.push_back(dual_stage);

  const auto samples = bundles::sample_points(atlas, options.plan);
  const auto t = transversal(*result, atlas, samples, options);
  if (!t.passed) {
    std::string what = "transversal Levi signature (" + std::to_string(r) + "," + std::to_string(n) + ") not certified";
    if (!t.note.empty()) what += ": " + t.note;
    throw PipelineStageError("transversal_signature", what, t.witness ? describe(*t.witness) : "");
  }
  StageRecord trans{"transversal_signature", true,
                    "Levi form of F positive on fibers, negative on an n-dimensional transversal; "
                    "strong pseudoconvexity and Kobayashi positivity hold at the same samples",
                    {{"samples", static_cast<double>(t.samples)},
                     {"worst_fiber_min_eig", t.worst_fiber_min_eig},
                     {"worst_schur_max_eig", t.worst_schur_max_eig},
                     {"band", t.band}}};
  report.stages.push_back(trans);
  report.smallest_passing_epsilon = options.epsilon;

  for (double eps : options.smaller_epsilons) {
    auto [reg_e, dual_e] = build(eps);
    if (!transversal(*dual_e, atlas, samples, options).passed) break;
    report.smallest_passing_epsilon = eps;
  }
  report.certified = true;
  report.provenance = field.provenance();
  return report;
}

}  // namespace finslerlab::pipeline
