#include "finslerlab/curvature.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "finslerlab/errors.hpp"
#include "finslerlab/numdiff.hpp"

namespace finslerlab::curvature {

const char* to_string(FormDomain d) {
  switch (d) {
    case FormDomain::kFiber: return "fiber";
    case FormDomain::kBase: return "base";
    case FormDomain::kTotal: return "total";
    case FormDomain::kProjChart: return "projective_chart";
    case FormDomain::kLine: return "line";
  }
  return "unknown";
}

const char* to_string(SignVerdict v) {
  switch (v) {
    case SignVerdict::kPositive: return "positive";
    case SignVerdict::kNegative: return "negative";
    case SignVerdict::kIndefinite: return "indefinite";
    case SignVerdict::kFlat: return "flat";
    case SignVerdict::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(const Signature& s) {
  std::ostringstream os;
  os << "(" << s.positive << "," << s.negative << "," << s.zero << ")";
  if (!s.conclusive) os << " inconclusive";
  return os.str();
}

HermitianFormAt levi_form(const ComplexScalarFn& f, const CVec& point, std::optional<RVec> steps, FormDomain domain) {
  if (point.size() == 0) throw DomainError("levi_form: empty point");
  const RVec h = steps.value_or(RVec::Constant(point.size(), 1e-3 * (1.0 + point.norm())));
  if (h.size() != point.size()) throw DomainError("levi_form: one step per complex coordinate required");
  return HermitianFormAt{point, numdiff::complex_hessian(f, point, h), domain};
}

HermitianFormAt line_curvature(const ComplexScalarFn& weight, const CVec& point, std::optional<RVec> steps,
                               FormDomain domain) {
  const ComplexScalarFn logw = [&weight](const CVec& u) {
    const double w = weight(u);
    if (!(w > 0.0)) throw EvaluationError("line_curvature: weight is not positive at " + numdiff::format_point(u));
    return std::log(w);
  };
  HermitianFormAt form = levi_form(logw, point, std::move(steps), domain);
  form.matrix = -form.matrix;
  return form;
}

Signature signature_of(const CMat& m, double band) {
  if (m.rows() != m.cols()) throw DomainError("signature_of: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale) throw DomainError("signature_of: form is not Hermitian");
  Signature s;
  s.band = band;
  s.eigenvalues = Eigen::SelfAdjointEigenSolver<CMat>(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly).eigenvalues();
  for (double e : s.eigenvalues) {
    const double a = std::abs(e);
    if (a > band / 2 && a < 2 * band) s.conclusive = false;
    if (a <= band) {
      ++s.zero;
    } else if (e > 0) {
      ++s.positive;
    } else {
      ++s.negative;
    }
  }
  return s;
}

Signature signature_of(const HermitianFormAt& form, double band) { return signature_of(form.matrix, band); }

HermitianFormAt projective_curvature(const finsler::FinslerMetric& metric, int chart, const CVec& z, const CVec& zeta) {
  const finsler::ProjChartPoint p = finsler::proj_point(chart, z, zeta);
  const Eigen::Index n = z.size();
  const Eigen::Index m = n + p.w.size();
  CVec point(m);
  point << z, p.w;
  const int pivot = p.pivot;
  const ComplexScalarFn weight = [&metric, chart, n, pivot](const CVec& u) {
    return metric.G(chart, CVec(u.head(n)), finsler::lift(CVec(u.tail(u.size() - n)), pivot));
  };
  return line_curvature(weight, point, RVec::Constant(m, 1e-3), FormDomain::kProjChart);
}

HermitianFormAt total_levi(const ComplexScalarFn& f, int n, const CVec& z, const CVec& zeta) {
  const Eigen::Index r = zeta.size();
  CVec point(n + r);
  point << z, zeta;
  RVec steps(n + r);
  steps.head(n).setConstant(1e-3);
  steps.tail(r).setConstant(1e-3 * zeta.norm());
  return levi_form(f, point, steps, FormDomain::kTotal);
}

namespace {

double spectral_scale(const CMat& m) {
  return std::max(Eigen::SelfAdjointEigenSolver<CMat>(m, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff(),
                  1e-300);
}

}  // namespace

TransversalReport transversal_signature_check(const finsler::FinslerMetric& metric, const bundles::BundleAtlas& atlas,
                                              std::span<const bundles::SamplePoint> samples, double band,
                                              const JetOptions& options) {
  TransversalReport report;
  report.band = band;
  const int n = atlas.base_dim();
  const int r = atlas.rank();
  if (n == 0) {
    report.passed = true;
    report.note = "base is a point: no transversal directions (vacuous)";
    return report;
  }
  report.worst_fiber_min_eig = std::numeric_limits<double>::infinity();
  report.worst_schur_max_eig = -std::numeric_limits<double>::infinity();
  bool all_pass = true;
  for (const auto& s : samples) {
    const ComplexScalarFn F = [&metric, chart = s.chart, n](const CVec& u) {
      return std::sqrt(std::max(0.0, metric.G(chart, CVec(u.head(n)), CVec(u.tail(u.size() - n)))));
    };
    const CMat L = total_levi(F, n, s.z, s.zeta).matrix;
    const double scale = spectral_scale(L);
    const CMat Lbb = L.topLeftCorner(n, n);
    const CMat Lbf = L.topRightCorner(n, r);
    const CMat Lfb = L.bottomLeftCorner(r, n);
    const CMat Lff = L.bottomRightCorner(r, r);
    const double fiber_min = Eigen::SelfAdjointEigenSolver<CMat>(Lff, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() / scale;
    ++report.samples;
    bool sample_pass = false;
    double schur_max = std::numeric_limits<double>::quiet_NaN();
    if (std::abs(fiber_min) <= band) {
      ++report.inconclusive;
    } else if (fiber_min > 0) {
      const CMat X = Lff.llt().solve(Lfb);  // L_ff^-1 L_fb
      const CMat S = Lbb - Lbf * X;
      schur_max = Eigen::SelfAdjointEigenSolver<CMat>(0.5 * (S + S.adjoint()), Eigen::EigenvaluesOnly)
                      .eigenvalues()
                      .maxCoeff() /
                  scale;
      sample_pass = schur_max < -band;
      if (sample_pass && !report.first_subspace) {
        CMat W(n + r, n);
        W.topRows(n) = CMat::Identity(n, n);
        W.bottomRows(r) = -X;
        report.first_subspace = W;
      }
      report.worst_schur_max_eig = std::max(report.worst_schur_max_eig, schur_max);
    }
    if (fiber_min < report.worst_fiber_min_eig) report.worst_fiber_min_eig = fiber_min;
    if (!sample_pass && all_pass) report.witness = s;
    all_pass = all_pass && sample_pass;
  }
  report.passed = all_pass && report.samples > 0;
  if (!std::isfinite(report.worst_schur_max_eig)) report.worst_schur_max_eig = 0.0;
  if (report.passed) {
    report.chain_run = true;
    report.chain_pseudoconvex = finsler::strong_pseudoconvexity_check(metric, samples).passed;
    report.chain_kobayashi = kobayashi_sign(metric, atlas, samples, band, options).verdict;
    if (!report.chain_pseudoconvex || report.chain_kobayashi != SignVerdict::kPositive) {
      report.passed = false;
      report.note = "transversal signature holds but the chained checks disagree";
    }
  } else if (report.inconclusive > 0) {
    report.note = "singular fiber block at some samples";
  }
  return report;
}

PshTotalReport psh_total_check(const finsler::FinslerMetric& metric, const bundles::BundleAtlas& atlas,
                               std::span<const bundles::SamplePoint> samples, double band) {
  PshTotalReport report;
  const int n = atlas.base_dim();
  report.min_levi_eig = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const ComplexScalarFn G = [&metric, chart = s.chart, n](const CVec& u) {
      return metric.G(chart, CVec(u.head(n)), CVec(u.tail(u.size() - n)));
    };
    const CMat L = total_levi(G, n, s.z, s.zeta).matrix;
    const double lo = Eigen::SelfAdjointEigenSolver<CMat>(L, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() / spectral_scale(L);
    if (lo < report.min_levi_eig) {
      report.min_levi_eig = lo;
      report.witness = s;
    }
    ++report.samples;
  }
  if (report.samples == 0) report.min_levi_eig = 0.0;
  report.g_psh = report.min_levi_eig >= -band;
  if (n == 0) {
    report.kobayashi = SignVerdict::kFlat;
  } else {
    report.kobayashi = kobayashi_sign(metric, atlas, samples, band).verdict;
  }
  const bool seminegative = report.kobayashi == SignVerdict::kNegative || report.kobayashi == SignVerdict::kFlat;
  report.agree = report.g_psh == seminegative;
  return report;
}

}  // namespace finslerlab::curvature
