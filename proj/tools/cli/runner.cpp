#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "finslerlab/bundles.hpp"
#include "finslerlab/curvature.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/l2.hpp"
#include "finslerlab/multilinear.hpp"
#include "finslerlab/pipeline.hpp"

namespace finslerlab::cli {

using nlohmann::json;

namespace {

// ---- json helpers ----

json cj(cplx c) { return json::array({c.real(), c.imag()}); }

json vec_json(const CVec& v) {
  json out = json::array();
  for (const cplx& c : v) out.push_back(cj(c));
  return out;
}

json rvec_json(const RVec& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

json cmat_json(const CMat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(cj(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

json rmat_json(const RMat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

json sample_json(const bundles::SamplePoint& s) {
  return json{{"chart", s.chart}, {"z", vec_json(s.z)}, {"zeta", vec_json(s.zeta)}, {"direction", vec_json(s.direction)}};
}

template <class T, class F>
json opt_json(const std::optional<T>& v, F&& f) {
  return v ? f(*v) : json(nullptr);
}

json witness_json(const curvature::SignWitness& w) {
  return json{{"sample", sample_json(w.sample)}, {"direction", vec_json(w.direction)}, {"value", w.value}};
}

json signature_json(const curvature::Signature& s) {
  return json{{"positive", s.positive}, {"negative", s.negative}, {"zero", s.zero},
              {"band", s.band},         {"conclusive", s.conclusive}, {"eigenvalues", rvec_json(s.eigenvalues)}};
}

json basis_json(const multilinear::SymBasis& b) {
  json out = json::array();
  for (const auto& a : b.indices()) out.push_back(multilinear::to_string(a));
  return out;
}

json provenance_json(const l2::GramProvenance& p) {
  return json{{"metric", p.metric},
              {"density", p.density},
              {"measure", p.measure},
              {"k", p.k},
              {"rank", p.rank},
              {"sym_rank", p.sym_rank},
              {"rule", p.rule},
              {"resolution", p.resolution},
              {"angular_nodes", p.angular_nodes},
              {"nodes", p.nodes},
              {"rule_error_estimate", p.rule_error_estimate},
              {"resolution_checked", p.resolution_checked},
              {"resolution_change", p.resolution_change}};
}

json kobayashi_json(const curvature::KobayashiSignReport& r) {
  return json{{"verdict", curvature::to_string(r.verdict)},
              {"evaluations", r.evaluations},
              {"band", r.band},
              {"min_value", r.min_value},
              {"max_value", r.max_value},
              {"min_witness", opt_json(r.min_witness, witness_json)},
              {"max_witness", opt_json(r.max_witness, witness_json)},
              {"flagged", r.flagged},
              {"cross_check",
               {{"done", r.cross_check_done},
                {"jet", r.cross_check_jet},
                {"schur", r.cross_check_schur},
                {"signature", signature_json(r.cross_check_signature)}}}};
}

json griffiths_json(const curvature::GriffithsReport& r) {
  return json{{"verdict", curvature::to_string(r.verdict)},
              {"evaluations", r.evaluations},
              {"band", r.band},
              {"min_margin", r.min_margin},
              {"max_margin", r.max_margin},
              {"worst_oracle_gap", r.worst_oracle_gap},
              {"min_witness", opt_json(r.min_witness, witness_json)},
              {"max_witness", opt_json(r.max_witness, witness_json)}};
}

json scan_step_json(const l2::ScanStep& s) {
  json diags = json::array();
  for (const auto& d : s.diagnostics) {
    diags.push_back(json{{"chart", d.chart},
                         {"z", vec_json(d.z)},
                         {"w", vec_json(d.w)},
                         {"pivot", d.pivot},
                         {"matrix", cmat_json(d.matrix)},
                         {"max_eigenvalue", d.max_eigenvalue}});
  }
  return json{{"k", s.k},
              {"sym_rank", s.sym_rank},
              {"passed", s.passed},
              {"griffiths", griffiths_json(s.griffiths)},
              {"chart_residual", s.chart_residual},
              {"chart_consistent", s.chart_consistent},
              {"curvature_diagnostic", {{"max_eigenvalue", s.diagnostic_max}, {"points", diags}}},
              {"provenance", provenance_json(s.provenance)}};
}

json pipeline_json(const pipeline::PipelineReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages) {
    json values = json::object();
    for (const auto& [k, v] : s.values) values[k] = v;
    stages.push_back(json{{"stage", s.stage}, {"passed", s.passed}, {"summary", s.summary}, {"values", values}});
  }
  return json{{"k", r.k},
              {"hypothesis_holds", r.hypothesis_holds},
              {"hypothesis_note", r.hypothesis_note},
              {"epsilon", r.epsilon},
              {"smallest_passing_epsilon", opt_json(r.smallest_passing_epsilon, [](double e) { return json(e); })},
              {"h0", r.h0_source},
              {"certified", r.certified},
              {"stages", stages},
              {"provenance", provenance_json(r.provenance)}};
}

json error_json(const std::exception& e) {
  json out{{"message", e.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    out["kind"] = to_string(err->kind());
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) out["field_path"] = ce->field_path();
  } else {
    out["kind"] = "internal";
  }
  return out;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::kConfig:
      case ErrorKind::kDomain: return kExitConfig;
      case ErrorKind::kEvaluation:
      case ErrorKind::kNumericalInstability: return kExitNumerical;
    }
  }
  return kExitNumerical;
}

// 2 beats 3 beats 1 beats 0.
int combine(int a, int b) {
  auto rank = [](int c) { return c == kExitConfig ? 3 : c == kExitNumerical ? 2 : c == kExitMismatch ? 1 : 0; };
  return rank(a) >= rank(b) ? a : b;
}

json tool_json() { return json{{"name", kToolName}, {"version", kToolVersion}}; }

// ---- tasks ----

struct Context {
  config::ScenarioConfig cfg;
  bundles::Bundle bundle;
  std::size_t index = 0;

  std::uint64_t seed() const { return cfg.sampling.seed; }
  std::string path(const std::string& key) const { return "/tasks/" + std::to_string(index) + "/params/" + key; }
  int n() const { return bundle.atlas->base_dim(); }
  int r() const { return bundle.atlas->rank(); }
  curvature::JetOptions jet() const {
    curvature::JetOptions o;
    o.agreement = cfg.tolerances.jet_agreement;
    o.hard_disagreement = std::max(o.hard_disagreement, 10 * cfg.tolerances.jet_agreement);
    return o;
  }
  l2::L2Options l2() const {
    l2::L2Options o;
    o.resolution = cfg.quadrature.resolution;
    o.density = l2::parse_density(cfg.quadrature.density);
    return o;
  }
  multilinear::ConvexityTolerances convexity() const {
    multilinear::ConvexityTolerances t;
    t.triangle_rel = cfg.tolerances.triangle_rel;
    t.hessian_rel = cfg.tolerances.hessian_rel;
    return t;
  }
};

struct Outcome {
  std::string verdict;
  json result = json::object();
  json tolerance = json::object();
  std::size_t samples = 0;
};

std::size_t count_param(const json& p, const char* key, std::size_t fallback) {
  return p.contains(key) ? p[key].get<std::size_t>() : fallback;
}

std::vector<bundles::SamplePoint> samples_of(const Context& c, std::size_t count) {
  return bundles::sample_points(*c.bundle.atlas, bundles::SamplingPlan{count, c.seed()});
}

Outcome task_check_atlas(const Context& c, const json& p) {
  const std::size_t count = count_param(p, "samples", c.cfg.sampling.count);
  const auto r = bundles::check_atlas(*c.bundle.atlas, *c.bundle.metric, count, c.seed(), c.cfg.tolerances.atlas);
  return {r.passed ? "compatible" : "incompatible",
          json{{"worst_cocycle", r.worst_cocycle},
               {"worst_metric", r.worst_metric},
               {"min_abs_det", r.samples ? r.min_abs_det : 0.0},
               {"note", r.note},
               {"witness", opt_json(r.witness, sample_json)},
               {"witness_target_chart", r.witness_target_chart}},
          json{{"atlas", r.tolerance}},
          r.samples};
}

Outcome task_homogeneity(const Context& c, const json& p) {
  const auto s = samples_of(c, count_param(p, "samples", c.cfg.sampling.count));
  const auto r = finsler::check_homogeneity(*c.bundle.metric, s, c.seed(), c.cfg.tolerances.homogeneity);
  return {r.passed ? "homogeneous" : "not_homogeneous",
          json{{"worst_euler_gradient", r.worst_euler_gradient},
               {"worst_euler_hessian", r.worst_euler_hessian},
               {"worst_invariance", r.worst_invariance},
               {"worst_absolute_euler", r.worst_absolute_euler},
               {"witness", opt_json(r.witness, sample_json)}},
          json{{"homogeneity", r.tolerance}},
          r.samples};
}

Outcome task_pseudoconvexity(const Context& c, const json& p) {
  const auto s = samples_of(c, count_param(p, "samples", c.cfg.sampling.count));
  const auto r = finsler::strong_pseudoconvexity_check(*c.bundle.metric, s);
  return {r.passed ? "strongly_pseudoconvex" : "not_strongly_pseudoconvex",
          json{{"min_eigenvalue", r.min_eigenvalue},
               {"min_normalized_eigenvalue", r.min_normalized_eigenvalue},
               {"witness", opt_json(r.witness, sample_json)}},
          json{{"relative", r.tolerance}},
          r.samples};
}

json convexity_json(const multilinear::ConvexityReport& r) {
  json hess = json::array();
  for (const auto& w : r.hessian_violations) {
    hess.push_back(json{{"point", vec_json(w.point)},
                        {"min_eigenvalue", w.min_eigenvalue},
                        {"threshold", w.threshold},
                        {"hessian", rmat_json(w.hessian)}});
    if (hess.size() >= 3) break;
  }
  json tri = json::array();
  for (const auto& w : r.triangle_violations) {
    tri.push_back(json{{"u", vec_json(w.u)}, {"v", vec_json(w.v)}, {"lhs", w.lhs}, {"rhs", w.rhs}});
    if (tri.size() >= 3) break;
  }
  return json{{"verdict", multilinear::to_string(r.verdict)},
              {"triangle_probes", r.triangle_probes},
              {"hessian_probes", r.hessian_probes},
              {"triangle_violations", r.triangle_violations.size()},
              {"hessian_violations", r.hessian_violations.size()},
              {"worst_normalized_eigenvalue", r.worst_normalized_eigenvalue},
              {"hessian_witnesses", hess},
              {"triangle_witnesses", tri},
              {"note", r.note}};
}

json convexity_tolerance_json(const multilinear::ConvexityTolerances& t) {
  return json{{"triangle_rel", t.triangle_rel}, {"hessian_rel", t.hessian_rel}};
}

Outcome task_convexity(const Context& c, const json& p) {
  const auto points = samples_of(c, count_param(p, "samples", 3));
  const finsler::ProbePlan plan{count_param(p, "pairs", 1000), 100, c.seed()};
  Outcome out;
  out.tolerance = convexity_tolerance_json(c.convexity());
  auto verdict = multilinear::ConvexityVerdict::kConvex;
  json per = json::array();
  for (const auto& s : points) {
    const auto r = finsler::convexity_check(*c.bundle.metric, s.chart, s.z, plan, c.convexity());
    if (r.verdict == multilinear::ConvexityVerdict::kNonConvex) {
      verdict = r.verdict;
    } else if (r.verdict == multilinear::ConvexityVerdict::kInconclusive &&
               verdict == multilinear::ConvexityVerdict::kConvex) {
      verdict = r.verdict;
    }
    json entry = convexity_json(r);
    entry["chart"] = s.chart;
    entry["z"] = vec_json(s.z);
    per.push_back(std::move(entry));
  }
  out.verdict = multilinear::to_string(verdict);
  out.result = json{{"base_points", per}};
  out.samples = points.size();
  return out;
}

Outcome task_strong_convexity(const Context& c, const json& p) {
  const auto points = samples_of(c, count_param(p, "samples", 3));
  const finsler::ProbePlan plan{1000, 100, c.seed()};
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  json witness = nullptr;
  std::size_t probes = 0;
  double tol = 1e-6;
  for (const auto& s : points) {
    const auto r = finsler::strong_convexity_check(*c.bundle.metric, s.chart, s.z, plan);
    tol = r.tolerance;
    probes += r.probes;
    worst = std::min(worst, r.min_normalized_eigenvalue);
    if (!r.passed && ok) {
      witness = json{{"chart", s.chart}, {"z", vec_json(s.z)}, {"zeta", opt_json(r.witness, vec_json)}};
    }
    ok = ok && r.passed;
  }
  return {ok ? "strongly_convex" : "not_strongly_convex",
          json{{"probes", probes}, {"min_normalized_eigenvalue", worst}, {"witness", witness}},
          json{{"relative", tol}},
          points.size()};
}

Outcome task_kobayashi(const Context& c, const json& p) {
  const auto s = samples_of(c, count_param(p, "samples", c.cfg.sampling.count));
  const auto r = curvature::kobayashi_sign(*c.bundle.metric, *c.bundle.atlas, s, c.cfg.tolerances.signature_band, c.jet());
  return {curvature::to_string(r.verdict), kobayashi_json(r),
          json{{"signature_band", r.band}, {"jet_agreement", c.cfg.tolerances.jet_agreement}}, s.size()};
}

Outcome task_transversal(const Context& c, const json& p) {
  const auto s = samples_of(c, count_param(p, "samples", c.cfg.sampling.count));
  const auto r = curvature::transversal_signature_check(*c.bundle.metric, *c.bundle.atlas, s,
                                                        c.cfg.tolerances.signature_band, c.jet());
  return {r.passed ? "pass" : "fail",
          json{{"inconclusive", r.inconclusive},
               {"worst_fiber_min_eig", r.worst_fiber_min_eig},
               {"worst_schur_max_eig", r.worst_schur_max_eig},
               {"witness", opt_json(r.witness, sample_json)},
               {"first_subspace", opt_json(r.first_subspace, cmat_json)},
               {"chain",
                {{"run", r.chain_run},
                 {"strongly_pseudoconvex", r.chain_pseudoconvex},
                 {"kobayashi", curvature::to_string(r.chain_kobayashi)}}},
               {"note", r.note}},
          json{{"signature_band", r.band}},
          r.samples};
}

Outcome task_psh_total(const Context& c, const json& p) {
  const auto s = samples_of(c, count_param(p, "samples", c.cfg.sampling.count));
  const auto r = curvature::psh_total_check(*c.bundle.metric, *c.bundle.atlas, s, c.cfg.tolerances.signature_band);
  return {r.agree ? "agree" : "disagree",
          json{{"g_psh", r.g_psh},
               {"min_levi_eig", r.min_levi_eig},
               {"kobayashi", curvature::to_string(r.kobayashi)},
               {"witness", opt_json(r.witness, sample_json)}},
          json{{"signature_band", c.cfg.tolerances.signature_band}},
          r.samples};
}

Outcome task_line_signature(const Context& c, const json& p) {
  const auto s = samples_of(c, count_param(p, "samples", c.cfg.sampling.count));
  const double band = c.cfg.tolerances.signature_band;
  const int r = c.r();
  std::map<std::string, std::size_t> counts;
  std::size_t fiber_negative = 0;
  std::size_t inconclusive = 0;
  json first = nullptr;
  for (const auto& pt : s) {
    const CMat theta = curvature::projective_curvature(*c.bundle.metric, pt.chart, pt.z, pt.zeta).matrix;
    const auto sig = curvature::signature_of(theta, band);
    if (!sig.conclusive) ++inconclusive;
    ++counts["(" + std::to_string(sig.positive) + "," + std::to_string(sig.negative) + "," + std::to_string(sig.zero) +
             ")"];
    if (r > 1) {
      const CMat ff = theta.bottomRightCorner(r - 1, r - 1);
      if (Eigen::SelfAdjointEigenSolver<CMat>(ff, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff() < -band) {
        ++fiber_negative;
      }
    }
    if (first.is_null()) first = json{{"sample", sample_json(pt)}, {"theta", cmat_json(theta)}, {"signature", signature_json(sig)}};
  }
  json hist = json::object();
  for (const auto& [k, v] : counts) hist[k] = v;
  const std::string verdict = counts.size() == 1 && inconclusive == 0 ? counts.begin()->first : "mixed";
  return {verdict,
          json{{"signatures", hist},
               {"inconclusive", inconclusive},
               {"fiber_negative_definite", fiber_negative},
               {"first", first}},
          json{{"signature_band", band}},
          s.size()};
}

CVec point_param(const Context& c, const json& p) {
  const int n = c.n();
  if (!p.contains("z")) return CVec::Zero(n);
  const json& z = p["z"];
  if (static_cast<int>(z.size()) != n) {
    throw ConfigError(c.path("z"), "expected " + std::to_string(n) + " coordinates for this base");
  }
  CVec out(n);
  for (int i = 0; i < n; ++i) out[i] = cplx(z[static_cast<std::size_t>(i)][0].get<double>(), z[static_cast<std::size_t>(i)][1].get<double>());
  return out;
}

Outcome task_hk_gram(const Context& c, const json& p) {
  const int k = p.contains("k") ? p["k"].get<int>() : c.cfg.k_min;
  const CVec z = point_param(c, p);
  const auto g = l2::hk_gram(*c.bundle.metric, 0, z, k, c.l2());
  return {"positive_definite",
          json{{"k", k},
               {"z", vec_json(z)},
               {"basis", basis_json(g.basis())},
               {"matrix", cmat_json(g.matrix())},
               {"min_eigenvalue", g.min_eigenvalue()},
               {"max_eigenvalue", g.max_eigenvalue()},
               {"density", c.cfg.quadrature.density},
               {"resolution", c.cfg.quadrature.resolution}},
          json{{"pd", c.cfg.tolerances.pd}, {"resolution_doubling", c.l2().resolution_tol}},
          1};
}

Outcome task_griffiths_scan(const Context& c, const json& p) {
  const std::size_t count = count_param(p, "samples", c.cfg.sampling.count);
  const auto s = samples_of(c, count);
  const double band = c.cfg.tolerances.signature_band;
  const auto gate = curvature::kobayashi_sign(*c.bundle.metric, *c.bundle.atlas, s, band, c.jet());
  Outcome out;
  out.samples = s.size();
  out.tolerance = json{{"signature_band", band}, {"jet_agreement", c.cfg.tolerances.jet_agreement}};
  if (gate.verdict != curvature::SignVerdict::kPositive) {
    out.verdict = "gate_failed";
    out.result = json{{"gate", kobayashi_json(gate)}};
    return out;
  }
  l2::ScanOptions so;
  so.k_min = c.cfg.k_min;
  so.k_max = c.cfg.k_max;
  so.plan = {count, c.seed()};
  so.band = band;
  so.jet = c.jet();
  so.l2 = c.l2();
  so.gate = gate;
  const auto r = l2::griffiths_scan(c.bundle.metric, c.bundle.atlas, so);
  json steps = json::array();
  for (const auto& st : r.steps) steps.push_back(scan_step_json(st));
  out.verdict = r.found_k ? "found" : "exhausted";
  out.result = json{{"gate", kobayashi_json(r.gate)},
                    {"found_k", opt_json(r.found_k, [](int k) { return json(k); })},
                    {"k_range", {so.k_min, so.k_max}},
                    {"steps", steps}};
  return out;
}

Outcome task_pipeline(const Context& c, const json& p) {
  const int k = p.contains("k") ? p["k"].get<int>() : c.cfg.k_min;
  const std::size_t count = count_param(p, "samples", c.cfg.sampling.count);
  pipeline::PipelineOptions po;
  po.epsilon = p.contains("epsilon") ? p["epsilon"].get<double>() : c.cfg.epsilon;
  po.plan = {count, c.seed()};
  po.band = c.cfg.tolerances.signature_band;
  po.jet = c.jet();
  po.probe = finsler::ProbePlan{1000, 100, c.seed()};
  const l2::GramField field(c.bundle.metric, c.bundle.atlas, k, c.l2());
  Outcome out;
  out.samples = count;
  out.tolerance = json{{"signature_band", po.band}, {"triangle_rel", c.cfg.tolerances.triangle_rel}};
  try {
    const auto r = pipeline::theorem1_pipeline(field, po);
    out.verdict = r.certified ? "certified" : (r.hypothesis_holds ? "not_certified" : "hypothesis_fails");
    out.result = pipeline_json(r);
    if (r.gate) out.result["gate"] = griffiths_json(*r.gate);
  } catch (const pipeline::PipelineStageError& e) {
    out.verdict = "stage_failed";
    out.result = json{{"stage", e.stage()}, {"witness", e.witness()}, {"message", e.what()}};
  }
  return out;
}

multilinear::GramMatrix example_41_gram() {
  CMat h = CMat::Zero(3, 3);
  h(0, 0) = 0.5;
  h(1, 1) = 0.5;
  h(2, 2) = 1.0;
  return multilinear::GramMatrix(multilinear::SymBasis(2, 2), h);
}

CVec ones2() { return CVec::Ones(2); }

Outcome task_example_41(const Context& c, const json&) {
  const auto g = example_41_gram();
  const RMat exact = multilinear::power_form_hessian(g, ones2());
  const RealScalarFn q = [&g](const RVec& x) {
    const CVec c2 = multilinear::sym_power_coords(to_complex(x), g.basis());
    return multilinear::gram_eval(g, c2, c2).real();
  };
  const RMat fd = multilinear::real_hessian(q, to_real(ones2()));
  const RMat xx = exact.topLeftCorner(2, 2);
  const RVec eig = Eigen::SelfAdjointEigenSolver<RMat>(xx).eigenvalues();
  const double fd_error = (fd.topLeftCorner(2, 2) - xx).cwiseAbs().maxCoeff();
  return {eig.minCoeff() < -c.cfg.tolerances.eig ? "not_semipositive" : "semipositive",
          json{{"H", cmat_json(g.matrix())},
               {"point", {1.0, 1.0, 0.0, 0.0}},
               {"hessian_xx_exact", rmat_json(xx)},
               {"hessian_xx_finite_difference", rmat_json(fd.topLeftCorner(2, 2))},
               {"finite_difference_error", fd_error},
               {"eigenvalues", rvec_json(eig)},
               {"min_eigenvalue", eig.minCoeff()}},
          json{{"eig", c.cfg.tolerances.eig}, {"finite_difference", 1e-4}},
          1};
}

multilinear::ConvexityReport norm_probe(const multilinear::GramMatrix& g, std::uint64_t seed,
                                        const multilinear::ConvexityTolerances& tol) {
  const ComplexScalarFn norm = [&g](const CVec& v) { return multilinear::kth_root_norm(g, v); };
  const auto a = finsler::probe_vectors(2, 1000, seed);
  const auto b = finsler::probe_vectors(2, 1000, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<multilinear::VectorPair> pairs;
  for (std::size_t i = 0; i < a.size(); ++i) pairs.emplace_back(a[i], b[i]);
  std::vector<CVec> points{ones2()};
  for (const CVec& v : finsler::probe_vectors(2, 99, seed + 1)) points.push_back(v);
  return multilinear::convexity_probe(norm, pairs, points, tol);
}

Outcome task_example_41_convexity(const Context& c, const json&) {
  const auto g = example_41_gram();
  const auto r = norm_probe(g, c.seed(), c.convexity());
  json result = convexity_json(r);
  result["power_form_hessian_xx"] = rmat_json(multilinear::power_form_hessian(g, ones2()).topLeftCorner(2, 2));
  return {multilinear::to_string(r.verdict), result, convexity_tolerance_json(c.convexity()),
          r.triangle_probes + r.hessian_probes};
}

Outcome task_example_42(const Context& c, const json&) {
  const auto g = l2::dual_side_gram(CMat::Identity(2, 2), 2, c.l2());
  const CMat& h = g.matrix();
  RVec expected(3);
  expected << M_PI / 3, M_PI / 3, M_PI / 6;
  const double gram_error = (h - CMat(expected.cast<cplx>().asDiagonal())).cwiseAbs().maxCoeff();
  const auto dual = multilinear::dual_gram(g);
  RVec dual_expected(3);
  dual_expected << 0.5, 0.5, 1.0;
  dual_expected *= 6.0 / M_PI;
  const double dual_error = (dual.matrix() - CMat(dual_expected.cast<cplx>().asDiagonal())).cwiseAbs().maxCoeff();
  const auto conv = norm_probe(dual, c.seed(), c.convexity());
  const double tol = 1e-8;
  const bool ok = gram_error <= tol && dual_error <= tol && conv.verdict == multilinear::ConvexityVerdict::kNonConvex;
  return {ok ? "reproduced" : "mismatch",
          json{{"basis", basis_json(g.basis())},
               {"integrals",
                {{"H(e1^2,e1^2)", cj(h(0, 0))},
                 {"H(e2^2,e2^2)", cj(h(1, 1))},
                 {"H(e1e2,e1e2)", cj(h(2, 2))},
                 {"H(e1^2,e2^2)", cj(h(0, 1))},
                 {"H(e1^2,e1e2)", cj(h(0, 2))}}},
               {"gram", cmat_json(h)},
               {"gram_error", gram_error},
               {"dual_gram", cmat_json(dual.matrix())},
               {"dual_error", dual_error},
               {"dual_convexity", convexity_json(conv)}},
          json{{"entry_abs", tol}, {"triangle_rel", c.cfg.tolerances.triangle_rel}},
          1};
}

using TaskFn = Outcome (*)(const Context&, const json&);

const std::map<std::string, TaskFn>& dispatch() {
  static const std::map<std::string, TaskFn> table{
      {"check-atlas", task_check_atlas},
      {"check-homogeneity", task_homogeneity},
      {"strong-pseudoconvexity", task_pseudoconvexity},
      {"convexity", task_convexity},
      {"strong-convexity", task_strong_convexity},
      {"kobayashi-sign", task_kobayashi},
      {"transversal-signature", task_transversal},
      {"psh-total", task_psh_total},
      {"line-curvature-signature", task_line_signature},
      {"hk-gram", task_hk_gram},
      {"griffiths-scan", task_griffiths_scan},
      {"theorem1-pipeline", task_pipeline},
      {"reproduce-example-4.1", task_example_41},
      {"reproduce-example-4.2", task_example_42},
      {"example-4.1-convexity", task_example_41_convexity},
  };
  return table;
}

struct TaskRun {
  json entry;
  int exit_code = kExitOk;
  double ms = 0.0;
};

TaskRun run_one(const Context& base, std::size_t index) {
  Context c = base;
  c.index = index;
  const auto& spec = c.cfg.tasks[index];
  TaskRun run;
  run.entry = json{{"index", index},
                   {"task", spec.task},
                   {"params", spec.params},
                   {"expect", spec.expect ? json(*spec.expect) : json(nullptr)}};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Outcome o = dispatch().at(spec.task)(c, spec.params);
    run.entry["status"] = "ok";
    run.entry["verdict"] = o.verdict;
    run.entry["result"] = o.result;
    run.entry["tolerance"] = o.tolerance;
    run.entry["samples"] = o.samples;
    if (spec.expect) {
      const bool matched = *spec.expect == o.verdict;
      run.entry["matched"] = matched;
      if (!matched) run.exit_code = kExitMismatch;
    } else {
      run.entry["matched"] = nullptr;
    }
  } catch (const std::exception& e) {
    run.entry["status"] = "error";
    run.entry["verdict"] = nullptr;
    run.entry["matched"] = false;
    run.entry["error"] = error_json(e);
    run.exit_code = exit_code_for(e);
  }
  run.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

RunResult config_failure(const std::exception& e, const std::string& source) {
  RunResult out;
  out.exit_code = kExitConfig;
  out.report = json{{"tool", tool_json()}, {"command", "run"}, {"source", source}, {"error", error_json(e)},
                    {"summary", {{"exit_code", kExitConfig}}}};
  return out;
}

}  // namespace

RunResult run_config(const config::ScenarioConfig& input, const RunOptions& options) {
  Context ctx;
  ctx.cfg = input;
  if (options.seed) ctx.cfg.sampling.seed = *options.seed;
  ctx.bundle = bundles::make_bundle(ctx.cfg.bundle, ctx.cfg.metric);

  std::vector<TaskRun> runs(ctx.cfg.tasks.size());
  if (options.parallel) {
    std::vector<std::future<TaskRun>> futures;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      futures.push_back(std::async(std::launch::async, [&ctx, i] { return run_one(ctx, i); }));
    }
    for (std::size_t i = 0; i < runs.size(); ++i) runs[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < runs.size(); ++i) runs[i] = run_one(ctx, i);
  }

  RunResult out;
  json tasks = json::array();
  std::size_t matched = 0;
  std::size_t mismatched = 0;
  std::size_t errors = 0;
  for (auto& r : runs) {
    out.exit_code = combine(out.exit_code, r.exit_code);
    if (r.entry["status"] == "error") {
      ++errors;
    } else if (r.entry["matched"].is_boolean()) {
      r.entry["matched"].get<bool>() ? ++matched : ++mismatched;
    }
    out.timings.push_back({r.entry["task"].get<std::string>(), r.ms});
    tasks.push_back(std::move(r.entry));
  }
  out.report = json{{"tool", tool_json()},
                    {"command", "run"},
                    {"config", config::to_json(ctx.cfg)},
                    {"config_hash", config::config_hash(ctx.cfg)},
                    {"seed", ctx.cfg.sampling.seed},
                    {"bundle", {{"name", ctx.cfg.bundle.canonical_name()},
                                {"atlas", ctx.bundle.atlas->name()},
                                {"metric", ctx.bundle.metric->description()},
                                {"rank", ctx.bundle.atlas->rank()},
                                {"base_dim", ctx.bundle.atlas->base_dim()}}},
                    {"tasks", tasks},
                    {"summary",
                     {{"tasks", runs.size()},
                      {"matched", matched},
                      {"mismatched", mismatched},
                      {"errors", errors},
                      {"exit_code", out.exit_code}}}};
  return out;
}

RunResult run_text(const std::string& document, const RunOptions& options) {
  config::ScenarioConfig cfg;
  try {
    cfg = config::load_config(document);
  } catch (const ConfigError& e) {
    return config_failure(e, "document");
  }
  return run_config(cfg, options);
}

RunResult run_file(const std::string& path, const RunOptions& options) {
  std::ifstream in(path);
  if (!in) return config_failure(ConfigError("/", "cannot read config file '" + path + "'"), path);
  std::stringstream ss;
  ss << in.rdbuf();
  config::ScenarioConfig cfg;
  try {
    cfg = config::load_config(ss.str());
  } catch (const ConfigError& e) {
    return config_failure(e, path);
  }
  return run_config(cfg, options);
}

RunResult reproduce(const std::string& example, const RunOptions& options) {
  config::ScenarioConfig cfg;
  cfg.bundle = bundles::parse_bundle_name("point_space(2)");
  if (example == "4.1") {
    cfg.tasks.push_back({"reproduce-example-4.1", "not_semipositive", json::object()});
  } else if (example == "4.2") {
    cfg.tasks.push_back({"reproduce-example-4.2", "reproduced", json::object()});
  } else {
    throw UsageError("unknown example '" + example + "' (expected 4.1 or 4.2)");
  }
  RunResult out = run_config(cfg, options);
  out.report["command"] = "reproduce";
  out.report["example"] = example;
  return out;
}

RunResult scan(const ScanRequest& req) {
  RunResult out;
  out.report = json{{"tool", tool_json()},
                    {"command", "scan"},
                    {"request",
                     {{"bundle", req.bundle},
                      {"k_max", req.k_max},
                      {"seed", req.seed},
                      {"samples", req.samples},
                      {"epsilon", req.epsilon},
                      {"resolution", req.resolution}}},
                    {"certificate_chain_complete", false}};
  auto finish = [&out](int code, const std::string& verdict) {
    out.exit_code = code;
    out.report["verdict"] = verdict;
    out.report["summary"] = json{{"exit_code", code}};
    return out;
  };
  try {
    const bundles::Bundle bundle = bundles::builtin_bundle(req.bundle);
    out.report["bundle"] = json{{"name", bundle.spec.canonical_name()},
                                {"atlas", bundle.atlas->name()},
                                {"metric", bundle.metric->description()},
                                {"rank", bundle.atlas->rank()},
                                {"base_dim", bundle.atlas->base_dim()}};
    if (bundle.atlas->base_dim() == 0) {
      out.report["gate"] = json{{"verdict", "rejected"}, {"reason", "base is a point: the scan needs base directions"}};
      return finish(kExitMismatch, "gate_rejected");
    }
    const bundles::SamplingPlan plan{req.samples, req.seed};
    const auto samples = bundles::sample_points(*bundle.atlas, plan);
    const auto gate = curvature::kobayashi_sign(*bundle.metric, *bundle.atlas, samples);
    out.report["gate"] = kobayashi_json(gate);
    if (gate.verdict != curvature::SignVerdict::kPositive) return finish(kExitMismatch, "gate_failed");

    l2::ScanOptions so;
    so.k_min = 1;
    so.k_max = req.k_max;
    so.plan = plan;
    so.l2.resolution = req.resolution;
    so.gate = gate;
    const auto sr = l2::griffiths_scan(bundle.metric, bundle.atlas, so);
    json steps = json::array();
    for (const auto& st : sr.steps) steps.push_back(scan_step_json(st));
    out.report["scan"] = json{{"found_k", opt_json(sr.found_k, [](int k) { return json(k); })},
                              {"k_range", {so.k_min, so.k_max}},
                              {"samples", sr.samples},
                              {"steps", steps}};
    if (!sr.found_k) return finish(kExitMismatch, "exhausted");

    const l2::GramField field(bundle.metric, bundle.atlas, *sr.found_k, so.l2);
    pipeline::PipelineOptions po;
    po.epsilon = req.epsilon;
    po.plan = plan;
    po.probe = finsler::ProbePlan{1000, 100, req.seed};
    po.gate = sr.steps.back().griffiths;
    try {
      const auto pr = pipeline::theorem1_pipeline(field, po);
      out.report["pipeline"] = pipeline_json(pr);
      out.report["certificate_chain_complete"] = pr.certified;
      return finish(pr.certified ? kExitOk : kExitMismatch, pr.certified ? "certified" : "not_certified");
    } catch (const pipeline::PipelineStageError& e) {
      out.report["pipeline"] = json{{"stage", e.stage()}, {"witness", e.witness()}, {"message", e.what()}};
      return finish(kExitMismatch, "stage_failed");
    }
  } catch (const std::exception& e) {
    out.report["error"] = error_json(e);
    return finish(exit_code_for(e), "error");
  }
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void render_run(std::ostringstream& os, const RunResult& r) {
  const json& rep = r.report;
  os << kToolName << " " << kToolVersion << "  " << rep.value("command", "run");
  if (rep.contains("bundle")) os << "  bundle " << rep["bundle"].value("name", "");
  if (rep.contains("config_hash")) os << "  config " << rep["config_hash"].get<std::string>();
  if (rep.contains("seed")) os << "  seed " << rep["seed"].get<std::uint64_t>();
  os << "\n";
  if (rep.contains("error")) os << "error (" << rep["error"].value("kind", "") << "): " << rep["error"].value("message", "") << "\n";
  if (rep.contains("tasks")) {
    for (std::size_t i = 0; i < rep["tasks"].size(); ++i) {
      const json& t = rep["tasks"][i];
      std::string tag = "ok";
      if (t["status"] == "error") {
        tag = "ERROR";
      } else if (t["matched"].is_boolean() && !t["matched"].get<bool>()) {
        tag = "MISMATCH";
      }
      os << "  [" << tag << "] " << t["task"].get<std::string>() << ": ";
      if (t["status"] == "error") {
        os << t["error"].value("message", "");
      } else {
        os << t["verdict"].get<std::string>();
        if (!t["expect"].is_null()) os << " (expected " << t["expect"].get<std::string>() << ")";
        os << "  samples " << t["samples"].get<std::size_t>();
      }
      if (i < r.timings.size()) os << "  " << fmt(r.timings[i].milliseconds) << " ms";
      os << "\n";
    }
  }
}

void render_scan(std::ostringstream& os, const RunResult& r) {
  const json& rep = r.report;
  os << kToolName << " " << kToolVersion << "  scan " << rep["request"]["bundle"].get<std::string>() << "  k_max "
     << rep["request"]["k_max"].get<int>() << "  seed " << rep["request"]["seed"].get<std::uint64_t>() << "\n";
  if (rep.contains("gate")) os << "  gate: kobayashi " << rep["gate"].value("verdict", "") << "\n";
  if (rep.contains("scan")) {
    for (const json& s : rep["scan"]["steps"]) {
      os << "  k=" << s["k"].get<int>() << ": griffiths " << s["griffiths"]["verdict"].get<std::string>()
         << "  margin [" << fmt(s["griffiths"]["min_margin"].get<double>()) << ", "
         << fmt(s["griffiths"]["max_margin"].get<double>()) << "]  diagnostic max eig "
         << fmt(s["curvature_diagnostic"]["max_eigenvalue"].get<double>()) << "\n";
    }
  }
  if (rep.contains("pipeline") && rep["pipeline"].contains("stages")) {
    for (const json& s : rep["pipeline"]["stages"]) {
      os << "  stage " << s["stage"].get<std::string>() << ": " << (s["passed"].get<bool>() ? "pass" : "fail") << "  "
         << s["summary"].get<std::string>() << "\n";
    }
  } else if (rep.contains("pipeline")) {
    os << "  " << rep["pipeline"].value("message", "") << "\n";
  }
  if (rep.contains("error")) os << "  error: " << rep["error"].value("message", "") << "\n";
  os << "  verdict " << rep.value("verdict", "") << "\n";
}

}  // namespace

std::string render_text(const RunResult& r) {
  std::ostringstream os;
  if (r.report.value("command", "") == "scan") {
    render_scan(os, r);
  } else {
    render_run(os, r);
  }
  os << "exit " << r.exit_code << "\n";
  return os.str();
}

std::string render(const RunResult& r, const std::string& format) {
  if (format == "text") return render_text(r);
  return r.report.dump(2) + "\n";
}

std::string builtins_text() {
  std::string out;
  for (const auto& line : bundles::list_builtins()) out += line + "\n";
  return out;
}

}  // namespace finslerlab::cli
