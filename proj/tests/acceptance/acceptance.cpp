// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "finslerlab/bundles.hpp"
#include "finslerlab/curvature.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/l2.hpp"
#include "finslerlab/multilinear.hpp"
#include "finslerlab/random.hpp"
#include "runner.hpp"

using namespace finslerlab;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s > budget_s) {
    o.pass = false;
    o.detail += "; over the " + sci(budget_s) + " s budget";
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), s);
  std::fflush(stdout);
}

CMat diag3(double a, double b, double c) { return CMat((CVec(3) << a, b, c).finished().asDiagonal()); }

multilinear::GramMatrix example1() { return {multilinear::SymBasis(2, 2), diag3(0.5, 0.5, 1.0)}; }

std::vector<multilinear::VectorPair> pairs(int r, std::size_t n, std::uint64_t seed) {
  const auto a = finsler::probe_vectors(r, n, seed);
  const auto b = finsler::probe_vectors(r, n, seed ^ 0xabcdefULL);
  std::vector<multilinear::VectorPair> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(a[i], b[i]);
  return out;
}

Outcome c1_example2_gram() {
  const auto p = bundles::builtin_bundle("point_space(2)");
  l2::L2Options o;
  o.density = l2::Density::kFubiniStudy;
  const auto g = l2::hk_gram(*p.metric, 0, CVec(0), 2, o);
  const double err = (g.matrix() - diag3(M_PI / 3, M_PI / 3, M_PI / 6)).cwiseAbs().maxCoeff();
  return {err <= 1e-8, "max entry error " + sci(err) + " vs diag(pi/3, pi/3, pi/6), tol 1e-8"};
}

Outcome c2_example1_hessian() {
  const auto g = example1();
  const RealScalarFn q = [&g](const RVec& x) {
    const CVec c = multilinear::sym_power_coords(to_complex(x), g.basis());
    return multilinear::gram_eval(g, c, c).real();
  };
  RMat want(2, 2);
  want << 14, 16, 16, 14;
  const RMat fd = multilinear::real_hessian(q, to_real(CVec::Ones(2))).topLeftCorner(2, 2);
  const RMat exact = multilinear::power_form_hessian(g, CVec::Ones(2)).topLeftCorner(2, 2);
  const double fd_err = (fd - want).cwiseAbs().maxCoeff();
  const double exact_err = (exact - want).cwiseAbs().maxCoeff();
  const double lo = multilinear::min_eig_hermitian(exact);
  const bool ok = fd_err <= 1e-4 && exact_err == 0.0 && std::abs(lo + 2.0) < 1e-12;
  return {ok, "xx-block fd error " + sci(fd_err) + " (tol 1e-4), exact error " + sci(exact_err) + ", min eigenvalue " +
                  sci(lo)};
}

Outcome c3_example2_dual() {
  const auto g = l2::dual_side_gram(CMat::Identity(2, 2), 2);
  const auto d = multilinear::dual_gram(g);
  const double err = (d.matrix() - (6 / M_PI) * diag3(0.5, 0.5, 1.0)).cwiseAbs().maxCoeff();
  std::vector<CVec> points{CVec::Ones(2)};
  for (const CVec& v : finsler::probe_vectors(2, 99, 5)) points.push_back(v);
  const auto r = multilinear::convexity_probe([&d](const CVec& v) { return multilinear::kth_root_norm(d, v); },
                                              pairs(2, 1000, 5), points);
  const double w = r.hessian_violations.empty() ? 0.0 : r.hessian_violations.front().min_eigenvalue;
  const bool ok = err <= 1e-8 && r.verdict == multilinear::ConvexityVerdict::kNonConvex && w < 0;
  return {ok, "dual error " + sci(err) + " (tol 1e-8), verdict " + multilinear::to_string(r.verdict) +
                  ", witness min eigenvalue " + sci(w)};
}

// Doubles the quadrature resolution from 24 until the r = 2 doubling check accepts the field.
l2::GramField resolved_field(const finsler::MetricPtr& metric, const bundles::AtlasPtr& atlas, int k, int& resolution) {
  for (resolution = 24;; resolution *= 2) {
    l2::L2Options o;
    o.resolution = resolution;
    l2::GramField field(metric, atlas, k, o);
    try {
      field(0, CVec(0));
      return field;
    } catch (const NumericalError&) {
      if (resolution >= 192) throw;
    }
  }
}

Outcome c4_minkowski() {
  const int ranks[] = {2, 3};
  std::size_t violations = 0;
  std::size_t fields = 0;
  double worst = std::numeric_limits<double>::infinity();
  int max_resolution = 0;
  for (int i = 0; i < 20; ++i) {
    const int r = ranks[i % 2];
    const int k = 1 + (i / 2) % 3;
    Rng rng(1000 + static_cast<std::uint64_t>(i));
    CMat a(r, r);
    for (int row = 0; row < r; ++row) a.row(row) = rng.complex_normal(r).transpose();
    const CMat h = a * a.adjoint() + 0.25 * CMat::Identity(r, r);
    const auto metric = finsler::make_hermitian("seeded h", r, 0, [h](int, const CVec&) { return h; });
    const auto atlas = bundles::builtin_bundle("point_space(" + std::to_string(r) + ")").atlas;
    int resolution = 0;
    const l2::GramField field = resolved_field(metric, atlas, k, resolution);
    max_resolution = std::max(max_resolution, resolution);
    const auto rep = multilinear::convexity_probe(
        [&field](const CVec& v) { return l2::fk_norm(field, 0, CVec(0), v); }, pairs(r, 1000, 50 + i),
        finsler::probe_vectors(r, 100, 70 + i));
    violations += rep.triangle_violations.size() + rep.hessian_violations.size();
    worst = std::min(worst, rep.worst_normalized_eigenvalue);
    if (rep.verdict == multilinear::ConvexityVerdict::kConvex) ++fields;
  }
  return {violations == 0 && fields == 20, std::to_string(fields) + "/20 fields convex, " + std::to_string(violations) +
                                               " violations, worst normalized Hessian eigenvalue " + sci(worst) +
                                               ", quadrature resolution <= " + std::to_string(max_resolution)};
}

Outcome c5_jet_vs_chern() {
  const char* names[] = {"trivial_weighted(2,(1,2))", "trivial_weighted(3,(1,2,3),2)", "line_sum(1,1)", "line_sum(-1,-1)"};
  double worst = 0.0;
  std::size_t n = 0;
  for (const char* name : names) {
    const auto b = bundles::builtin_bundle(name);
    const auto gram = *bundles::default_gram_field(b.spec);
    for (const auto& s : bundles::sample_points(*b.atlas, {25, 2024})) {
      const double jet = curvature::kobayashi_jet(*b.metric, s.chart, s.z, s.zeta, s.direction).value;
      const double oracle = curvature::hermitian_curvature_ratio(gram, s.chart, s.z, s.zeta, s.direction);
      worst = std::max(worst, std::abs(jet - oracle) / std::abs(oracle));
      ++n;
    }
  }
  return {n == 100 && worst <= 1e-5, std::to_string(n) + " triples, worst relative gap " + sci(worst) + " (tol 1e-5)"};
}

Outcome c6_signatures() {
  const auto pos = bundles::builtin_bundle("line_sum(1,1)");
  const auto neg = bundles::builtin_bundle("line_sum(-1,-1)");
  int ok_pos = 0;
  int fiber_neg = 0;
  int ok_neg = 0;
  for (const auto& s : bundles::sample_points(*pos.atlas, {50, 6})) {
    const CMat theta = curvature::projective_curvature(*pos.metric, s.chart, s.z, s.zeta).matrix;
    if (curvature::signature_of(theta, 1e-7).matches(1, 1, 0)) ++ok_pos;
    if (theta.bottomRightCorner(1, 1)(0, 0).real() < -1e-7) ++fiber_neg;
  }
  for (const auto& s : bundles::sample_points(*neg.atlas, {50, 6})) {
    if (curvature::signature_of(curvature::projective_curvature(*neg.metric, s.chart, s.z, s.zeta), 1e-7).matches(0, 2, 0)) {
      ++ok_neg;
    }
  }
  return {ok_pos == 50 && fiber_neg == 50 && ok_neg == 50,
          "line_sum(1,1) (1,1,0) at " + std::to_string(ok_pos) + "/50, fiber negative definite at " +
              std::to_string(fiber_neg) + "/50; line_sum(-1,-1) (0,2,0) at " + std::to_string(ok_neg) + "/50"};
}

Outcome c7_transversal_chain() {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const auto s = bundles::sample_points(*b.atlas, {50, 7});
  const auto t = curvature::transversal_signature_check(*b.metric, *b.atlas, s);
  const auto p = finsler::strong_pseudoconvexity_check(*b.metric, s);
  const auto k = curvature::kobayashi_sign(*b.metric, *b.atlas, s);
  const bool ok = t.passed && t.samples == 50 && t.chain_run && t.chain_pseudoconvex &&
                  t.chain_kobayashi == curvature::SignVerdict::kPositive && p.passed &&
                  k.verdict == curvature::SignVerdict::kPositive;
  return {ok, std::string("transversal ") + (t.passed ? "pass" : "fail") + " at " + std::to_string(t.samples) +
                  " samples (worst fiber eig " + sci(t.worst_fiber_min_eig) + ", worst Schur eig " +
                  sci(t.worst_schur_max_eig) + "), pseudoconvex " + (p.passed ? "yes" : "no") + ", kobayashi " +
                  curvature::to_string(k.verdict)};
}

Outcome c8_desk_scan(const std::string& golden_path) {
  std::ifstream in(golden_path);
  if (!in) return {false, "cannot read " + golden_path};
  const json golden = json::parse(in);
  const auto b = bundles::builtin_bundle(golden["bundle"].get<std::string>());
  l2::ScanOptions o;
  o.k_max = golden["k_max"].get<int>();
  o.plan = {golden["samples"].get<std::size_t>(), golden["seed"].get<std::uint64_t>()};
  o.l2.resolution = golden["resolution"].get<int>();
  const auto r = l2::griffiths_scan(b.metric, b.atlas, o);
  if (!r.found_k) return {false, "no Griffiths-negative H_k for k <= " + std::to_string(o.k_max)};
  const double tol = golden["tolerance"]["margin_abs"].get<double>();
  const double dtol = golden["tolerance"]["diagnostic_abs"].get<double>();
  double gap = 0.0;
  double dgap = 0.0;
  bool same_k = *r.found_k == golden["found_k"].get<int>() && r.steps.size() == golden["steps"].size();
  for (std::size_t i = 0; same_k && i < r.steps.size(); ++i) {
    const json& g = golden["steps"][i];
    gap = std::max({gap, std::abs(r.steps[i].griffiths.min_margin - g["min_margin"].get<double>()),
                    std::abs(r.steps[i].griffiths.max_margin - g["max_margin"].get<double>())});
    dgap = std::max(dgap, std::abs(r.steps[i].diagnostic_max - g["diagnostic_max_eigenvalue"].get<double>()));
  }
  const auto& st = r.steps.back();
  return {same_k && gap <= tol && dgap <= dtol,
          "found k = " + std::to_string(*r.found_k) + " (golden " + std::to_string(golden["found_k"].get<int>()) +
              "), margins [" + sci(st.griffiths.min_margin) + ", " + sci(st.griffiths.max_margin) +
              "], golden gap " + sci(gap) + " (tol " + sci(tol) + "), diagnostic gap " + sci(dgap)};
}

Outcome c9_homogeneity() {
  const char* names[] = {"point_space(2)",  "point_space(4)",          "line_sum(1,1)",
                         "line_sum(-1,-1)", "line_sum(2,0)",           "trivial_weighted(2,(1,2))",
                         "trivial_weighted(3,(1,2,3),2)", "quartic_finsler(2)", "quartic_finsler(3,2)"};
  double worst = 0.0;
  int passed = 0;
  for (const char* name : names) {
    const auto b = bundles::builtin_bundle(name);
    const auto r = finsler::check_homogeneity(*b.metric, bundles::sample_points(*b.atlas, {200, 9}), 9, 1e-8);
    worst = std::max({worst, r.worst_euler_gradient, r.worst_euler_hessian, r.worst_invariance});
    if (r.passed && r.samples == 200) ++passed;
  }
  constexpr int total = sizeof(names) / sizeof(names[0]);
  return {passed == total && worst < 1e-8, std::to_string(passed) + "/" + std::to_string(total) +
                                               " builtins at 200 samples, worst residual " + sci(worst) + " (tol 1e-8)"};
}

Outcome c10_determinism(const std::string& config_dir) {
  std::ifstream in(config_dir + "/line_sum_1_1.json");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto a = cli::run_text(ss.str());
  const auto b = cli::run_text(ss.str());
  const auto c = cli::run_text(ss.str(), cli::RunOptions{std::nullopt, true});
  const bool run_same = a.report.dump() == b.report.dump() && a.report.dump() == c.report.dump();
  cli::ScanRequest req{"line_sum(1,1)"};
  req.seed = 7;
  const auto s1 = cli::scan(req);
  const auto s2 = cli::scan(req);
  const bool scan_same = s1.report.dump() == s2.report.dump();
  const bool ok = run_same && scan_same && a.exit_code == 0 && s1.exit_code == 0;
  return {ok, std::string("run reports ") + (run_same ? "identical" : "differ") + " (" +
                  std::to_string(a.report.dump().size()) + " bytes, sequential x2 + parallel), scan reports " +
                  (scan_same ? "identical" : "differ") + " (" + std::to_string(s1.report.dump().size()) + " bytes)"};
}

}  // namespace

int main() {
  criterion(1, "Example 4.2 Gram matrix", 5, c1_example2_gram);
  criterion(2, "Example 4.1 Hessian", 1, c2_example1_hessian);
  criterion(3, "Example 4.2 dual", 5, c3_example2_dual);
  criterion(4, "Minkowski convexity of F_k", 60, c4_minkowski);
  criterion(5, "Kobayashi jet vs Chern oracle", 30, c5_jet_vs_chern);
  criterion(6, "Theta(h_G) signatures", 30, c6_signatures);
  criterion(7, "Transversal Levi signature chain", 60, c7_transversal_chain);
  criterion(8, "Griffiths desk scan", 600, [] { return c8_desk_scan(FINSLERLAB_GOLDEN_DIR "/line_sum_1_1_scan.json"); });
  criterion(9, "Homogeneity suite", 60, c9_homogeneity);
  criterion(10, "Deterministic reports", 600, [] { return c10_determinism(FINSLERLAB_CONFIG_DIR); });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
