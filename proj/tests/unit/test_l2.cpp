#include <cmath>

#include "doctest.h"
#include "finslerlab/bundles.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/l2.hpp"
#include "finslerlab/pipeline.hpp"
#include "finslerlab/quadrature.hpp"

using namespace finslerlab;
using namespace finslerlab::l2;

namespace {

CVec c1(cplx a) { return (CVec(1) << a).finished(); }

template <class F>
cplx integrate(const QuadratureRule& rule, F&& f) {
  cplx s = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(rule.nodes[i]);
  return s;
}

CMat example2() {
  return CMat((CVec(3) << M_PI / 3, M_PI / 3, M_PI / 6).finished().asDiagonal());
}

double max_off_diagonal(const CMat& m) {
  CMat off = m;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("cp_quadrature r = 2") {
  const auto rule = cp_quadrature(2, 24);
  const auto fs = [](const CVec& w) { return std::pow(1.0 + w.squaredNorm(), -2.0); };
  CHECK(std::abs(integrate(rule, fs) - M_PI) < 1e-12);
  const auto quartic = [](const CVec& w) { return std::pow(w.squaredNorm(), 2) * std::pow(1.0 + w.squaredNorm(), -4.0); };
  CHECK(std::abs(integrate(rule, quartic) - M_PI / 3) < 1e-12);
  const auto odd = [](const CVec& w) { return w[0] * w[0] * std::pow(1.0 + w.squaredNorm(), -4.0); };
  CHECK(std::abs(integrate(rule, odd)) < 1e-14);
  CHECK(fs_volume(2) == doctest::Approx(M_PI));
  CHECK(rule.angular_nodes >= 24);
}

TEST_CASE("cp_quadrature r = 3 integrates the Fubini-Study volume") {
  const auto rule = cp_quadrature(3, 24);
  CHECK(rule.kind == RuleKind::kQuasiMonteCarlo);
  CHECK(rule.replicates == 8);
  double s = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * rule.fs_density[i];
  CHECK(std::abs(s - fs_volume(3)) < 1e-10 + 10 * rule.error_estimate);
  CHECK(fs_volume(3) == doctest::Approx(M_PI * M_PI / 2));
}

TEST_CASE("phi_k_local") {
  const multilinear::SymBasis b(2, 2);
  const CVec w = c1(cplx(0.4, -1.3));
  const auto phi = [&](int idx) { return phi_k_local(CVec::Unit(3, idx), b, 1)(w); };
  CHECK(std::abs(phi(2) - w[0]) < 1e-15);
  CHECK(std::abs(phi(1) - 1.0) < 1e-15);
  CHECK(std::abs(phi(0) - w[0] * w[0]) < 1e-15);
}

TEST_CASE("hk_gram on point_space(2) reproduces Example 2") {
  const auto p = bundles::builtin_bundle("point_space(2)");
  for (const auto density : {Density::kFubiniStudy, Density::kInduced}) {
    L2Options o;
    o.density = density;
    const auto g = hk_gram(*p.metric, 0, CVec(0), 2, o);
    CHECK((g.matrix() - example2()).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK((dual_side_gram(CMat::Identity(2, 2), 2).matrix() - example2()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("hk_gram is diagonal for torus-invariant metrics") {
  const auto w = bundles::builtin_bundle("trivial_weighted(2,(1,2))");
  const auto g = hk_gram(*w.metric, 0, c1(cplx(0.3, 0.5)), 3);
  CHECK(max_off_diagonal(g.matrix()) < 1e-10 * g.max_eigenvalue());
  const auto q = bundles::builtin_bundle("quartic_finsler(2)");
  const auto gq = hk_gram(*q.metric, 0, c1(0.1), 2);
  CHECK(max_off_diagonal(gq.matrix()) < 1e-10 * gq.max_eigenvalue());
}

TEST_CASE("hk_gram on line_sum(1,1)") {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const auto g0 = hk_gram(*b.metric, 0, c1(0.0), 1);
  CHECK((g0.matrix() - M_PI / 2 * CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
  // scales as (1 + |z|^2)^k
  const CVec z = c1(cplx(0.6, -0.8));
  const auto g2 = hk_gram(*b.metric, 0, z, 2);
  const auto g20 = hk_gram(*b.metric, 0, c1(0.0), 2);
  CHECK((g2.matrix() - 4.0 * g20.matrix()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("GramField is chart-covariant") {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const GramField field(b.metric, b.atlas, 2);
  const CVec z = c1(cplx(0.7, 0.3));
  const auto* t = b.atlas->transition(0, 1);
  REQUIRE(t != nullptr);
  const CMat m = sym_power_dual_transition(t->fiber_matrix(z), field.basis());
  const CMat lhs = field(0, z);
  const CMat rhs = m.adjoint() * field(1, t->base_map(z)) * m;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8 * lhs.cwiseAbs().maxCoeff());
}

TEST_CASE("GramField cache") {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const GramField field(b.metric, b.atlas, 1);
  const GramField copy = field;
  const CVec z = c1(cplx(0.2, 0.1));
  const CMat a = field(0, z);
  CHECK(copy.cache_size() == 1);
  CHECK(copy(0, z) == a);
  CHECK(field.provenance().resolution_checked);
  CHECK(field.provenance().resolution_change < 1e-8);
}

TEST_CASE("fk_norm") {
  const auto p = bundles::builtin_bundle("point_space(2)");
  const GramField field(p.metric, p.atlas, 2);
  CHECK(fk_norm(field, 0, CVec(0), CVec::Ones(2)) == doctest::Approx(std::pow(4 * M_PI / 3, 0.25)).epsilon(1e-9));
  CHECK(fk_norm(field, 0, CVec(0), CVec::Zero(2)) == 0.0);
  const CVec v = (CVec(2) << cplx(0.3, 0.9), cplx(-1.1, 0.2)).finished();
  const cplx lam(-0.5, 2.0);
  CHECK(fk_norm(field, 0, CVec(0), lam * v) == doctest::Approx(std::abs(lam) * fk_norm(field, 0, CVec(0), v)));
}

TEST_CASE("dual_side_gram") {
  const auto d = multilinear::dual_gram(dual_side_gram(CMat::Identity(2, 2), 2));
  const CMat want = (6 / M_PI) * CMat((CVec(3) << 0.5, 0.5, 1.0).finished().asDiagonal());
  CHECK((d.matrix() - want).cwiseAbs().maxCoeff() < 1e-8);

  const auto g1 = dual_side_gram(CMat::Identity(2, 2), 1);
  CHECK(max_off_diagonal(g1.matrix()) < 1e-12);
  CHECK(std::abs(g1.matrix()(0, 0) - g1.matrix()(1, 1)) < 1e-12);
}

TEST_CASE("curvature diagnostic for line_sum(1,1)") {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const auto d0 = curvature_diagnostic(*b.metric, 0, c1(0.0), CVec::Unit(2, 1), 1);
  CHECK(d0.max_eigenvalue == doctest::Approx(-1.0).epsilon(1e-5));
  const auto d1 = curvature_diagnostic(*b.metric, 0, c1(0.5), (CVec(2) << 0.3, 1.0).finished(), 2);
  CHECK(d1.max_eigenvalue == doctest::Approx(-2.0 / (1.25 * 1.25)).epsilon(1e-5));
}

TEST_CASE("griffiths_scan rejects metrics that are not Kobayashi positive") {
  const auto flat = bundles::make_bundle(bundles::parse_bundle_name("trivial_weighted(2,(1,2))"),
                                         bundles::MetricVariant::kFlatFrame);
  ScanOptions o;
  o.plan = {5, 1};
  CHECK_THROWS_AS(griffiths_scan(flat.metric, flat.atlas, o), DomainError);
  const auto p = bundles::builtin_bundle("point_space(2)");
  CHECK_THROWS_AS(griffiths_scan(p.metric, p.atlas, o), DomainError);
}

TEST_CASE("theorem1_pipeline") {
  SUBCASE("point base reduces to convexity") {
    const auto p = bundles::builtin_bundle("point_space(2)");
    const auto r = pipeline::theorem1_pipeline(GramField(p.metric, p.atlas, 2));
    CHECK(r.certified);
    REQUIRE(r.stages.size() == 1);
    CHECK(r.stages[0].stage == "fk_convexity");
  }
  SUBCASE("Griffiths-positive field fails the hypothesis") {
    const auto b = bundles::builtin_bundle("line_sum(-1,-1)");
    pipeline::PipelineOptions o;
    o.plan = {8, 2};
    const auto r = pipeline::theorem1_pipeline(GramField(b.metric, b.atlas, 1), o);
    CHECK(!r.hypothesis_holds);
    CHECK(!r.certified);
    REQUIRE(r.gate.has_value());
    CHECK(r.gate->verdict == curvature::SignVerdict::kPositive);
  }
}
