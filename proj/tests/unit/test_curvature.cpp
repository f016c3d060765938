#include <cmath>

#include "doctest.h"
#include "finslerlab/bundles.hpp"
#include "finslerlab/curvature.hpp"
#include "finslerlab/errors.hpp"

using namespace finslerlab;
using namespace finslerlab::curvature;

namespace {

CVec c1(cplx a) { return (CVec(1) << a).finished(); }
CVec c2(cplx a, cplx b) { return (CVec(2) << a, b).finished(); }

bundles::AtlasPtr disc_atlas() { return bundles::builtin_bundle("trivial_weighted(2,(1,2))").atlas; }

finsler::GramFieldFn scaled_identity(double sign) {
  return [sign](int, const CVec& z) { return CMat(std::exp(sign * z.squaredNorm()) * CMat::Identity(2, 2)); };
}

}  // namespace

TEST_CASE("levi_form") {
  const CVec u = c2(cplx(0.3, -0.1), cplx(1.2, 0.5));
  const auto sq = levi_form([](const CVec& v) { return v.squaredNorm(); }, u);
  CHECK((sq.matrix - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);

  const auto fs = levi_form([](const CVec& v) { return std::log1p(v.squaredNorm()); }, c1(0.0));
  CHECK(std::abs(fs.matrix(0, 0) - 1.0) < 1e-8);

  const auto ph = levi_form([](const CVec& v) { return std::pow(v[0], 3).real(); }, c1(cplx(0.7, 0.2)));
  CHECK(std::abs(ph.matrix(0, 0)) < 1e-6);
}

TEST_CASE("line_curvature") {
  const auto fiber = line_curvature([](const CVec& w) { return 1.0 + w.squaredNorm(); }, c1(0.0));
  CHECK(std::abs(fiber.matrix(0, 0) + 1.0) < 1e-8);

  const auto flat = line_curvature([](const CVec& w) { return std::norm(1.0 + w[0] * w[0]); }, c1(cplx(0.3, 0.4)));
  CHECK(std::abs(flat.matrix(0, 0)) < 1e-6);

  const auto mixed = line_curvature(
      [](const CVec& p) { return (1.0 + std::norm(p[1])) / (1.0 + std::norm(p[0])); }, c2(0.0, 0.0));
  CHECK(std::abs(mixed.matrix(0, 0) - 1.0) < 1e-8);
  CHECK(std::abs(mixed.matrix(1, 1) + 1.0) < 1e-8);
  CHECK(std::abs(mixed.matrix(0, 1)) < 1e-8);
  CHECK(signature_of(mixed).matches(1, 1, 0));
}

TEST_CASE("signature_of") {
  CHECK(signature_of(CMat(c2(1.0, -1.0).asDiagonal())).matches(1, 1, 0));
  CHECK(signature_of(CMat(CMat::Identity(3, 3))).matches(3, 0, 0));
  const auto s = signature_of(CMat(c2(1.0, 1e-14).asDiagonal()), 1e-9);
  CHECK(s.matches(1, 0, 1));
  const auto edge = signature_of(CMat(c2(1.0, 1.5e-9).asDiagonal()), 1e-9);
  CHECK(!edge.conclusive);
}

TEST_CASE("kobayashi_jet against analytic curvature") {
  const auto line = finsler::make_hermitian("e^-|z|^2 |zeta|^2", 1, 1, [](int, const CVec& z) {
    return CMat(CMat::Constant(1, 1, std::exp(-z.squaredNorm())));
  });
  for (const cplx zeta : {cplx(1.0, 0.0), cplx(-0.3, 2.0)}) {
    CHECK(kobayashi_jet(*line, 0, c1(cplx(0.2, 0.1)), c1(zeta), c1(1.0)).value == doctest::Approx(1.0).epsilon(1e-6));
  }

  const auto w = bundles::builtin_bundle("trivial_weighted(2,(1,2))");
  const CVec z0 = c1(0.0);
  const CVec v = c1(1.0);
  CHECK(kobayashi_jet(*w.metric, 0, z0, c2(1.0, 0.0), v).value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(kobayashi_jet(*w.metric, 0, z0, c2(0.0, 1.0), v).value == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(kobayashi_jet(*w.metric, 0, z0, c2(M_SQRT1_2, M_SQRT1_2), v).value == doctest::Approx(1.5).epsilon(1e-6));

  const auto p = bundles::builtin_bundle("point_space(2)");
  CHECK_THROWS_AS(kobayashi_jet(*p.metric, 0, CVec(0), c2(1.0, 0.0), CVec(0)), DomainError);
}

TEST_CASE("kobayashi_sign") {
  const auto pos = bundles::builtin_bundle("line_sum(1,1)");
  const auto rp = kobayashi_sign(*pos.metric, *pos.atlas, bundles::sample_points(*pos.atlas, {20, 3}));
  CHECK(rp.verdict == SignVerdict::kPositive);
  CHECK(rp.min_value > 0);
  CHECK(rp.cross_check_signature.matches(1, 1, 0));

  const auto neg = bundles::builtin_bundle("line_sum(-1,-1)");
  const auto rn = kobayashi_sign(*neg.metric, *neg.atlas, bundles::sample_points(*neg.atlas, {20, 3}));
  CHECK(rn.verdict == SignVerdict::kNegative);

  const auto flat = bundles::make_bundle(bundles::parse_bundle_name("trivial_weighted(2,(1,2))"),
                                         bundles::MetricVariant::kFlatFrame);
  const auto rf = kobayashi_sign(*flat.metric, *flat.atlas, bundles::sample_points(*flat.atlas, {10, 3}));
  CHECK(rf.verdict == SignVerdict::kFlat);
  CHECK(std::abs(rf.max_value) <= rf.band);
}

TEST_CASE("griffiths_sign") {
  const auto atlas = disc_atlas();
  const auto s = bundles::sample_points(*atlas, {10, 4});
  const auto neg = griffiths_sign(scaled_identity(1.0), *atlas, s);
  CHECK(neg.verdict == SignVerdict::kNegative);
  CHECK(neg.min_margin == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(griffiths_sign(scaled_identity(-1.0), *atlas, s).verdict == SignVerdict::kPositive);

  const finsler::GramFieldFn split = [](int, const CVec& z) {
    const double t = z.squaredNorm();
    return CMat(c2(std::exp(-t), std::exp(t)).asDiagonal());
  };
  const auto ind = griffiths_sign(split, *atlas, s);
  CHECK(ind.verdict == SignVerdict::kIndefinite);
  REQUIRE(ind.min_witness.has_value());
  REQUIRE(ind.max_witness.has_value());
}

TEST_CASE("projective curvature signatures") {
  const auto pos = bundles::builtin_bundle("line_sum(1,1)");
  for (const auto& s : bundles::sample_points(*pos.atlas, {10, 8})) {
    const CMat theta = projective_curvature(*pos.metric, s.chart, s.z, s.zeta).matrix;
    CHECK(signature_of(theta).matches(1, 1, 0));
    CHECK(theta(1, 1).real() < 0);
  }
  const auto neg = bundles::builtin_bundle("line_sum(-1,-1)");
  for (const auto& s : bundles::sample_points(*neg.atlas, {10, 8})) {
    CHECK(signature_of(projective_curvature(*neg.metric, s.chart, s.z, s.zeta)).matches(0, 2, 0));
  }
}

TEST_CASE("transversal_signature_check") {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const auto r = transversal_signature_check(*b.metric, *b.atlas, bundles::sample_points(*b.atlas, {20, 5}));
  CHECK(r.passed);
  CHECK(r.chain_run);
  CHECK(r.chain_pseudoconvex);
  CHECK(r.chain_kobayashi == SignVerdict::kPositive);

  const auto flat = bundles::make_bundle(bundles::parse_bundle_name("trivial_weighted(2,(1,2))"),
                                         bundles::MetricVariant::kFlatFrame);
  CHECK(!transversal_signature_check(*flat.metric, *flat.atlas, bundles::sample_points(*flat.atlas, {5, 5})).passed);

  const auto p = bundles::builtin_bundle("point_space(2)");
  const auto rp = transversal_signature_check(*p.metric, *p.atlas, bundles::sample_points(*p.atlas, {5, 5}));
  CHECK(rp.passed);
  CHECK(!rp.note.empty());
}

TEST_CASE("psh_total_check") {
  const auto neg = bundles::builtin_bundle("line_sum(-1,-1)");
  const auto rn = psh_total_check(*neg.metric, *neg.atlas, bundles::sample_points(*neg.atlas, {10, 6}));
  CHECK(rn.agree);
  CHECK(rn.g_psh);

  const auto pos = bundles::builtin_bundle("line_sum(1,1)");
  const auto rp = psh_total_check(*pos.metric, *pos.atlas, bundles::sample_points(*pos.atlas, {10, 6}));
  CHECK(rp.agree);
  CHECK(!rp.g_psh);
  CHECK(rp.kobayashi == SignVerdict::kPositive);

  const auto flat = bundles::make_bundle(bundles::parse_bundle_name("trivial_weighted(2,(1,2))"),
                                         bundles::MetricVariant::kFlatFrame);
  CHECK(psh_total_check(*flat.metric, *flat.atlas, bundles::sample_points(*flat.atlas, {5, 6})).agree);
}
