#include <cmath>

#include "doctest.h"
#include "finslerlab/bundles.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/multilinear.hpp"

using namespace finslerlab;
using namespace finslerlab::finsler;

namespace {

const CMat kIdentity2 = CMat::Identity(2, 2);

MetricPtr quartic() { return bundles::builtin_bundle("quartic_finsler(2)").metric; }

// Complex fiber Hessian of sqrt(|a|^4 + |b|^4), worked out by hand.
CMat quartic_levi(const CVec& zeta) {
  const double p = std::norm(zeta[0]);
  const double q = std::norm(zeta[1]);
  const double s = p * p + q * q;
  const double c = std::pow(s, -1.5);
  CMat m(2, 2);
  m(0, 0) = c * (p * p * p + 2 * p * q * q);
  m(1, 1) = c * (q * q * q + 2 * q * p * p);
  // -1/4 s^-3/2 S_abar S_b, S_abar = 2 a^2 abar, S_b = 2 b bbar^2
  m(0, 1) = -c * zeta[0] * zeta[0] * std::conj(zeta[0]) * zeta[1] * std::conj(zeta[1]) * std::conj(zeta[1]);
  m(1, 0) = std::conj(m(0, 1));
  return m;
}

}  // namespace

TEST_CASE("fiber_jet on Hermitian metrics returns the Gram matrix") {
  const auto b = bundles::builtin_bundle("trivial_weighted(2,(1,2))");
  const CVec z = (CVec(1) << cplx(0.3, 0.2)).finished();
  const CVec zeta = (CVec(2) << cplx(1.0, -0.5), cplx(0.2, 0.7)).finished();
  const auto jet = fiber_jet(*b.metric, 0, z, zeta);
  CHECK((jet.hessian - *b.metric->hermitian_gram(0, z)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(jet.euler_gradient_residual < 1e-8);
  CHECK(jet.euler_hessian_residual < 1e-8);
}

TEST_CASE("fiber_jet on the quartic metric") {
  const auto m = quartic();
  const auto axis = fiber_jet(*m, 0, CVec::Zero(1), CVec::Unit(2, 0));
  CHECK(axis.G == doctest::Approx(1.0));
  CHECK(std::abs(axis.hessian(0, 0) - 1.0) < 1e-6);
  CHECK(std::abs(axis.hessian(1, 1)) < 1e-6);

  const CVec zeta = (CVec(2) << cplx(0.8, 0.3), cplx(-0.4, 0.9)).finished();
  const auto jet = fiber_jet(*m, 0, CVec::Zero(1), zeta);
  CHECK((jet.hessian - quartic_levi(zeta)).cwiseAbs().maxCoeff() < 1e-6);

  const auto scaled = fiber_jet(*m, 0, CVec::Zero(1), cplx(1.2, 1.6) * zeta);
  CHECK((scaled.hessian - jet.hessian).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("check_homogeneity") {
  for (const char* name : {"line_sum(1,1)", "quartic_finsler(2)"}) {
    const auto b = bundles::builtin_bundle(name);
    const auto s = bundles::sample_points(*b.atlas, {100, 5});
    const auto r = check_homogeneity(*b.metric, s, 5);
    CHECK_MESSAGE(r.passed, name);
    CHECK(r.samples == 100);
  }

  const auto base = quartic();
  const auto broken = make_closed_form("broken", 2, 1, [base](int c, const CVec& z, const CVec& zeta) {
    return base->G(c, z, zeta) + 0.01;
  });
  const auto s = bundles::sample_points(*bundles::builtin_bundle("quartic_finsler(2)").atlas, {20, 5});
  const auto r = check_homogeneity(*broken, s, 5);
  CHECK(!r.passed);
  CHECK(r.worst_absolute_euler == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(r.witness.has_value());
}

TEST_CASE("strong_pseudoconvexity_check") {
  const auto h = bundles::builtin_bundle("line_sum(1,1)");
  CHECK(strong_pseudoconvexity_check(*h.metric, bundles::sample_points(*h.atlas, {50, 1})).passed);

  const auto q = bundles::builtin_bundle("quartic_finsler(2)");
  CHECK(strong_pseudoconvexity_check(*q.metric, bundles::sample_points(*q.atlas, {200, 1})).passed);

  // S^2 / |zeta_1|^2 is strongly pseudoconvex off the zeta_2 axis and singular on it
  const auto bad = make_closed_form("singular", 2, 1, [](int, const CVec&, const CVec& zeta) {
    const double s = zeta.squaredNorm();
    return s * s / std::norm(zeta[0]);
  });
  const auto near = [](double a) {
    return std::vector<bundles::SamplePoint>{
        {0, CVec::Zero(1), (CVec(2) << cplx(a, 0.0), cplx(1.0, 0.0)).finished(), CVec::Unit(1, 0)}};
  };
  CHECK(strong_pseudoconvexity_check(*bad, near(0.05)).passed);
  CHECK_THROWS_AS(strong_pseudoconvexity_check(*bad, near(0.0)), Error);
}

TEST_CASE("convexity checks") {
  const ProbePlan plan{1000, 100, 3};
  const auto h = bundles::builtin_bundle("trivial_weighted(2,(1,2))");
  const CVec z = (CVec(1) << cplx(0.2, -0.1)).finished();
  CHECK(convexity_check(*h.metric, 0, z, plan).verdict == multilinear::ConvexityVerdict::kConvex);
  CHECK(strong_convexity_check(*h.metric, 0, z, plan).passed);

  const multilinear::GramMatrix g(multilinear::SymBasis(2, 2),
                                  CMat((CVec(3) << 0.5, 0.5, 1.0).finished().asDiagonal()));
  const auto ex1 = make_closed_form("example 1", 2, 0, [g](int, const CVec&, const CVec& zeta) {
    const double f = multilinear::kth_root_norm(g, zeta);
    return f * f;
  });
  const std::vector<CVec> at{CVec::Ones(2)};
  CHECK(convexity_check_at(*ex1, 0, CVec(0), at, 200, 3).verdict == multilinear::ConvexityVerdict::kNonConvex);

  const auto q = quartic();
  CHECK(convexity_check(*q, 0, CVec::Zero(1), plan).verdict == multilinear::ConvexityVerdict::kConvex);
  const std::vector<CVec> axes{CVec::Unit(2, 0), CVec::Unit(2, 1)};
  const auto sc = strong_convexity_check(*q, 0, CVec::Zero(1), axes);
  CHECK(!sc.passed);
  CHECK(std::abs(sc.min_normalized_eigenvalue) < 1e-4);

  const GramFieldFn id = [](int, const CVec&) { return kIdentity2; };
  const auto lifted = add_hermitian(q, id, 0.1);
  CHECK(strong_convexity_check(*lifted, 0, CVec::Zero(1), axes).passed);
}

TEST_CASE("add_hermitian") {
  const auto h = bundles::builtin_bundle("trivial_weighted(2,(1,2))");
  const GramFieldFn id = [](int, const CVec&) { return kIdentity2; };
  const CVec z = (CVec(1) << cplx(0.4, 0.1)).finished();
  const auto r = add_hermitian(h.metric, id, 1.0);
  CHECK(r->is_hermitian());
  CHECK((*r->hermitian_gram(0, z) - *h.metric->hermitian_gram(0, z) - kIdentity2).norm() < 1e-14);
  CHECK(add_hermitian(h.metric, id, 0.0) == h.metric);
}

TEST_CASE("dual norms") {
  const auto e = make_hermitian("euclidean", 2, 0, [](int, const CVec&) { return kIdentity2; });
  const CVec xi = (CVec(2) << cplx(0.6, -0.2), cplx(1.1, 0.4)).finished();
  CHECK(dual_finsler(*e, 0, CVec(0))(xi) == doctest::Approx(xi.norm()).epsilon(1e-7));
  const auto forced = make_dual(e, true);
  CHECK(std::sqrt(forced->G(0, CVec(0), xi)) == doctest::Approx(xi.norm()).epsilon(1e-7));

  // l4 norm: dual is the l^{4/3} norm
  CHECK(dual_finsler(*quartic(), 0, CVec::Zero(1))(CVec::Ones(2)) == doctest::Approx(std::pow(2.0, 0.75)).epsilon(1e-7));
}

TEST_CASE("hG_weight and projective charts") {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const CVec z = (CVec(1) << cplx(0.3, -0.6)).finished();
  const CVec zeta = (CVec(2) << cplx(0.5, 0.5), cplx(-1.5, 0.2)).finished();
  const ProjChartPoint p = proj_point(0, z, zeta);
  CHECK(p.pivot == 1);
  CHECK(std::abs(p.w[0] - zeta[0] / zeta[1]) < 1e-15);
  CHECK(hG_weight(*b.metric, p) == doctest::Approx(b.metric->G(0, z, zeta) / std::norm(zeta[1])));
  CHECK(proj_point(0, z, CVec::Ones(2)).pivot == 1);
  CHECK((lift(p.w, p.pivot) - zeta / zeta[1]).norm() < 1e-15);
}
