#include <cmath>

#include "doctest.h"
#include "finslerlab/errors.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/multilinear.hpp"

using namespace finslerlab;
using namespace finslerlab::multilinear;

namespace {

GramMatrix diag_gram(int r, int k, std::initializer_list<double> d) {
  RVec v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return GramMatrix(SymBasis(r, k), CMat(v.cast<cplx>().asDiagonal()));
}

GramMatrix example1() { return diag_gram(2, 2, {0.5, 0.5, 1.0}); }
GramMatrix example2() { return diag_gram(2, 2, {M_PI / 3, M_PI / 3, M_PI / 6}); }

std::vector<VectorPair> seeded_pairs(int r, std::size_t n, std::uint64_t seed) {
  const auto a = finsler::probe_vectors(r, n, seed);
  const auto b = finsler::probe_vectors(r, n, seed + 1);
  std::vector<VectorPair> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(a[i], b[i]);
  return out;
}

}  // namespace

TEST_CASE("sym_dim counts monomials") {
  CHECK(sym_dim(2, 2) == 3);
  CHECK(sym_dim(5, 1) == 5);
  CHECK(sym_dim(3, 3) == 10);
  CHECK_THROWS_AS(sym_dim(0, 2), DomainError);
  CHECK_THROWS_AS(sym_dim(2, 0), DomainError);
}

TEST_CASE("sym_dim agrees with brute-force enumeration") {
  for (int r = 1; r <= 4; ++r) {
    for (int k = 1; k <= 5; ++k) {
      std::size_t count = 0;
      std::vector<int> e(static_cast<std::size_t>(r), 0);
      // odometer over {0..k}^r
      while (true) {
        int s = 0;
        for (int x : e) s += x;
        if (s == k) ++count;
        std::size_t i = 0;
        while (i < e.size() && ++e[i] > k) e[i++] = 0;
        if (i == e.size()) break;
      }
      CHECK(sym_dim(r, k) == count);
      CHECK(SymBasis(r, k).size() == count);
    }
  }
}

TEST_CASE("basis order") {
  const SymBasis b(2, 2);
  CHECK(to_string(b[0]) == to_string(MultiIndex{{2, 0}}));
  CHECK(b[1] == MultiIndex{{0, 2}});
  CHECK(b[2] == MultiIndex{{1, 1}});
  const SymBasis c(3, 2);
  CHECK(c[3] == MultiIndex{{1, 1, 0}});
  CHECK(c[5] == MultiIndex{{0, 1, 1}});
  CHECK(c.index_of(MultiIndex{{1, 0, 1}}) == 4u);
}

TEST_CASE("sym_power_coords") {
  const CVec v = (CVec(2) << cplx(1.5, -0.5), cplx(0.25, 2.0)).finished();
  const CVec c = sym_power_coords(v, SymBasis(2, 2));
  CHECK(std::abs(c[0] - v[0] * v[0]) < 1e-14);
  CHECK(std::abs(c[1] - v[1] * v[1]) < 1e-14);
  CHECK(std::abs(c[2] - 2.0 * v[0] * v[1]) < 1e-14);

  for (int k = 1; k <= 4; ++k) {
    const SymBasis b(3, k);
    const CVec e = sym_power_coords(CVec::Unit(3, 0), b);
    CHECK(std::abs(e[0] - 1.0) < 1e-15);
    CHECK(e.tail(e.size() - 1).norm() == 0.0);
  }

  const CVec ones = sym_power_coords(CVec::Ones(3), SymBasis(3, 2));
  const double want[] = {1, 1, 1, 2, 2, 2};
  for (int i = 0; i < 6; ++i) CHECK(std::abs(ones[i] - want[i]) < 1e-15);
}

TEST_CASE("gram_eval") {
  const CVec c = sym_power_coords(CVec::Ones(2), SymBasis(2, 2));
  CHECK(std::abs(gram_eval(example1(), c, c) - 5.0) < 1e-14);
  CHECK(std::abs(gram_eval(example1(), CVec::Zero(3), c)) == 0.0);
  const CVec e = sym_power_coords(CVec::Unit(2, 0), SymBasis(2, 2));
  CHECK(std::abs(gram_eval(example2(), e, e) - M_PI / 3) < 1e-14);
}

TEST_CASE("GramMatrix rejects non-Hermitian input") {
  CMat m = CMat::Identity(3, 3);
  m(0, 1) = 0.5;
  CHECK_THROWS_AS(GramMatrix(SymBasis(2, 2), m), DomainError);
  CHECK_THROWS_AS(GramMatrix(SymBasis(2, 2), CMat::Identity(2, 2)), DomainError);
}

TEST_CASE("kth_root_norm") {
  CHECK(kth_root_norm(example2(), CVec::Unit(2, 0)) == doctest::Approx(std::pow(M_PI / 3, 0.25)).epsilon(1e-14));
  CHECK(kth_root_norm(example2(), CVec::Zero(2)) == 0.0);
  CHECK(kth_root_norm(example2(), CVec::Ones(2)) == doctest::Approx(std::pow(4 * M_PI / 3, 0.25)).epsilon(1e-14));
  const CVec v = (CVec(2) << cplx(0.3, 1.1), cplx(-2.0, 0.4)).finished();
  const cplx lam(1.2, -0.7);
  CHECK(kth_root_norm(example2(), lam * v) == doctest::Approx(std::abs(lam) * kth_root_norm(example2(), v)));
  CHECK_THROWS_AS(kth_root_norm(diag_gram(2, 2, {1.0, -1.0, 1.0}), v), DomainError);
}

TEST_CASE("dual_gram") {
  const CMat d = dual_gram(example2()).matrix();
  const double want[] = {3 / M_PI, 3 / M_PI, 6 / M_PI};
  for (int i = 0; i < 3; ++i) CHECK(std::abs(d(i, i) - want[i]) < 1e-12);
  CHECK((d - CMat(CVec(d.diagonal()).asDiagonal())).norm() == 0.0);
  CHECK((dual_gram(diag_gram(2, 2, {1, 1, 1})).matrix() - CMat::Identity(3, 3)).norm() < 1e-15);
  const CMat e = dual_gram(diag_gram(2, 2, {2, 2, 1})).matrix();
  CHECK((e - CMat(example1().matrix())).norm() < 1e-15);
}

TEST_CASE("real_hessian") {
  const GramMatrix g = example1();
  const RealScalarFn q = [&g](const RVec& x) {
    const CVec c = sym_power_coords(x.cast<cplx>(), g.basis());
    return gram_eval(g, c, c).real();
  };
  const RMat h = real_hessian(q, RVec::Ones(2));
  CHECK(h(0, 0) == doctest::Approx(14).epsilon(1e-6));
  CHECK(h(0, 1) == doctest::Approx(16).epsilon(1e-6));
  CHECK(h(1, 1) == doctest::Approx(14).epsilon(1e-6));

  const RMat z = real_hessian([](const RVec&) { return 3.0; }, RVec::Ones(3));
  CHECK(z.norm() == 0.0);
  const RMat s = real_hessian([](const RVec& x) { return x.squaredNorm(); }, (RVec(2) << 0.3, -4.0).finished());
  CHECK((s - 2 * RMat::Identity(2, 2)).norm() < 1e-6);
}

TEST_CASE("power_form_hessian is exact and matches finite differences") {
  const GramMatrix g = example1();
  const RMat h = power_form_hessian(g, CVec::Ones(2));
  CHECK(h(0, 0) == 14.0);
  CHECK(h(0, 1) == 16.0);
  CHECK(h(1, 1) == 14.0);
  const RealScalarFn q = [&g](const RVec& x) {
    const CVec c = sym_power_coords(to_complex(x), g.basis());
    return gram_eval(g, c, c).real();
  };
  const CVec v = (CVec(2) << cplx(0.4, -0.3), cplx(1.2, 0.8)).finished();
  const RMat fd = real_hessian(q, to_real(v));
  CHECK((power_form_hessian(g, v) - fd).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("min_eig_hermitian") {
  RMat m(2, 2);
  m << 14, 16, 16, 14;
  CHECK(min_eig_hermitian(m) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(min_eig_hermitian(CMat(CMat::Identity(4, 4))) == doctest::Approx(1.0));
  CHECK(min_eig_hermitian(CMat(example2().matrix())) == doctest::Approx(M_PI / 6));
  RMat bad(2, 2);
  bad << 1, 2, 0, 1;
  CHECK_THROWS_AS(min_eig_hermitian(bad), DomainError);
}

TEST_CASE("convexity_probe") {
  const auto pairs = seeded_pairs(2, 1000, 11);
  const auto points = finsler::probe_vectors(2, 100, 12);

  SUBCASE("Example 2 norm is convex") {
    const GramMatrix g = example2();
    const auto r = convexity_probe([&g](const CVec& v) { return kth_root_norm(g, v); }, pairs, points);
    CHECK(r.verdict == ConvexityVerdict::kConvex);
    CHECK(r.triangle_probes == 1000);
    CHECK(r.hessian_probes == 100);
    CHECK(r.triangle_violations.empty());
  }
  SUBCASE("Example 1 norm fails at (1,1)") {
    const GramMatrix g = example1();
    const std::vector<CVec> at{CVec::Ones(2)};
    const auto r = convexity_probe([&g](const CVec& v) { return kth_root_norm(g, v); }, pairs, at);
    CHECK(r.verdict == ConvexityVerdict::kNonConvex);
    REQUIRE(!r.hessian_violations.empty());
    CHECK(r.hessian_violations.front().min_eigenvalue < 0);
  }
  SUBCASE("Euclidean norm is convex") {
    const auto r = convexity_probe([](const CVec& v) { return v.norm(); }, pairs, points);
    CHECK(r.verdict == ConvexityVerdict::kConvex);
  }
  SUBCASE("non-homogeneous input is rejected") {
    CHECK_THROWS_AS(convexity_probe([](const CVec& v) { return v.squaredNorm(); }, pairs, points), DomainError);
  }
}
