#include "finslerlab/multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "finslerlab/errors.hpp"
#include "finslerlab/numdiff.hpp"

namespace finslerlab::multilinear {

int MultiIndex::degree() const {
  int k = 0;
  for (int a : exponents) k += a;
  return k;
}

int MultiIndex::support() const {
  return static_cast<int>(std::count_if(exponents.begin(), exponents.end(), [](int a) { return a != 0; }));
}

std::string to_string(const MultiIndex& alpha) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < alpha.exponents.size(); ++i) os << (i ? "," : "") << alpha.exponents[i];
  os << ")";
  return os.str();
}

std::size_t sym_dim(int r, int k) {
  if (r < 1 || k < 1) throw DomainError("sym_dim requires r >= 1 and k >= 1");
  // binomial(k + r - 1, r - 1) by the multiplicative formula; each partial product is
  // itself a binomial coefficient, so the division is exact.
  const std::size_t n = static_cast<std::size_t>(k) + static_cast<std::size_t>(r) - 1;
  const std::size_t m = static_cast<std::size_t>(std::min(r - 1, k));
  std::size_t result = 1;
  for (std::size_t i = 1; i <= m; ++i) {
    const std::size_t factor = n - m + i;
    if (result > std::numeric_limits<std::size_t>::max() / factor) {
      throw DomainError("sym_dim overflow for r=" + std::to_string(r) + ", k=" + std::to_string(k));
    }
    result = result * factor / i;
  }
  return result;
}

double multinomial(const MultiIndex& alpha) {
  double value = std::lgamma(alpha.degree() + 1.0);
  for (int a : alpha.exponents) value -= std::lgamma(a + 1.0);
  return std::round(std::exp(value));
}

namespace {

void compositions(int remaining, std::size_t slot, std::vector<int>& current, std::vector<MultiIndex>& out) {
  if (slot + 1 == current.size()) {
    current[slot] = remaining;
    out.push_back(MultiIndex{current});
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    current[slot] = a;
    compositions(remaining - a, slot + 1, current, out);
  }
}

}  // namespace

SymBasis::SymBasis(int rank, int degree) : rank_(rank), degree_(degree) {
  const std::size_t expected = sym_dim(rank, degree);
  std::vector<int> current(static_cast<std::size_t>(rank), 0);
  compositions(degree, 0, current, indices_);
  std::stable_sort(indices_.begin(), indices_.end(), [](const MultiIndex& a, const MultiIndex& b) {
    if (a.support() != b.support()) return a.support() < b.support();
    return a.exponents > b.exponents;
  });
  if (indices_.size() != expected) throw DomainError("SymBasis enumeration does not match sym_dim");
}

std::optional<std::size_t> SymBasis::index_of(const MultiIndex& alpha) const {
  const auto it = std::find(indices_.begin(), indices_.end(), alpha);
  if (it == indices_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - indices_.begin());
}

CVec SymBasis::monomials(const CVec& zeta) const {
  if (zeta.size() != rank_) throw DomainError("monomials: vector length does not match basis rank");
  // powers[i][a] = zeta_i^a
  std::vector<std::vector<cplx>> powers(static_cast<std::size_t>(rank_));
  for (int i = 0; i < rank_; ++i) {
    auto& p = powers[static_cast<std::size_t>(i)];
    p.resize(static_cast<std::size_t>(degree_) + 1);
    p[0] = 1.0;
    for (int a = 1; a <= degree_; ++a) p[static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(a - 1)] * zeta[i];
  }
  CVec out(static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t b = 0; b < indices_.size(); ++b) {
    cplx m = 1.0;
    for (int i = 0; i < rank_; ++i) {
      m *= powers[static_cast<std::size_t>(i)][static_cast<std::size_t>(indices_[b].exponents[static_cast<std::size_t>(i)])];
    }
    out[static_cast<Eigen::Index>(b)] = m;
  }
  return out;
}

CVec sym_power_coords(const CVec& v, const SymBasis& basis) {
  if (v.size() != basis.rank()) {
    throw DomainError("sym_power_coords: vector has length " + std::to_string(v.size()) +
                      " but basis rank is " + std::to_string(basis.rank()));
  }
  CVec coords = basis.monomials(v);
  for (std::size_t b = 0; b < basis.size(); ++b) coords[static_cast<Eigen::Index>(b)] *= multinomial(basis[b]);
  return coords;
}

GramMatrix::GramMatrix(SymBasis basis, const CMat& entries) : basis_(std::move(basis)) {
  const auto n = static_cast<Eigen::Index>(basis_.size());
  if (entries.rows() != n || entries.cols() != n) {
    throw DomainError("GramMatrix: matrix is " + std::to_string(entries.rows()) + "x" +
                      std::to_string(entries.cols()) + " but basis has " + std::to_string(n) + " elements");
  }
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  const double asym = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTolerance * scale) {
    throw DomainError("GramMatrix: input is not Hermitian (asymmetry " + std::to_string(asym) + ")");
  }
  entries_ = 0.5 * (entries + entries.adjoint());
  for (Eigen::Index i = 0; i < n; ++i) entries_(i, i) = entries_(i, i).real();
  Eigen::SelfAdjointEigenSolver<CMat> eig(entries_, Eigen::EigenvaluesOnly);
  min_eig_ = eig.eigenvalues().minCoeff();
  max_eig_ = eig.eigenvalues().maxCoeff();
}

bool GramMatrix::positive_definite() const {
  return min_eig_ > kPdTolerance * std::max(1.0, std::abs(max_eig_));
}

cplx gram_eval(const GramMatrix& gram, const CVec& xi, const CVec& eta) {
  const auto n = static_cast<Eigen::Index>(gram.dim());
  if (xi.size() != n || eta.size() != n) {
    throw DomainError("gram_eval: coefficient vectors must have length " + std::to_string(n));
  }
  return eta.dot(gram.matrix() * xi);  // Eigen's dot conjugates the first argument
}

double kth_root_norm(const GramMatrix& gram, const CVec& v) {
  if (!gram.positive_definite()) throw DomainError("kth_root_norm: Gram matrix is not positive definite");
  const CVec coords = sym_power_coords(v, gram.basis());
  const double q = std::max(0.0, gram_eval(gram, coords, coords).real());
  return std::pow(q, 1.0 / (2.0 * gram.basis().degree()));
}

namespace {

cplx monomial_power(const CVec& v, const std::vector<int>& e) {
  cplx out(1.0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (int a = 0; a < e[i]; ++a) out *= v[static_cast<Eigen::Index>(i)];
  }
  return out;
}

}  // namespace

RMat power_form_hessian(const GramMatrix& gram, const CVec& v) {
  const SymBasis& basis = gram.basis();
  const int r = basis.rank();
  if (v.size() != r) throw DomainError("power_form_hessian: vector length does not match basis rank");
  const auto dim = static_cast<Eigen::Index>(basis.size());
  const CVec c = sym_power_coords(v, basis);
  // J(a, i) = d c_a / d v_i, T[i * r + j](a) = d^2 c_a / d v_i d v_j.
  CMat jac = CMat::Zero(dim, r);
  std::vector<CVec> second(static_cast<std::size_t>(r * r), CVec::Zero(dim));
  for (Eigen::Index a = 0; a < dim; ++a) {
    const auto& alpha = basis[static_cast<std::size_t>(a)];
    const double m = multinomial(alpha);
    for (int i = 0; i < r; ++i) {
      const int ai = alpha.exponents[static_cast<std::size_t>(i)];
      if (ai == 0) continue;
      auto e = alpha.exponents;
      --e[static_cast<std::size_t>(i)];
      jac(a, i) = m * ai * monomial_power(v, e);
      for (int j = 0; j < r; ++j) {
        const int aj = e[static_cast<std::size_t>(j)];
        if (aj == 0) continue;
        auto f = e;
        --f[static_cast<std::size_t>(j)];
        second[static_cast<std::size_t>(i * r + j)](a) = m * ai * aj * monomial_power(v, f);
      }
    }
  }
  const CMat& h = gram.matrix();
  const CMat b = jac.adjoint() * h * jac;  // d^2 q / d v-bar_i d v_j
  CMat a(r, r);                             // d^2 q / d v_i d v_j
  const CVec hc = h.adjoint() * c;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) a(i, j) = hc.dot(second[static_cast<std::size_t>(i * r + j)]);
  }
  RMat out(2 * r, 2 * r);
  const CMat sum = a + b;
  out.topLeftCorner(r, r) = 2.0 * sum.real();
  out.topRightCorner(r, r) = -2.0 * sum.imag();
  out.bottomLeftCorner(r, r) = out.topRightCorner(r, r).transpose();
  out.bottomRightCorner(r, r) = 2.0 * (b - a).real();
  return 0.5 * (out + out.transpose());
}

GramMatrix dual_gram(const GramMatrix& gram) {
  if (!(gram.min_eigenvalue() > kPdTolerance * std::max(1.0, std::abs(gram.max_eigenvalue())))) {
    throw DomainError("dual_gram: Gram matrix is singular or indefinite");
  }
  const CMat inv = gram.matrix().llt().solve(CMat::Identity(gram.matrix().rows(), gram.matrix().cols()));
  return GramMatrix(gram.basis(), inv);
}

RMat real_hessian(const RealScalarFn& f, const RVec& x, std::optional<double> step) {
  const double h = step.value_or(1e-4 * (1.0 + x.norm()));
  if (!(h > 0.0)) throw DomainError("real_hessian: step must be positive");
  return numdiff::hessian_central(f, x, RVec::Constant(x.size(), h));
}

double min_eig_hermitian(const CMat& m, double hermitian_tol) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("min_eig_hermitian: matrix must be square and nonempty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > hermitian_tol * scale) {
    throw DomainError("min_eig_hermitian: matrix is not Hermitian within tolerance");
  }
  const CMat sym = 0.5 * (m + m.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMat>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double min_eig_hermitian(const RMat& m, double hermitian_tol) {
  return min_eig_hermitian(CMat(m.cast<cplx>()), hermitian_tol);
}

const char* to_string(ConvexityVerdict v) {
  switch (v) {
    case ConvexityVerdict::kConvex: return "convex";
    case ConvexityVerdict::kNonConvex: return "non_convex";
    case ConvexityVerdict::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

RMat norm_hessian(const ComplexScalarFn& norm, const CVec& v) {
  const double scale = v.norm();
  if (!(scale > 0.0)) throw DomainError("norm_hessian: probe point must be nonzero");
  const RealScalarFn f = [&norm](const RVec& x) { return norm(to_complex(x)); };
  return numdiff::hessian_fourth_order(f, to_real(v), RVec::Constant(2 * v.size(), 1e-3 * scale));
}

namespace {

void check_homogeneity(const ComplexScalarFn& norm, const CVec& v, double tol) {
  const double base = norm(v);
  for (const cplx lambda : {cplx(2.0, 0.0), cplx(0.0, 0.5), cplx(-1.5, 0.7)}) {
    const double scaled = norm(lambda * v);
    const double expected = std::abs(lambda) * base;
    if (!std::isfinite(scaled) || std::abs(scaled - expected) > tol * std::max(expected, 1e-300)) {
      throw DomainError("convexity_probe: norm is not 1-homogeneous at " + numdiff::format_point(v) +
                        " (not a Finsler-norm candidate)");
    }
  }
}

}  // namespace

ConvexityReport convexity_probe(const ComplexScalarFn& norm, std::span<const VectorPair> pairs,
                                std::span<const CVec> hessian_points, const ConvexityTolerances& tol) {
  ConvexityReport report;
  report.tolerances = tol;
  if (!hessian_points.empty()) {
    check_homogeneity(norm, hessian_points.front(), tol.homogeneity_rel);
  } else if (!pairs.empty()) {
    check_homogeneity(norm, pairs.front().first, tol.homogeneity_rel);
  }

  for (const auto& [u, v] : pairs) {
    const double nu = norm(u);
    const double nv = norm(v);
    const double nuv = norm(u + v);
    ++report.triangle_probes;
    if (nuv > nu + nv + tol.triangle_rel * (nu + nv)) {
      report.triangle_violations.push_back(TriangleWitness{u, v, nuv, nu + nv});
    }
  }

  double worst = std::numeric_limits<double>::infinity();
  for (const CVec& p : hessian_points) {
    if (!(p.norm() > 0.0)) throw DomainError("convexity_probe: Hessian probe points must be nonzero");
    const RMat hess = norm_hessian(norm, p);
    const RVec eigs = Eigen::SelfAdjointEigenSolver<RMat>(hess, Eigen::EigenvaluesOnly).eigenvalues();
    const double scale = std::max(eigs.cwiseAbs().maxCoeff(), 1e-300);
    const double min_eig = eigs.minCoeff();
    ++report.hessian_probes;
    worst = std::min(worst, min_eig / scale);
    const double threshold = -tol.hessian_rel * scale;
    if (min_eig < threshold) report.hessian_violations.push_back(HessianWitness{p, min_eig, threshold, hess});
  }
  report.worst_normalized_eigenvalue = std::isfinite(worst) ? worst : 0.0;

  if (!report.triangle_violations.empty() || !report.hessian_violations.empty()) {
    report.verdict = ConvexityVerdict::kNonConvex;
  } else if (report.triangle_probes + report.hessian_probes > 0) {
    report.verdict = ConvexityVerdict::kConvex;
  } else {
    report.verdict = ConvexityVerdict::kInconclusive;
    report.note = "no probes supplied";
  }
  return report;
}

}  // namespace finslerlab::multilinear
