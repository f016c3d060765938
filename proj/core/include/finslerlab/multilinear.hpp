#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finslerlab/types.hpp"

// Symmetric powers of a single complex vector space: monomial bases, Gram
// matrices, k-th-root norms and sampling-based convexity probes.
namespace finslerlab::multilinear {

/// Exponent vector alpha = (alpha_1, ..., alpha_r) of the monomial e^alpha.
struct MultiIndex {
  std::vector<int> exponents;

  int degree() const;
  std::size_t rank() const { return exponents.size(); }
  /// Number of nonzero exponents.
  int support() const;
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

std::string to_string(const MultiIndex& alpha);

/// binomial(k + r - 1, r - 1); throws DomainError on r < 1, k < 1 or overflow of size_t.
std::size_t sym_dim(int r, int k);

/// multinomial(k; alpha) = k! / (alpha_1! ... alpha_r!).
double multinomial(const MultiIndex& alpha);

/// Ordered monomial basis of S^k V for dim V = r.
///
/// Ordering: pure powers first, then by growing support size; within one support
/// size, lexicographically descending. For r = 2, k = 2 this is (e1^2, e2^2, e1 e2),
/// for r = 3, k = 2 it is (e1^2, e2^2, e3^2, e1e2, e1e3, e2e3).
class SymBasis {
 public:
  SymBasis(int rank, int degree);

  int rank() const { return rank_; }
  int degree() const { return degree_; }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  std::optional<std::size_t> index_of(const MultiIndex& alpha) const;

  /// Monomials zeta^alpha for every basis element, in basis order.
  CVec monomials(const CVec& zeta) const;

  friend bool operator==(const SymBasis& a, const SymBasis& b) {
    return a.rank_ == b.rank_ && a.degree_ == b.degree_;
  }

 private:
  int rank_;
  int degree_;
  std::vector<MultiIndex> indices_;
};

/// Coordinates of v^k in the monomial basis: multinomial(k; alpha) * prod v_i^alpha_i.
CVec sym_power_coords(const CVec& v, const SymBasis& basis);

inline constexpr double kPdTolerance = 1e-10;
inline constexpr double kEigTolerance = 1e-9;
inline constexpr double kHermitianTolerance = 1e-9;

/// Hermitian matrix of an inner product on S^k V in a SymBasis.
///
/// The stored matrix is exactly Hermitian: inputs within kHermitianTolerance
/// (relative) are symmetrized, larger asymmetry throws. The sesquilinear pairing
/// is <xi, eta> = eta^* H xi.
class GramMatrix {
 public:
  GramMatrix(SymBasis basis, const CMat& entries);

  const SymBasis& basis() const { return basis_; }
  const CMat& matrix() const { return entries_; }
  std::size_t dim() const { return basis_.size(); }
  double min_eigenvalue() const { return min_eig_; }
  double max_eigenvalue() const { return max_eig_; }
  /// min eigenvalue > kPdTolerance * max(1, |max eigenvalue|).
  bool positive_definite() const;

 private:
  SymBasis basis_;
  CMat entries_;
  double min_eig_ = 0.0;
  double max_eig_ = 0.0;
};

/// eta^* H xi.
cplx gram_eval(const GramMatrix& gram, const CVec& xi, const CVec& eta);

/// H(v^k, v^k)^(1/2k); throws DomainError if H is not positive definite.
double kth_root_norm(const GramMatrix& gram, const CVec& v);

/// Exact real Hessian of v -> gram_eval(H, v^k, v^k) in the [x..., y...] layout, from
/// Wirtinger derivatives of the monomial coordinates.
RMat power_form_hessian(const GramMatrix& gram, const CVec& v);

/// Gram matrix of the dual inner product on the dual monomial basis (matrix inverse).
GramMatrix dual_gram(const GramMatrix& gram);

/// Central finite-difference Hessian, symmetrized. Default step 1e-4 * (1 + |x|).
RMat real_hessian(const RealScalarFn& f, const RVec& x, std::optional<double> step = std::nullopt);

/// Smallest eigenvalue of a Hermitian (or real symmetric) matrix; throws DomainError
/// when the asymmetry exceeds `hermitian_tol` relative to the matrix scale.
double min_eig_hermitian(const CMat& m, double hermitian_tol = kHermitianTolerance);
double min_eig_hermitian(const RMat& m, double hermitian_tol = kHermitianTolerance);

enum class ConvexityVerdict { kConvex, kNonConvex, kInconclusive };
const char* to_string(ConvexityVerdict v);

struct HessianWitness {
  CVec point;
  double min_eigenvalue = 0.0;
  double threshold = 0.0;
  RMat hessian;  // real Hessian in the [x..., y...] layout
};

struct TriangleWitness {
  CVec u;
  CVec v;
  double lhs = 0.0;  // norm(u + v)
  double rhs = 0.0;  // norm(u) + norm(v)
};

struct ConvexityTolerances {
  double triangle_rel = 1e-9;  // slack: triangle_rel * (norm(u) + norm(v))
  double hessian_rel = 1e-7;   // Hessian eigenvalue floor relative to the Hessian's spectral scale
  double homogeneity_rel = 1e-9;
};

struct ConvexityReport {
  ConvexityVerdict verdict = ConvexityVerdict::kInconclusive;
  std::size_t triangle_probes = 0;
  std::size_t hessian_probes = 0;
  std::vector<TriangleWitness> triangle_violations;
  std::vector<HessianWitness> hessian_violations;
  /// Smallest normalized Hessian eigenvalue seen over all probes (min eig / spectral scale).
  double worst_normalized_eigenvalue = 0.0;
  ConvexityTolerances tolerances;
  std::string note;
};

using VectorPair = std::pair<CVec, CVec>;

/// Sampling certificate for convexity of a 1-homogeneous norm on C^r.
///
/// Verdict is kNonConvex iff some pair violates the triangle inequality beyond
/// tolerance or some real Hessian (probed in the [x..., y...] layout) has an
/// eigenvalue below -hessian_rel * scale. Witnesses are kept in input order.
/// Throws DomainError if `norm` fails a homogeneity spot-check.
ConvexityReport convexity_probe(const ComplexScalarFn& norm, std::span<const VectorPair> pairs,
                                std::span<const CVec> hessian_points,
                                const ConvexityTolerances& tol = {});

/// Real Hessian of a fiber norm at a nonzero point, fourth-order differences with
/// step 1e-3 * |v| (used by convexity certificates).
RMat norm_hessian(const ComplexScalarFn& norm, const CVec& v);

}  // namespace finslerlab::multilinear
