#include <cmath>
#include <limits>

#include "finslerlab/curvature.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/numdiff.hpp"
#include "finslerlab/random.hpp"

namespace finslerlab::curvature {

namespace {

// 1-D Levi form d^2/dt dt-bar = (f_xx + f_yy) / 4 with five-point stencils.
double levi_1d(const std::function<double(cplx)>& f, double h) {
  const double f0 = f(0.0);
  const double c[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
  double acc = c[2] * f0 * 2.0;
  for (int k : {-2, -1, 1, 2}) {
    const double w = c[k + 2];
    acc += w * (f(cplx(k * h, 0.0)) + f(cplx(0.0, k * h)));
  }
  return acc / (12.0 * h * h) / 4.0;
}

CMat pseudo_inverse(const CMat& a, double rel) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (a + a.adjoint()));
  const RVec& d = eig.eigenvalues();
  const double cut = rel * std::max(d.cwiseAbs().maxCoeff(), 1e-300);
  RVec inv(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) inv[i] = std::abs(d[i]) > cut ? 1.0 / d[i] : 0.0;
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().adjoint();
}

void check_jet_inputs(const finsler::FinslerMetric& metric, const CVec& z0, const CVec& zeta, const CVec& v) {
  if (z0.size() == 0) throw DomainError("kobayashi_jet: base is a point, there are no base directions");
  if (z0.size() != metric.base_dim() || v.size() != z0.size()) throw DomainError("kobayashi_jet: base dimension mismatch");
  if (zeta.size() != metric.rank()) throw DomainError("kobayashi_jet: fiber vector has wrong length");
  if (!(zeta.norm() > 0.0)) throw DomainError("kobayashi_jet: zeta must be nonzero");
  if (!(v.norm() > 0.0)) throw DomainError("kobayashi_jet: direction must be nonzero");
}

}  // namespace

double jet_objective(const finsler::FinslerMetric& metric, int chart, const CVec& z0, const CVec& zeta, const CVec& v,
                     const CVec& c) {
  const double h = 1e-3 / (1.0 + c.norm() / zeta.norm()) / std::max(1.0, v.norm());
  const auto f = [&](cplx t) {
    const double g = metric.G(chart, CVec(z0 + t * v), CVec(zeta + t * c));
    if (!(g > 0.0)) {
      throw EvaluationError("jet objective: G not positive at z=" + numdiff::format_point(CVec(z0 + t * v)));
    }
    return std::log(g);
  };
  return levi_1d(f, h);
}

KobayashiJet kobayashi_jet(const finsler::FinslerMetric& metric, int chart, const CVec& z0, const CVec& zeta,
                           const CVec& v, const JetOptions& options) {
  check_jet_inputs(metric, z0, zeta, v);
  const Eigen::Index r = zeta.size();
  const CVec unit = zeta / zeta.norm();
  KobayashiJet out;

  // Normal equations: L(c) = [1; c]^* M [1; c] with M the Levi form of
  // (t, s) -> log G(z0 + t v, unit + s); minimizer solves A c = -b.
  const ComplexScalarFn psi = [&](const CVec& u) {
    const double g = metric.G(chart, CVec(z0 + u[0] * v), CVec(unit + u.tail(r)));
    if (!(g > 0.0)) throw EvaluationError("kobayashi_jet: G not positive near z=" + numdiff::format_point(z0));
    return std::log(g);
  };
  RVec steps = RVec::Constant(r + 1, 1e-3);
  steps[0] = 1e-3 / std::max(1.0, v.norm());
  out.levi = numdiff::complex_hessian(psi, CVec::Zero(r + 1), steps);
  const double d = out.levi(0, 0).real();
  const CVec b = out.levi.col(0).tail(r);
  const CMat A = out.levi.bottomRightCorner(r, r);
  const CMat Ainv = pseudo_inverse(A, 1e-8);
  out.c_star = -Ainv * b;
  out.value = -(d - b.dot(Ainv * b).real());

  // Coordinate descent with exact parabolic steps on the real coordinates of c.
  Rng rng(options.seed);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < options.descent_starts; ++s) {
    CVec c = s == 0 ? CVec(CVec::Zero(r)) : CVec(rng.complex_normal(r));
    double lc = jet_objective(metric, chart, z0, unit, v, c);
    for (int sweep = 0; sweep < options.descent_sweeps; ++sweep) {
      const double before = lc;
      for (Eigen::Index k = 0; k < 2 * r; ++k) {
        const cplx e = k < r ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
        const Eigen::Index idx = k % r;
        const double delta = 0.5;
        CVec cp = c;
        cp[idx] += delta * e;
        CVec cm = c;
        cm[idx] -= delta * e;
        const double lp = jet_objective(metric, chart, z0, unit, v, cp);
        const double lm = jet_objective(metric, chart, z0, unit, v, cm);
        const double curv = lp + lm - 2.0 * lc;
        if (!(curv > 1e-12 * (1.0 + std::abs(lc)))) continue;
        const double offset = delta * (lm - lp) / (2.0 * curv);
        CVec cn = c;
        cn[idx] += offset * e;
        const double ln = jet_objective(metric, chart, z0, unit, v, cn);
        if (ln < lc) {
          c = cn;
          lc = ln;
        }
      }
      if (before - lc <= 1e-13 * (1.0 + std::abs(lc))) break;
    }
    best = std::min(best, lc);
  }
  out.descent_value = -best;
  out.disagreement = std::abs(out.value - out.descent_value) / std::max(1.0, std::abs(out.value));
  if (out.disagreement > options.hard_disagreement) {
    throw NumericalError("jet minimization unstable at z=" + numdiff::format_point(z0) + " zeta=" +
                         numdiff::format_point(zeta) + ": normal equations " + std::to_string(out.value) +
                         " vs coordinate descent " + std::to_string(out.descent_value));
  }
  out.flagged = out.disagreement > options.agreement;
  return out;
}

double hermitian_curvature_ratio(const finsler::GramFieldFn& gram, int chart, const CVec& z0, const CVec& zeta,
                                 const CVec& v) {
  const double h = 1e-3;
  const CMat H0 = gram(chart, z0);
  const auto at = [&](cplx t) { return CMat(gram(chart, CVec(z0 + t * v))); };
  const double w1[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
  const double w2[5] = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0};
  const int off[4] = {-2, -1, 1, 2};
  CMat dx = CMat::Zero(H0.rows(), H0.cols());
  CMat dy = dx;
  CMat lap = 2.0 * w2[2] * H0;
  for (int i = 0; i < 4; ++i) {
    const CMat hx = at(cplx(off[i] * h, 0.0));
    const CMat hy = at(cplx(0.0, off[i] * h));
    dx += w1[i] * hx;
    dy += w1[i] * hy;
    lap += w2[off[i] + 2] * (hx + hy);
  }
  const CMat Ht = 0.5 * (dx - cplx(0.0, 1.0) * dy) / h;  // d/dt
  const CMat Htt = 0.25 * lap / (h * h);                  // d^2/dt dt-bar
  const double f = zeta.dot(H0 * zeta).real();
  const cplx alpha = zeta.dot(Ht * zeta);
  const double beta = zeta.dot(Htt * zeta).real();
  const CVec a = H0 * zeta;
  const CVec q = Ht * zeta - (alpha / f) * a;
  const CMat B = H0 - a * a.adjoint() / f;
  const double min_fL = beta - std::norm(alpha) / f - q.dot(pseudo_inverse(B, 1e-10) * q).real();
  return -min_fL / f;
}

namespace {

std::vector<CVec> directions_for(const bundles::SamplePoint& s, int n) {
  std::vector<CVec> dirs;
  for (int a = 0; a < n; ++a) dirs.push_back(CVec::Unit(n, a));
  if (s.direction.size() == n) dirs.push_back(s.direction);
  return dirs;
}

SignVerdict classify(double lo, double hi, double band) {
  if (lo > band) return SignVerdict::kPositive;
  if (hi < -band) return SignVerdict::kNegative;
  if (lo >= -band && hi <= band) return SignVerdict::kFlat;
  if (lo < -band && hi > band) return SignVerdict::kIndefinite;
  return SignVerdict::kInconclusive;
}

}  // namespace

KobayashiSignReport kobayashi_sign(const finsler::FinslerMetric& metric, const bundles::BundleAtlas& atlas,
                                   std::span<const bundles::SamplePoint> samples, double band,
                                   const JetOptions& options) {
  const int n = atlas.base_dim();
  if (n == 0) throw DomainError("kobayashi_sign: base is a point, there are no base directions");
  KobayashiSignReport report;
  report.band = band;
  report.min_value = std::numeric_limits<double>::infinity();
  report.max_value = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    for (const CVec& v : directions_for(s, n)) {
      const KobayashiJet jet = kobayashi_jet(metric, s.chart, s.z, s.zeta, v, options);
      const double k = jet.value / v.squaredNorm();
      if (jet.flagged) ++report.flagged;
      ++report.evaluations;
      if (k < report.min_value) {
        report.min_value = k;
        report.min_witness = SignWitness{s, v, k};
      }
      if (k > report.max_value) {
        report.max_value = k;
        report.max_witness = SignWitness{s, v, k};
      }
    }
  }
  if (report.evaluations == 0) {
    report.min_value = report.max_value = 0.0;
    return report;
  }
  report.verdict = classify(report.min_value, report.max_value, band);

  // Cross-check on the first sample: K_v equals the Schur complement of
  // Theta(h_G) on the P(E)-chart along v, and the signature follows the sign.
  const auto& s0 = samples.front();
  const CVec v0 = directions_for(s0, n).back();
  const CMat theta = projective_curvature(metric, s0.chart, s0.z, s0.zeta).matrix;
  const int r = atlas.rank();
  CMat schur = theta.topLeftCorner(n, n);
  if (r > 1) {
    const CMat ff = theta.bottomRightCorner(r - 1, r - 1);
    schur -= theta.topRightCorner(n, r - 1) * ff.ldlt().solve(CMat(theta.bottomLeftCorner(r - 1, n)));
  }
  report.cross_check_schur = v0.dot(schur * v0).real() / v0.squaredNorm();
  report.cross_check_jet = kobayashi_jet(metric, s0.chart, s0.z, s0.zeta, v0, options).value / v0.squaredNorm();
  report.cross_check_signature = signature_of(theta, band);
  report.cross_check_done = true;
  const double gap = std::abs(report.cross_check_schur - report.cross_check_jet) /
                     std::max(1.0, std::abs(report.cross_check_jet));
  if (gap > options.agreement) {
    throw NumericalError("kobayashi cross-check disagreement: jet " + std::to_string(report.cross_check_jet) +
                         " vs Theta(h_G) Schur complement " + std::to_string(report.cross_check_schur));
  }
  const Signature& sig = report.cross_check_signature;
  if (report.verdict == SignVerdict::kPositive && !sig.matches(n, r - 1, 0)) {
    throw NumericalError("kobayashi cross-check: positive verdict but Theta(h_G) has signature " + to_string(sig));
  }
  if (report.verdict == SignVerdict::kNegative && !sig.matches(0, n + r - 1, 0)) {
    throw NumericalError("kobayashi cross-check: negative verdict but Theta(h_G) has signature " + to_string(sig));
  }
  return report;
}

GriffithsReport griffiths_sign(const finsler::GramFieldFn& gram, const bundles::BundleAtlas& atlas,
                               std::span<const bundles::SamplePoint> samples, double band, const JetOptions& options) {
  const int n = atlas.base_dim();
  if (n == 0) throw DomainError("griffiths_sign: base is a point, there are no base directions");
  const finsler::HermitianMetric metric("Gram field", atlas.rank(), n, gram);
  GriffithsReport report;
  report.band = band;
  report.min_margin = std::numeric_limits<double>::infinity();
  report.max_margin = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const CMat h = gram(s.chart, s.z);
    if (!(Eigen::SelfAdjointEigenSolver<CMat>(h, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() > 0.0)) {
      throw DomainError("griffiths_sign: Gram field is not positive definite at z=" + numdiff::format_point(s.z));
    }
    for (const CVec& v : directions_for(s, n)) {
      const double jet = -kobayashi_jet(metric, s.chart, s.z, s.zeta, v, options).value / v.squaredNorm();
      const double oracle = -hermitian_curvature_ratio(gram, s.chart, s.z, s.zeta, v) / v.squaredNorm();
      const double gap = std::abs(jet - oracle) / std::max(1.0, std::abs(oracle));
      report.worst_oracle_gap = std::max(report.worst_oracle_gap, gap);
      if (gap > options.agreement) {
        throw NumericalError("griffiths oracle disagreement at z=" + numdiff::format_point(s.z) + ": jet " +
                             std::to_string(jet) + " vs Chern curvature " + std::to_string(oracle));
      }
      ++report.evaluations;
      if (jet < report.min_margin) {
        report.min_margin = jet;
        report.min_witness = SignWitness{s, v, jet};
      }
      if (jet > report.max_margin) {
        report.max_margin = jet;
        report.max_witness = SignWitness{s, v, jet};
      }
    }
  }
  if (report.evaluations == 0) {
    report.min_margin = report.max_margin = 0.0;
    return report;
  }
  // Margins are -K, so a positive margin everywhere is Griffiths negativity.
  const SignVerdict k = classify(-report.max_margin, -report.min_margin, band);
  report.verdict = k;
  return report;
}

}  // namespace finslerlab::curvature
