#include "finslerlab/finsler.hpp"

#include <cmath>
#include <limits>

#include "finslerlab/errors.hpp"
#include "finslerlab/numdiff.hpp"
#include "finslerlab/random.hpp"

namespace finslerlab::finsler {

namespace {

double jet_step(const CVec& zeta) { return 1e-3 * std::max(zeta.norm(), 1e-300); }

cplx euler_sum(const CVec& gradient, const CVec& zeta) { return (gradient.array() * zeta.array()).sum(); }

}  // namespace

FiberJet2 compute_jet(const FinslerMetric& metric, int chart, const CVec& z, const CVec& zeta) {
  if (zeta.size() != metric.rank()) throw DomainError("fiber_jet: fiber vector has wrong length");
  if (!(zeta.norm() > 0.0)) throw DomainError("fiber_jet: zeta must be nonzero");
  FiberJet2 jet;
  jet.chart = chart;
  jet.z = z;
  jet.zeta = zeta;
  if (auto h = metric.hermitian_gram(chart, z)) {
    jet.G = zeta.dot(*h * zeta).real();
    jet.hessian = 0.5 * (*h + h->adjoint());
    jet.gradient = h->transpose() * zeta.conjugate();
  } else {
    const ComplexScalarFn fiber = metric.fiber_G(chart, z);
    const RealScalarFn f = [&fiber](const RVec& x) { return fiber(to_complex(x)); };
    const Eigen::Index r = zeta.size();
    const RVec x = to_real(zeta);
    const RVec steps = RVec::Constant(2 * r, jet_step(zeta));
    jet.G = numdiff::checked_eval(f, x);
    const RVec g = numdiff::gradient_fourth_order(f, x, steps);
    jet.gradient = CVec(r);
    for (Eigen::Index i = 0; i < r; ++i) jet.gradient[i] = 0.5 * cplx(g[i], -g[r + i]);
    jet.hessian = numdiff::complex_hessian_from_real(numdiff::hessian_fourth_order(f, x, steps));
  }
  const double scale = std::max(std::abs(jet.G), 1e-300);
  jet.euler_gradient_residual = std::abs(euler_sum(jet.gradient, zeta) - jet.G) / scale;
  jet.euler_hessian_residual = std::abs(zeta.dot(jet.hessian * zeta) - jet.G) / scale;
  return jet;
}

FiberJet2 fiber_jet(const FinslerMetric& metric, int chart, const CVec& z, const CVec& zeta) {
  FiberJet2 jet = compute_jet(metric, chart, z, zeta);
  const double worst = std::max(jet.euler_gradient_residual, jet.euler_hessian_residual);
  if (worst > 100.0 * kJetTolerance) {
    throw NumericalError("evaluator inconsistent with homogeneity: Euler residual " + std::to_string(worst) +
                         " at z=" + numdiff::format_point(z) + " zeta=" + numdiff::format_point(zeta));
  }
  return jet;
}

HomogeneityReport check_homogeneity(const FinslerMetric& metric, std::span<const bundles::SamplePoint> samples,
                                    std::uint64_t seed, double tolerance) {
  HomogeneityReport report;
  report.tolerance = tolerance;
  Rng rng(seed);
  double worst = -1.0;
  for (const auto& s : samples) {
    const cplx lambda = std::polar(2.0, rng.uniform(0.0, 2.0 * M_PI));
    const FiberJet2 a = compute_jet(metric, s.chart, s.z, s.zeta);
    const FiberJet2 b = compute_jet(metric, s.chart, s.z, CVec(lambda * s.zeta));
    const double inv = (b.hessian - a.hessian).cwiseAbs().maxCoeff() / std::max(a.hessian.cwiseAbs().maxCoeff(), 1e-300);
    report.worst_euler_gradient = std::max({report.worst_euler_gradient, a.euler_gradient_residual, b.euler_gradient_residual});
    report.worst_euler_hessian = std::max({report.worst_euler_hessian, a.euler_hessian_residual, b.euler_hessian_residual});
    report.worst_invariance = std::max(report.worst_invariance, inv);
    report.worst_absolute_euler = std::max(report.worst_absolute_euler, std::abs(euler_sum(a.gradient, a.zeta) - a.G));
    const double here = std::max({a.euler_gradient_residual, a.euler_hessian_residual, inv});
    if (here > worst) {
      worst = here;
      report.witness = s;
    }
    ++report.samples;
  }
  report.passed = report.worst_euler_gradient < tolerance && report.worst_euler_hessian < tolerance &&
                  report.worst_invariance < tolerance;
  return report;
}

PseudoconvexityReport strong_pseudoconvexity_check(const FinslerMetric& metric,
                                                   std::span<const bundles::SamplePoint> samples, double tolerance) {
  PseudoconvexityReport report;
  report.tolerance = tolerance;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  report.min_normalized_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const FiberJet2 jet = compute_jet(metric, s.chart, s.z, s.zeta);
    const RVec eig = Eigen::SelfAdjointEigenSolver<CMat>(jet.hessian, Eigen::EigenvaluesOnly).eigenvalues();
    const double lo = eig.minCoeff();
    const double normalized = lo / std::max(std::abs(eig.maxCoeff()), 1e-300);
    report.min_eigenvalue = std::min(report.min_eigenvalue, lo);
    if (normalized < report.min_normalized_eigenvalue) {
      report.min_normalized_eigenvalue = normalized;
      report.witness = s;
    }
    ++report.samples;
  }
  report.passed = report.samples == 0 || report.min_normalized_eigenvalue > tolerance;
  if (report.samples == 0) report.min_eigenvalue = report.min_normalized_eigenvalue = 0.0;
  return report;
}

std::vector<CVec> probe_vectors(int rank, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CVec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double size = std::pow(10.0, rng.uniform(-1.0, 1.0));
    out.push_back(size * rng.unit_vector(rank));
  }
  return out;
}

multilinear::ConvexityReport convexity_check_at(const FinslerMetric& metric, int chart, const CVec& z,
                                                std::span<const CVec> hessian_points, std::size_t pairs,
                                                std::uint64_t seed, const multilinear::ConvexityTolerances& tol) {
  const ComplexScalarFn fiber = metric.fiber_G(chart, z);
  const ComplexScalarFn norm = [&fiber](const CVec& v) { return std::sqrt(std::max(0.0, fiber(v))); };
  const auto us = probe_vectors(metric.rank(), pairs, seed);
  const auto vs = probe_vectors(metric.rank(), pairs, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<multilinear::VectorPair> pair_list;
  pair_list.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) pair_list.emplace_back(us[i], vs[i]);
  return multilinear::convexity_probe(norm, pair_list, hessian_points, tol);
}

multilinear::ConvexityReport convexity_check(const FinslerMetric& metric, int chart, const CVec& z,
                                             const ProbePlan& plan, const multilinear::ConvexityTolerances& tol) {
  const auto points = probe_vectors(metric.rank(), plan.hessian_points, plan.seed + 1);
  return convexity_check_at(metric, chart, z, points, plan.pairs, plan.seed, tol);
}

StrongConvexityReport strong_convexity_check(const FinslerMetric& metric, int chart, const CVec& z,
                                             std::span<const CVec> probes, double tolerance) {
  StrongConvexityReport report;
  report.tolerance = tolerance;
  report.min_normalized_eigenvalue = std::numeric_limits<double>::infinity();
  const ComplexScalarFn fiber = metric.fiber_G(chart, z);
  for (const CVec& p : probes) {
    if (!(p.norm() > 0.0)) throw DomainError("strong_convexity_check: probes must be nonzero");
    const RMat hess = multilinear::norm_hessian(fiber, p);
    const RVec eig = Eigen::SelfAdjointEigenSolver<RMat>(hess, Eigen::EigenvaluesOnly).eigenvalues();
    const double normalized = eig.minCoeff() / std::max(std::abs(eig.maxCoeff()), 1e-300);
    report.min_eigenvalues.push_back(eig.minCoeff());
    if (normalized < report.min_normalized_eigenvalue) {
      report.min_normalized_eigenvalue = normalized;
      report.witness = p;
    }
    ++report.probes;
  }
  report.passed = report.probes == 0 || report.min_normalized_eigenvalue > tolerance;
  if (report.probes == 0) report.min_normalized_eigenvalue = 0.0;
  return report;
}

StrongConvexityReport strong_convexity_check(const FinslerMetric& metric, int chart, const CVec& z,
                                             const ProbePlan& plan, double tolerance) {
  const auto points = probe_vectors(metric.rank(), plan.hessian_points, plan.seed + 1);
  return strong_convexity_check(metric, chart, z, points, tolerance);
}

ProjChartPoint proj_point(int chart, const CVec& z, const CVec& zeta) {
  if (!(zeta.norm() > 0.0)) throw DomainError("proj_point: zeta must be nonzero");
  ProjChartPoint p;
  p.chart = chart;
  p.z = z;
  double best = -1.0;
  for (Eigen::Index i = 0; i < zeta.size(); ++i) {
    if (std::abs(zeta[i]) >= best) {
      best = std::abs(zeta[i]);
      p.pivot = static_cast<int>(i);
    }
  }
  p.w = CVec(zeta.size() - 1);
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < zeta.size(); ++i) {
    if (i != p.pivot) p.w[j++] = zeta[i] / zeta[p.pivot];
  }
  return p;
}

CVec lift(const CVec& w, int pivot) {
  const Eigen::Index r = w.size() + 1;
  if (pivot < 0 || pivot >= r) throw DomainError("lift: pivot out of range");
  CVec zeta(r);
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < r; ++i) zeta[i] = i == pivot ? cplx(1.0) : w[j++];
  return zeta;
}

double hG_weight(const FinslerMetric& metric, const ProjChartPoint& p) {
  return metric.G(p.chart, p.z, lift(p.w, p.pivot));
}

RegularizedMetric::RegularizedMetric(MetricPtr base, GramFieldFn h0, double eps)
    : FinslerMetric(base->description() + " + " + std::to_string(eps) + " * H0", base->rank(), base->base_dim()),
      base_(std::move(base)),
      h0_(std::move(h0)),
      eps_(eps) {
  if (!(eps_ >= 0.0)) throw DomainError("add_hermitian: epsilon must be >= 0");
}

double RegularizedMetric::G(int chart, const CVec& z, const CVec& zeta) const {
  return base_->G(chart, z, zeta) + eps_ * zeta.dot(h0_(chart, z) * zeta).real();
}

ComplexScalarFn RegularizedMetric::fiber_G(int chart, const CVec& z) const {
  ComplexScalarFn base = base_->fiber_G(chart, z);
  const CMat h0 = h0_(chart, z);
  const double eps = eps_;
  return [base = std::move(base), h0, eps](const CVec& zeta) { return base(zeta) + eps * zeta.dot(h0 * zeta).real(); };
}

std::optional<CMat> RegularizedMetric::hermitian_gram(int chart, const CVec& z) const {
  auto h = base_->hermitian_gram(chart, z);
  if (!h) return std::nullopt;
  return CMat(*h + eps_ * h0_(chart, z));
}

MetricPtr add_hermitian(MetricPtr metric, GramFieldFn h0, double eps) {
  if (eps == 0.0) return metric;
  return std::make_shared<RegularizedMetric>(std::move(metric), std::move(h0), eps);
}

namespace {

cplx pairing(const CVec& xi, const CVec& zeta) { return (xi.array() * zeta.array()).sum(); }

// Scale-invariant objective |xi(zeta)| / F(zeta).
double ratio(const ComplexScalarFn& g, const CVec& xi, const CVec& zeta) {
  const double G = g(zeta);
  if (!(G > 0.0)) return 0.0;
  return std::abs(pairing(xi, zeta)) / std::sqrt(G);
}

}  // namespace

DualNormResult dual_norm(const ComplexScalarFn& g, const CVec& xi, const DualNormOptions& opt) {
  DualNormResult result;
  const Eigen::Index r = xi.size();
  if (r < 1) throw DomainError("dual_norm: empty covector");
  if (!(xi.norm() > 0.0)) {
    result.converged = true;
    result.argmax = CVec::Zero(r);
    return result;
  }
  if (r == 1) {
    CVec zeta(1);
    zeta[0] = 1.0 / xi[0];
    result.value = result.lower = result.upper = 1.0 / std::sqrt(g(zeta));
    result.converged = true;
    result.argmax = zeta / std::sqrt(g(zeta));
    return result;
  }

  // Stage 1: multi-start projected ascent of |xi(zeta)| / F(zeta) on the unit F-sphere.
  Rng rng(opt.seed);
  std::vector<std::pair<double, CVec>> starts;
  starts.emplace_back(ratio(g, xi, xi.conjugate()), xi.conjugate());
  for (int s = 0; s < opt.starts; ++s) {
    CVec v = rng.unit_vector(r);
    starts.emplace_back(ratio(g, xi, v), v);
  }
  std::stable_sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  double best_ratio = starts.front().first;
  CVec best = starts.front().second;
  const int refine = std::min<int>(opt.refine_starts, static_cast<int>(starts.size()));
  for (int s = 0; s < refine; ++s) {
    CVec v = starts[static_cast<std::size_t>(s)].second;
    v /= std::sqrt(g(v));
    double val = ratio(g, xi, v);
    double step = 0.5;
    for (int it = 0; it < opt.ascent_iterations; ++it) {
      const RVec x = to_real(v);
      const double h = 1e-6 * x.norm();
      RVec grad(x.size());
      RVec probe = x;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = ratio(g, xi, to_complex(probe));
        probe[i] = x[i] - h;
        const double fm = ratio(g, xi, to_complex(probe));
        probe[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
      }
      const double gn = grad.norm();
      if (!(gn > 0.0)) break;
      bool moved = false;
      while (step > 1e-6) {
        CVec cand = to_complex(x + step * x.norm() * grad / gn);
        const double gc = g(cand);
        if (gc > 0.0) {
          cand /= std::sqrt(gc);
          const double cv = ratio(g, xi, cand);
          if (cv > val) {
            v = cand;
            val = cv;
            step = std::min(1.0, step * 2.0);
            moved = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (val > best_ratio) {
      best_ratio = val;
      best = v;
    }
  }

  // Stage 2: Newton on the hyperplane {xi(zeta) = 1}, zeta = zeta0 + N y, minimizing G.
  const CVec zeta0 = best / pairing(xi, best);
  CMat basis_in = CMat::Zero(r, 1);
  basis_in.col(0) = xi.conjugate().normalized();
  const CMat q = Eigen::HouseholderQR<CMat>(basis_in).householderQ() * CMat::Identity(r, r);
  const CMat N = q.rightCols(r - 1);  // orthonormal, xi^T N = 0
  const Eigen::Index m = 2 * (r - 1);
  const RealScalarFn obj = [&](const RVec& y) { return g(CVec(zeta0 + N * to_complex(y))); };

  RVec y = RVec::Zero(m);
  double fy = numdiff::checked_eval(obj, y);
  double decrement = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.newton_iterations; ++it) {
    result.newton_steps = it + 1;
    const double h = 1e-3 * (zeta0 + N * to_complex(y)).norm();
    const RVec steps = RVec::Constant(m, h);
    const RVec grad = numdiff::gradient_fourth_order(obj, y, steps);
    const RMat hess = numdiff::hessian_fourth_order(obj, y, steps);
    Eigen::LDLT<RMat> ldlt(hess);
    RVec dir;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all()) {
      dir = -ldlt.solve(grad);
    } else {
      dir = -grad * (h * h / std::max(fy, 1e-300));
    }
    decrement = std::max(0.0, -grad.dot(dir));
    if (decrement <= 2e-15 * fy) {
      result.converged = true;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-10) {
      const RVec cand = y + t * dir;
      const double fc = obj(cand);
      if (std::isfinite(fc) && fc <= fy + 1e-4 * t * grad.dot(dir)) {
        y = cand;
        fy = fc;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      result.converged = decrement <= 1e-10 * fy;
      break;
    }
  }

  const double refined = 1.0 / std::sqrt(fy);
  result.lower = std::max(refined, best_ratio);
  result.value = result.lower;
  const double floor = fy - 0.5 * decrement;
  result.upper = floor > 0.0 ? 1.0 / std::sqrt(floor) : std::numeric_limits<double>::infinity();
  result.argmax = CVec(zeta0 + N * to_complex(y)) / std::sqrt(fy);
  if (!result.converged) {
    throw NumericalError("dual norm optimizer did not converge at xi=" + numdiff::format_point(xi) +
                         ": F* in [" + std::to_string(result.lower) + ", " + std::to_string(result.upper) + "]");
  }
  return result;
}

DualMetric::DualMetric(MetricPtr source, DualNormOptions options, bool force_optimizer)
    : FinslerMetric("dual of (" + source->description() + ")", source->rank(), source->base_dim()),
      source_(std::move(source)),
      options_(options),
      closed_form_(source_->is_hermitian() && !force_optimizer) {}

std::optional<CMat> DualMetric::hermitian_gram(int chart, const CVec& z) const {
  if (!closed_form_) return std::nullopt;
  const CMat h = *source_->hermitian_gram(chart, z);
  const CMat inv = h.llt().solve(CMat::Identity(h.rows(), h.cols()));
  return CMat(inv.conjugate());
}

double DualMetric::G(int chart, const CVec& z, const CVec& xi) const {
  if (closed_form_) return xi.dot(*hermitian_gram(chart, z) * xi).real();
  const double v = dual_norm(source_->fiber_G(chart, z), xi, options_).value;
  return v * v;
}

ComplexScalarFn DualMetric::fiber_G(int chart, const CVec& z) const {
  if (closed_form_) {
    const CMat d = *hermitian_gram(chart, z);
    return [d](const CVec& xi) { return xi.dot(d * xi).real(); };
  }
  ComplexScalarFn src = source_->fiber_G(chart, z);
  const DualNormOptions opt = options_;
  return [src = std::move(src), opt](const CVec& xi) {
    const double v = dual_norm(src, xi, opt).value;
    return v * v;
  };
}

ComplexScalarFn dual_finsler(const FinslerMetric& metric, int chart, const CVec& z, const DualNormOptions& options) {
  ComplexScalarFn src = metric.fiber_G(chart, z);
  return [src = std::move(src), options](const CVec& xi) { return dual_norm(src, xi, options).value; };
}

MetricPtr make_dual(MetricPtr metric, bool force_optimizer) {
  return std::make_shared<DualMetric>(std::move(metric), DualNormOptions{}, force_optimizer);
}

}  // namespace finslerlab::finsler
