#include "finslerlab/l2.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <utility>

#include "finslerlab/errors.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/numdiff.hpp"

namespace finslerlab::l2 {

using multilinear::GramMatrix;
using multilinear::SymBasis;

const char* to_string(Density d) {
  switch (d) {
    case Density::kInduced: return "induced";
    case Density::kFubiniStudy: return "fubini_study";
  }
  return "induced";
}

Density parse_density(const std::string& name) {
  if (name == "induced") return Density::kInduced;
  if (name == "fubini_study") return Density::kFubiniStudy;
  throw DomainError("unknown fiber density '" + name + "' (expected induced or fubini_study)");
}

std::function<cplx(const CVec&)> phi_k_local(const CVec& u, const SymBasis& basis, int pivot) {
  if (u.size() != static_cast<Eigen::Index>(basis.size())) throw DomainError("phi_k_local: coefficient size mismatch");
  if (pivot < 0 || pivot >= basis.rank()) throw DomainError("phi_k_local: pivot out of range");
  return [u, basis, pivot](const CVec& w) { return u.cwiseProduct(basis.monomials(finsler::lift(w, pivot))).sum(); };
}

namespace {

// Fiber evaluation at a fixed z, with the Gram matrix pulled out once for Hermitian metrics.
struct FiberAt {
  std::optional<CMat> h;
  ComplexScalarFn g;

  FiberAt(const finsler::FinslerMetric& metric, int chart, const CVec& z)
      : h(metric.hermitian_gram(chart, z)), g(h ? ComplexScalarFn{} : metric.fiber_G(chart, z)) {}

  double operator()(const CVec& zeta) const {
    const double v = h ? zeta.dot(*h * zeta).real() : g(zeta);
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw EvaluationError("fiber metric is not positive at zeta=" + numdiff::format_point(zeta));
    }
    return v;
  }
};

CMat chart_columns(int r, int pivot) {
  CMat n = CMat::Zero(r, r - 1);
  int col = 0;
  for (int i = 0; i < r; ++i) {
    if (i == pivot) continue;
    n(i, col++) = 1.0;
  }
  return n;
}

// N^* H N for the chart columns N of the pivot chart (Hermitian metrics only).
struct ChartFrame {
  CMat n;
  std::optional<CMat> nhn;

  ChartFrame(const FiberAt& fiber, int r, int pivot) : n(chart_columns(r, pivot)) {
    if (fiber.h) nhn = n.adjoint() * *fiber.h * n;
  }
};

double density_at(const FiberAt& fiber, const ChartFrame& frame, const CVec& w, int pivot, Density density) {
  const auto m = w.size();
  if (density == Density::kFubiniStudy) return std::pow(1.0 + w.squaredNorm(), -static_cast<double>(m + 1));
  const CVec zeta = finsler::lift(w, pivot);
  CMat levi;
  if (fiber.h) {
    const CVec hz = *fiber.h * zeta;
    const double g = zeta.dot(hz).real();
    const CVec a = frame.n.adjoint() * hz;
    levi = *frame.nhn / g - a * a.adjoint() / (g * g);
  } else {
    const ComplexScalarFn logg = [&fiber, pivot](const CVec& x) { return std::log(fiber(finsler::lift(x, pivot))); };
    levi = numdiff::complex_hessian(logg, w, RVec::Constant(m, 1e-3 * (1.0 + w.norm())));
  }
  const double det = m == 1 ? levi(0, 0).real() : levi.determinant().real();
  if (!(det > 0.0)) {
    throw DomainError("induced fiber density is not positive at w=" + numdiff::format_point(w) +
                      " (h_G is not strongly pseudoconvex there)");
  }
  return det;
}

double density_at(const FiberAt& fiber, const CVec& w, int pivot, Density density) {
  return density_at(fiber, ChartFrame(fiber, static_cast<int>(w.size() + 1), pivot), w, pivot, density);
}

// Lifted nodes and their monomials, mono(a, i) = zeta_i^alpha_a; independent of z.
struct NodeTable {
  int pivot = 0;
  std::vector<CVec> zeta;
  CMat mono;
};

NodeTable node_table(const QuadratureRule& rule, const SymBasis& basis, int pivot) {
  NodeTable t;
  t.pivot = pivot;
  t.mono.resize(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(rule.nodes.size()));
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    t.zeta.push_back(finsler::lift(rule.nodes[i], pivot));
    t.mono.col(static_cast<Eigen::Index>(i)) = basis.monomials(t.zeta.back());
  }
  return t;
}

CMat assemble(const FiberAt& fiber, const QuadratureRule& rule, const NodeTable& table, Density density, int k) {
  const int r = rule.rank;
  const ChartFrame frame(fiber, r, table.pivot);
  RVec c(static_cast<Eigen::Index>(rule.nodes.size()));
  double volume = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double dens = density_at(fiber, frame, rule.nodes[i], table.pivot, density);
    c[static_cast<Eigen::Index>(i)] = rule.weights[i] * dens * std::pow(fiber(table.zeta[i]), -k);
    volume += rule.weights[i] * dens;
  }
  CMat h = table.mono.conjugate() * c.asDiagonal() * table.mono.transpose();
  // The induced form has total volume pi^{r-1}/(r-1)!; rescale away the quadrature error in it.
  if (density == Density::kInduced) h *= fs_volume(r) / volume;
  return 0.5 * (h + h.adjoint());
}

GramMatrix checked_gram(const SymBasis& basis, const CMat& h, const CVec& z) {
  GramMatrix out(basis, h);
  if (!out.positive_definite()) {
    throw NumericalError("hk_gram: Gram matrix is not positive definite at z=" + numdiff::format_point(z) +
                         " (min eigenvalue " + std::to_string(out.min_eigenvalue()) + ")");
  }
  return out;
}

int resolve_pivot(int pivot, int r) {
  if (pivot < 0) return r - 1;
  if (pivot >= r) throw DomainError("hk_gram: pivot out of range");
  return pivot;
}

int angular_floor(int k) { return 4 * k + 2; }

}  // namespace

double fiber_density(const finsler::FinslerMetric& metric, int chart, const CVec& z, const CVec& w, int pivot,
                     Density density) {
  return density_at(FiberAt(metric, chart, z), w, resolve_pivot(pivot, metric.rank()), density);
}

GramMatrix hk_gram(const finsler::FinslerMetric& metric, int chart, const CVec& z, int k, const QuadratureRule& rule,
                   Density density, int pivot) {
  if (k < 1) throw DomainError("hk_gram: k must be >= 1");
  const int r = metric.rank();
  SymBasis basis(r, k);
  const FiberAt fiber(metric, chart, z);
  if (r == 1) {
    CMat h(1, 1);
    h(0, 0) = std::pow(fiber(CVec::Ones(1)), -k);
    return GramMatrix(basis, h);
  }
  if (rule.rank != r) throw DomainError("hk_gram: quadrature rule rank does not match the metric rank");
  const NodeTable table = node_table(rule, basis, resolve_pivot(pivot, r));
  return checked_gram(basis, assemble(fiber, rule, table, density, k), z);
}

namespace {

double max_entry_change(const CMat& a, const CMat& b) { return (a - b).cwiseAbs().maxCoeff(); }

void require_resolved(const CMat& coarse, const CMat& fine, double tol, int resolution) {
  const double change = max_entry_change(coarse, fine);
  const double scale = std::max(1.0, fine.cwiseAbs().maxCoeff());
  if (change > tol * scale) {
    std::ostringstream os;
    os << "quadrature unresolved: doubling resolution " << resolution << " moved an entry by " << change
       << " (tolerance " << tol * scale << ")";
    throw NumericalError(os.str());
  }
}

}  // namespace

GramMatrix hk_gram(const finsler::FinslerMetric& metric, int chart, const CVec& z, int k, const L2Options& options) {
  const int r = metric.rank();
  if (r == 1) return hk_gram(metric, chart, z, k, QuadratureRule{}, options.density);
  const QuadratureRule rule = cp_quadrature(r, options.resolution, angular_floor(k), options.qmc_seed);
  GramMatrix g = hk_gram(metric, chart, z, k, rule, options.density);
  if (options.check_resolution && r == 2) {
    const QuadratureRule fine = cp_quadrature(r, 2 * options.resolution, 2 * angular_floor(k), options.qmc_seed);
    require_resolved(g.matrix(), hk_gram(metric, chart, z, k, fine, options.density).matrix(), options.resolution_tol,
                     options.resolution);
  }
  return g;
}

struct GramField::State {
  finsler::MetricPtr metric;
  bundles::AtlasPtr atlas;
  int k;
  L2Options options;
  SymBasis basis;
  QuadratureRule rule;
  NodeTable table;
  GramProvenance provenance;
  bool resolution_done = false;
  mutable std::shared_mutex mutex;
  std::map<std::pair<int, std::vector<double>>, CMat> cache;

  State(finsler::MetricPtr m, bundles::AtlasPtr a, int kk, L2Options o)
      : metric(std::move(m)), atlas(std::move(a)), k(kk), options(o), basis(metric->rank(), kk) {}
};

GramField::GramField(finsler::MetricPtr metric, bundles::AtlasPtr atlas, int k, L2Options options) {
  if (!metric || !atlas) throw DomainError("GramField: null metric or atlas");
  if (metric->rank() != atlas->rank() || metric->base_dim() != atlas->base_dim()) {
    throw DomainError("GramField: metric and atlas dimensions differ");
  }
  if (k < 1) throw DomainError("GramField: k must be >= 1");
  state_ = std::make_shared<State>(std::move(metric), std::move(atlas), k, options);
  auto& s = *state_;
  const int r = s.metric->rank();
  if (r > 1) {
    s.rule = cp_quadrature(r, options.resolution, angular_floor(k), options.qmc_seed);
    s.table = node_table(s.rule, s.basis, r - 1);
  }
  auto& p = s.provenance;
  p.metric = s.metric->description();
  p.density = to_string(options.density);
  p.k = k;
  p.rank = r;
  p.sym_rank = s.basis.size();
  p.rule = r == 1 ? "point" : (r == 2 ? "gauss-legendre x trapezoid" : "randomized halton");
  p.resolution = options.resolution;
  p.angular_nodes = s.rule.angular_nodes;
  p.nodes = r == 1 ? 1 : s.rule.nodes.size();
  p.rule_error_estimate = s.rule.error_estimate;
}

int GramField::k() const { return state_->k; }
const SymBasis& GramField::basis() const { return state_->basis; }
const bundles::BundleAtlas& GramField::atlas() const { return *state_->atlas; }
const finsler::FinslerMetric& GramField::metric() const { return *state_->metric; }
finsler::MetricPtr GramField::metric_ptr() const { return state_->metric; }
bundles::AtlasPtr GramField::atlas_ptr() const { return state_->atlas; }
const L2Options& GramField::options() const { return state_->options; }

CMat GramField::operator()(int chart, const CVec& z) const {
  auto& s = *state_;
  std::pair<int, std::vector<double>> key{chart, {}};
  key.second.reserve(static_cast<std::size_t>(2 * z.size()));
  for (const cplx& c : z) {
    key.second.push_back(c.real());
    key.second.push_back(c.imag());
  }
  {
    std::shared_lock lock(s.mutex);
    auto it = s.cache.find(key);
    if (it != s.cache.end()) return it->second;
  }
  const int r = s.metric->rank();
  const CMat h = r == 1 ? hk_gram(*s.metric, chart, z, s.k, s.rule, s.options.density).matrix()
                        : checked_gram(s.basis, assemble(FiberAt(*s.metric, chart, z), s.rule, s.table,
                                                         s.options.density, s.k), z)
                              .matrix();
  std::unique_lock lock(s.mutex);
  if (!s.resolution_done) {
    if (s.options.check_resolution && r == 2) {
      const QuadratureRule fine =
          cp_quadrature(r, 2 * s.options.resolution, 2 * angular_floor(s.k), s.options.qmc_seed);
      const CMat hf = hk_gram(*s.metric, chart, z, s.k, fine, s.options.density).matrix();
      s.provenance.resolution_change = max_entry_change(h, hf);
      s.provenance.resolution_checked = true;
      require_resolved(h, hf, s.options.resolution_tol, s.options.resolution);
    }
    s.resolution_done = true;
  }
  if (s.cache.size() >= (1u << 16)) s.cache.clear();
  s.cache.emplace(std::move(key), h);
  return h;
}

GramMatrix GramField::gram(int chart, const CVec& z) const { return GramMatrix(state_->basis, (*this)(chart, z)); }

finsler::GramFieldFn GramField::as_fn() const {
  return [self = *this](int chart, const CVec& z) { return self(chart, z); };
}

GramProvenance GramField::provenance() const {
  std::shared_lock lock(state_->mutex);
  return state_->provenance;
}

std::size_t GramField::cache_size() const {
  std::shared_lock lock(state_->mutex);
  return state_->cache.size();
}

double fk_norm(const GramField& field, int chart, const CVec& z, const CVec& v) {
  if (v.size() != field.basis().rank()) throw DomainError("fk_norm: vector size does not match the rank");
  if (v.squaredNorm() == 0.0) return 0.0;
  return multilinear::kth_root_norm(field.gram(chart, z), v);
}

KthRootMetric::KthRootMetric(GramField field)
    : FinslerMetric("F_k^2 with k=" + std::to_string(field.k()) + " from H_k of [" + field.metric().description() + "]",
                    field.basis().rank(), field.atlas().base_dim()),
      field_(std::move(field)) {}

namespace {

double kth_root_value(const CMat& h, const SymBasis& basis, const CVec& eta) {
  const CVec c = multilinear::sym_power_coords(eta, basis);
  const double q = std::max(0.0, c.dot(h * c).real());
  return basis.degree() == 1 ? q : std::pow(q, 1.0 / basis.degree());
}

}  // namespace

double KthRootMetric::G(int chart, const CVec& z, const CVec& eta) const {
  return kth_root_value(field_(chart, z), field_.basis(), eta);
}

ComplexScalarFn KthRootMetric::fiber_G(int chart, const CVec& z) const {
  return [h = field_(chart, z), &basis = field_.basis()](const CVec& eta) { return kth_root_value(h, basis, eta); };
}

std::optional<CMat> KthRootMetric::hermitian_gram(int chart, const CVec& z) const {
  if (field_.k() != 1) return std::nullopt;
  return field_(chart, z);
}

bool KthRootMetric::is_hermitian() const { return field_.k() == 1; }

CMat sym_power_dual_transition(const CMat& g, const SymBasis& basis) {
  const int r = basis.rank();
  if (g.rows() != r || g.cols() != r) throw DomainError("sym_power_dual_transition: fiber matrix has the wrong size");
  Eigen::PartialPivLU<CMat> lu(g);
  if (std::abs(lu.determinant()) < 1e-300) throw DomainError("sym_power_dual_transition: singular fiber matrix");
  const CMat ginv = lu.inverse();
  const auto dim = static_cast<Eigen::Index>(basis.size());
  CMat out = CMat::Zero(dim, dim);
  using Poly = std::map<std::vector<int>, cplx>;
  for (Eigen::Index a = 0; a < dim; ++a) {
    // prod_i (sum_j ginv(i, j) zeta_j)^{alpha_i}, expanded term by term.
    Poly poly{{std::vector<int>(static_cast<std::size_t>(r), 0), cplx(1.0)}};
    const auto& alpha = basis[static_cast<std::size_t>(a)].exponents;
    for (int i = 0; i < r; ++i) {
      for (int e = 0; e < alpha[static_cast<std::size_t>(i)]; ++e) {
        Poly next;
        for (const auto& [mono, coef] : poly) {
          for (int j = 0; j < r; ++j) {
            if (ginv(i, j) == cplx(0.0)) continue;
            auto m = mono;
            ++m[static_cast<std::size_t>(j)];
            next[m] += coef * ginv(i, j);
          }
        }
        poly = std::move(next);
      }
    }
    for (const auto& [mono, coef] : poly) {
      const auto b = basis.index_of(multilinear::MultiIndex{mono});
      out(static_cast<Eigen::Index>(*b), a) = coef;
    }
  }
  return out;
}

bundles::AtlasPtr sym_power_dual_atlas(const bundles::BundleAtlas& atlas, int k) {
  auto basis = std::make_shared<const SymBasis>(atlas.rank(), k);
  std::vector<bundles::TransitionMap> transitions;
  for (const auto& t : atlas.transitions()) {
    bundles::TransitionMap m = t;
    m.fiber_matrix = [g = t.fiber_matrix, basis](const CVec& z) { return sym_power_dual_transition(g(z), *basis); };
    transitions.push_back(std::move(m));
  }
  const std::string name = k == 1 ? "(" + atlas.name() + ")*" : "S^" + std::to_string(k) + "(" + atlas.name() + ")*";
  return std::make_shared<const bundles::BundleAtlas>(name, static_cast<int>(basis->size()), atlas.base_dim(),
                                                      atlas.base_kind(), atlas.charts(), std::move(transitions));
}

GramMatrix dual_side_gram(const CMat& h, int k, const L2Options& options) {
  if (h.rows() != h.cols() || h.rows() < 1) throw DomainError("dual_side_gram: inner product must be square");
  const finsler::HermitianMetric metric("point-space inner product", static_cast<int>(h.rows()), 0,
                                        [h](int, const CVec&) { return h; });
  return hk_gram(metric, 0, CVec(0), k, options);
}

CurvatureDiagnostic curvature_diagnostic(const finsler::FinslerMetric& metric, int chart, const CVec& z, const CVec& zeta,
                                    int k, Density density) {
  if (z.size() == 0) throw DomainError("curvature_diagnostic: base is a point");
  const finsler::ProjChartPoint p = finsler::proj_point(chart, z, zeta);
  const int r = metric.rank();
  CurvatureDiagnostic out{chart, z, p.w, p.pivot, {}, 0.0};
  const ComplexScalarFn f = [&metric, chart, &p, k, r, density](const CVec& x) {
    const FiberAt fiber(metric, chart, x);
    double v = k * std::log(fiber(finsler::lift(p.w, p.pivot)));
    if (r > 1 && density == Density::kInduced) v -= std::log(density_at(fiber, p.w, p.pivot, density));
    return v;
  };
  out.matrix = curvature::levi_form(f, z, RVec::Constant(z.size(), 1e-3), curvature::FormDomain::kBase).matrix;
  out.max_eigenvalue =
      Eigen::SelfAdjointEigenSolver<CMat>(out.matrix, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  return out;
}

ScanReport griffiths_scan(finsler::MetricPtr metric, bundles::AtlasPtr atlas, const ScanOptions& options) {
  if (!metric || !atlas) throw DomainError("griffiths_scan: null metric or atlas");
  if (atlas->base_dim() == 0) throw DomainError("griffiths_scan: base is a point, the scan needs base directions");
  if (options.k_min < 1 || options.k_max < options.k_min) throw DomainError("griffiths_scan: empty k range");
  ScanReport report;
  const auto samples = bundles::sample_points(*atlas, options.plan);
  report.samples = samples.size();
  report.gate = options.gate ? *options.gate
                             : curvature::kobayashi_sign(*metric, *atlas, samples, options.band, options.jet);
  if (report.gate.verdict != curvature::SignVerdict::kPositive) {
    throw DomainError(std::string("griffiths_scan: metric is not Kobayashi positive (verdict ") +
                      curvature::to_string(report.gate.verdict) + ")");
  }
  for (int k = options.k_min; k <= options.k_max; ++k) {
    ScanStep step;
    step.k = k;
    const GramField field(metric, atlas, k, options.l2);
    const bundles::AtlasPtr sym = sym_power_dual_atlas(*atlas, k);
    step.sym_rank = static_cast<std::size_t>(sym->rank());
    const auto sym_samples = bundles::sample_points(*sym, options.plan);
    step.griffiths = curvature::griffiths_sign(field.as_fn(), *sym, sym_samples, options.band, options.jet);
    const finsler::HermitianMetric hk("H_k", sym->rank(), sym->base_dim(), field.as_fn());
    const auto chart_check = bundles::check_atlas(*sym, hk, std::min<std::size_t>(options.plan.count, 20),
                                                  options.plan.seed, options.chart_tolerance);
    step.chart_residual = chart_check.worst_metric;
    step.chart_consistent = chart_check.passed;
    step.diagnostic_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < std::min(options.diagnostic_samples, samples.size()); ++i) {
      const auto& s = samples[i];
      step.diagnostics.push_back(curvature_diagnostic(*metric, s.chart, s.z, s.zeta, k, options.l2.density));
      step.diagnostic_max = std::max(step.diagnostic_max, step.diagnostics.back().max_eigenvalue);
    }
    if (step.diagnostics.empty()) step.diagnostic_max = 0.0;
    step.provenance = field.provenance();
    step.passed = step.griffiths.verdict == curvature::SignVerdict::kNegative && step.chart_consistent;
    report.steps.push_back(std::move(step));
    if (report.steps.back().passed && !report.found_k) {
      report.found_k = k;
      if (options.stop_at_first) break;
    }
  }
  return report;
}

}  // namespace finslerlab::l2
