#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finslerlab/atlas.hpp"
#include "finslerlab/metric.hpp"

namespace finslerlab::bundles {

enum class Family { kPointSpace, kLineSum, kTrivialWeighted, kQuarticFinsler };
const char* to_string(Family family);

/// Parameters of a builtin family.
///   point_space(r)                 rank r over a point
///   line_sum(a,b)                  O(a) + O(b) over P^1
///   trivial_weighted(r,(c..)[,n])  Gram diag(exp(-c_i |z|^2)) over the unit polydisc in C^n
///   quartic_finsler(r[,n])         G = sqrt(sum |zeta_i|^4) exp(-|z|^2)
struct BundleSpec {
  Family family = Family::kPointSpace;
  int rank = 2;
  int base_dim = 0;
  std::vector<int> degrees;     // line_sum
  std::vector<double> weights;  // trivial_weighted

  std::string canonical_name() const;
  bool operator==(const BundleSpec&) const = default;
};

/// Parses "line_sum(1,1)", "trivial_weighted(2,(1,2))", ... Throws DomainError
/// listing the available builtins on an unknown name or malformed arguments.
BundleSpec parse_bundle_name(std::string_view name);
void validate(const BundleSpec& spec);

enum class MetricVariant { kDefault, kFlatFrame };
const char* to_string(MetricVariant variant);
MetricVariant parse_metric_variant(std::string_view name);

struct Bundle {
  BundleSpec spec;
  AtlasPtr atlas;
  finsler::MetricPtr metric;
};

Bundle make_bundle(const BundleSpec& spec, MetricVariant variant = MetricVariant::kDefault);
Bundle builtin_bundle(std::string_view name);

/// Builtin families with their parameter syntax, one line each.
std::vector<std::string> list_builtins();

/// Gram field of a Hermitian default metric (nullopt for quartic_finsler).
std::optional<finsler::GramFieldFn> default_gram_field(const BundleSpec& spec);

struct SamplePoint {
  int chart = 0;
  CVec z;          // base point, empty when n = 0
  CVec zeta;       // nonzero fiber vector, |zeta| in [0.1, 10]
  CVec direction;  // unit base direction, empty when n = 0
};

struct SamplingPlan {
  std::size_t count = 50;
  std::uint64_t seed = 42;
};

/// Deterministic for a fixed plan. Base points stay inside |z_i| <= 0.8 on a
/// polydisc and |z| <= 1.5 in either chart of P^1.
std::vector<SamplePoint> sample_points(const BundleAtlas& atlas, const SamplingPlan& plan);

struct AtlasCheckReport {
  bool passed = true;
  std::size_t samples = 0;
  double tolerance = 1e-8;
  double worst_cocycle = 0.0;
  double worst_metric = 0.0;
  double min_abs_det = 0.0;
  std::optional<SamplePoint> witness;  // worst metric-compatibility sample (source chart data)
  int witness_target_chart = -1;
  std::string note;
};

/// Cocycle round trips and G_U(z, zeta) = G_V(z_V, g_VU zeta) at overlap samples
/// (annulus 0.5 <= |z| <= 2 on P^1).
AtlasCheckReport check_atlas(const BundleAtlas& atlas, const finsler::FinslerMetric& metric,
                             std::size_t samples, std::uint64_t seed, double tolerance = 1e-8);

}  // namespace finslerlab::bundles
