#include "finslerlab/metric.hpp"

#include <cmath>

#include "finslerlab/errors.hpp"

namespace finslerlab::finsler {

double FinslerMetric::F(int chart, const CVec& z, const CVec& zeta) const {
  return std::sqrt(std::max(0.0, G(chart, z, zeta)));
}

ComplexScalarFn FinslerMetric::fiber_G(int chart, const CVec& z) const {
  return [this, chart, z](const CVec& zeta) { return G(chart, z, zeta); };
}

std::optional<CMat> FinslerMetric::hermitian_gram(int, const CVec&) const { return std::nullopt; }

HermitianMetric::HermitianMetric(std::string description, int rank, int base_dim, GramFieldFn gram)
    : FinslerMetric(std::move(description), rank, base_dim), gram_(std::move(gram)) {
  if (!gram_) throw DomainError("HermitianMetric: empty Gram field");
}

double HermitianMetric::G(int chart, const CVec& z, const CVec& zeta) const {
  const CMat h = gram_(chart, z);
  return zeta.dot(h * zeta).real();
}

ComplexScalarFn HermitianMetric::fiber_G(int chart, const CVec& z) const {
  const CMat h = gram_(chart, z);
  return [h](const CVec& zeta) { return zeta.dot(h * zeta).real(); };
}

std::optional<CMat> HermitianMetric::hermitian_gram(int chart, const CVec& z) const { return gram_(chart, z); }

ClosedFormMetric::ClosedFormMetric(std::string description, int rank, int base_dim, ClosedFormFn g)
    : FinslerMetric(std::move(description), rank, base_dim), g_(std::move(g)) {
  if (!g_) throw DomainError("ClosedFormMetric: empty evaluator");
}

double ClosedFormMetric::G(int chart, const CVec& z, const CVec& zeta) const { return g_(chart, z, zeta); }

MetricPtr make_hermitian(std::string description, int rank, int base_dim, GramFieldFn gram) {
  return std::make_shared<HermitianMetric>(std::move(description), rank, base_dim, std::move(gram));
}

MetricPtr make_closed_form(std::string description, int rank, int base_dim, ClosedFormFn g) {
  return std::make_shared<ClosedFormMetric>(std::move(description), rank, base_dim, std::move(g));
}

}  // namespace finslerlab::finsler
