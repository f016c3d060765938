#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "finslerlab/types.hpp"

namespace finslerlab::finsler {

/// A Finsler metric on a bundle, evaluated chart by chart as G = F^2.
///
/// Implementations must be pure: G(z, lambda zeta) = |lambda|^2 G(z, zeta),
/// G > 0 off the zero section. Evaluators are shared immutable values.
class FinslerMetric {
 public:
  FinslerMetric(std::string description, int rank, int base_dim)
      : description_(std::move(description)), rank_(rank), base_dim_(base_dim) {}
  virtual ~FinslerMetric() = default;

  const std::string& description() const { return description_; }
  int rank() const { return rank_; }
  int base_dim() const { return base_dim_; }

  virtual double G(int chart, const CVec& z, const CVec& zeta) const = 0;
  double F(int chart, const CVec& z, const CVec& zeta) const;

  /// zeta -> G(z, zeta) with z frozen. The returned function borrows *this.
  /// Metrics whose per-point setup is expensive precompute it here.
  virtual ComplexScalarFn fiber_G(int chart, const CVec& z) const;

  /// H(z) when G(z, zeta) = zeta^* H(z) zeta, otherwise nullopt.
  virtual std::optional<CMat> hermitian_gram(int chart, const CVec& z) const;
  virtual bool is_hermitian() const { return false; }

 private:
  std::string description_;
  int rank_;
  int base_dim_;
};

using MetricPtr = std::shared_ptr<const FinslerMetric>;
using GramFieldFn = std::function<CMat(int chart, const CVec& z)>;
using ClosedFormFn = std::function<double(int chart, const CVec& z, const CVec& zeta)>;

/// G(z, zeta) = zeta^* H(z) zeta.
class HermitianMetric final : public FinslerMetric {
 public:
  HermitianMetric(std::string description, int rank, int base_dim, GramFieldFn gram);
  double G(int chart, const CVec& z, const CVec& zeta) const override;
  ComplexScalarFn fiber_G(int chart, const CVec& z) const override;
  std::optional<CMat> hermitian_gram(int chart, const CVec& z) const override;
  bool is_hermitian() const override { return true; }

 private:
  GramFieldFn gram_;
};

class ClosedFormMetric final : public FinslerMetric {
 public:
  ClosedFormMetric(std::string description, int rank, int base_dim, ClosedFormFn g);
  double G(int chart, const CVec& z, const CVec& zeta) const override;

 private:
  ClosedFormFn g_;
};

MetricPtr make_hermitian(std::string description, int rank, int base_dim, GramFieldFn gram);
MetricPtr make_closed_form(std::string description, int rank, int base_dim, ClosedFormFn g);

}  // namespace finslerlab::finsler
