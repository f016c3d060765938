#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "finslerlab/curvature.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/l2.hpp"

namespace finslerlab::pipeline {

struct StageRecord {
  std::string stage;
  bool passed = false;
  std::string summary;
  std::vector<std::pair<std::string, double>> values;
};

/// A certificate failed inside the pipeline; `stage()` names it.
class PipelineStageError : public Error {
 public:
  PipelineStageError(std::string stage, const std::string& what, std::string witness)
      : Error(ErrorKind::kDomain, "stage " + stage + " failed: " + what + (witness.empty() ? "" : " at " + witness)),
        stage_(std::move(stage)),
        witness_(std::move(witness)) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& witness() const noexcept { return witness_; }

 private:
  std::string stage_;
  std::string witness_;
};

struct PipelineOptions {
  double epsilon = 1e-2;
  /// Further epsilons tried after a pass, in order; the report keeps the smallest that still passes.
  std::vector<double> smaller_epsilons;
  bundles::SamplingPlan plan{};
  double band = curvature::kSignatureBand;
  curvature::JetOptions jet{};
  finsler::ProbePlan probe{};
  std::size_t convexity_points = 3;
  /// Hermitian metric on E^* added with weight epsilon. Default: the dual of the source
  /// metric when it is Hermitian, otherwise H_1 of the source; identity over a point.
  std::optional<finsler::GramFieldFn> h0;
  bool force_dual_optimizer = false;
  /// Griffiths gate computed by the caller for the same field and samples.
  std::optional<curvature::GriffithsReport> gate;
};

struct PipelineReport {
  int k = 0;
  bool hypothesis_holds = true;
  std::string hypothesis_note;
  std::optional<curvature::GriffithsReport> gate;
  std::vector<StageRecord> stages;
  double epsilon = 0.0;
  std::optional<double> smallest_passing_epsilon;
  std::string h0_source;
  bool certified = false;
  l2::GramProvenance provenance;
  finsler::MetricPtr fk;           // F_k^2 on E^*
  finsler::MetricPtr regularized;  // F_k^2 + eps h0 on E^*
  finsler::MetricPtr result;       // its dual, on E
};

/// Griffiths gate, convexity and strict plurisubharmonicity of F_k, regularization,
/// dualization and the transversal Levi signature of the result. A failed gate gives
/// a report with hypothesis_holds = false; a failed certificate throws PipelineStageError.
PipelineReport theorem1_pipeline(const l2::GramField& field, const PipelineOptions& options = {});

}  // namespace finslerlab::pipeline
