#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "finslerlab/bundles.hpp"

namespace finslerlab::config {

inline constexpr int kSchemaVersion = 1;

struct TaskSpec {
  std::string task;
  std::optional<std::string> expect;  // verdict the run must produce; absent = record only
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const TaskSpec&) const = default;
};

struct Tolerances {
  double pd = 1e-10;
  double eig = 1e-9;
  double triangle_rel = 1e-9;
  double hessian_rel = 1e-7;
  double homogeneity = 1e-8;
  double atlas = 1e-8;
  double signature_band = 1e-7;
  double jet_agreement = 1e-5;

  bool operator==(const Tolerances&) const = default;
};

struct QuadratureSettings {
  int resolution = 24;
  std::string density = "induced";  // or "fubini_study"

  bool operator==(const QuadratureSettings&) const = default;
};

struct SamplingSettings {
  std::size_t count = 50;
  std::uint64_t seed = 42;

  bool operator==(const SamplingSettings&) const = default;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  bundles::BundleSpec bundle;
  bundles::MetricVariant metric = bundles::MetricVariant::kDefault;
  std::vector<TaskSpec> tasks;
  SamplingSettings sampling;
  Tolerances tolerances;
  int k_min = 1;
  int k_max = 4;
  double epsilon = 1e-2;
  QuadratureSettings quadrature;
  std::string output_format = "json";

  bool operator==(const ScenarioConfig&) const = default;
};

/// Task names accepted in `tasks[].task`.
const std::vector<std::string>& known_tasks();

/// Parses and validates a JSON scenario document. Every default is filled in.
/// Throws ConfigError carrying the offending field path.
ScenarioConfig load_config(std::string_view text);
ScenarioConfig from_json(const nlohmann::json& doc);

/// Fully expanded document; load_config(serialize(c)) == c.
nlohmann::json to_json(const ScenarioConfig& config);
std::string serialize(const ScenarioConfig& config);

/// FNV-1a 64 of serialize(config), 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

/// Field-by-field description of the document format.
nlohmann::json config_schema();

}  // namespace finslerlab::config
