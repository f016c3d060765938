#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finslerlab/config.hpp"

namespace finslerlab::cli {

// Exit codes: 0 all verdicts as expected, 1 verdict mismatch, 2 config or usage
// error, 3 numerical instability.
enum ExitCode : int { kExitOk = 0, kExitMismatch = 1, kExitConfig = 2, kExitNumerical = 3 };

inline constexpr const char* kToolName = "finslerlab";
inline constexpr const char* kToolVersion = "0.1.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides sampling.seed
  bool parallel = false;
};

struct TaskTiming {
  std::string task;
  double milliseconds = 0.0;
};

/// `report` is the structured output and never contains timings; those live in
/// `timings` and only reach the text rendering.
struct RunResult {
  int exit_code = kExitOk;
  nlohmann::json report;
  std::vector<TaskTiming> timings;
};

RunResult run_config(const config::ScenarioConfig& config, const RunOptions& options = {});
/// Reads and runs a config file; unreadable or invalid documents give exit 2 with the error in the report.
RunResult run_file(const std::string& path, const RunOptions& options = {});
RunResult run_text(const std::string& document, const RunOptions& options = {});

/// Example id "4.1" or "4.2"; anything else throws UsageError.
RunResult reproduce(const std::string& example, const RunOptions& options = {});

struct ScanRequest {
  std::string bundle;
  int k_max = 4;
  std::uint64_t seed = 42;
  std::size_t samples = 50;
  double epsilon = 1e-2;
  int resolution = 24;
};
RunResult scan(const ScanRequest& request);

std::string render_text(const RunResult& result);
std::string render(const RunResult& result, const std::string& format);

std::string builtins_text();

}  // namespace finslerlab::cli
