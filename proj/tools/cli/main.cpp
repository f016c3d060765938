#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "finslerlab/config.hpp"
#include "runner.hpp"

namespace {

constexpr const char* kExitHelp =
    "Exit codes:\n"
    "  0  every task verdict matched its expectation\n"
    "  1  verdict mismatch, failed gate or golden mismatch\n"
    "  2  config or usage error (including domain errors)\n"
    "  3  numerical instability or evaluation failure\n";

int emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) {
    std::cerr << "cannot write '" << out << "'\n";
    return finslerlab::cli::kExitConfig;
  }
  f << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = finslerlab::cli;

  CLI::App app{"finslerlab: L2 metrics on symmetric powers, k-th root Finsler metrics and curvature checks"};
  app.footer(kExitHelp);
  app.require_subcommand(1);

  std::string format = "json";
  std::string out;
  std::optional<std::uint64_t> seed;
  bool parallel = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--out", out, "Write the report to PATH instead of stdout");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the tasks of a scenario config");
  run->add_option("--config", config_path, "Scenario config (JSON)")->required();
  run->add_option("--seed", seed, "Override sampling.seed");
  run->add_flag("--parallel", parallel, "Run tasks concurrently; report order is unchanged");
  add_common(run);

  std::string example;
  auto* rep = app.add_subcommand("reproduce", "Reproduce a worked example (4.1 or 4.2)");
  rep->add_option("example", example, "Example id")->required();
  rep->add_option("--seed", seed, "Probe seed");
  add_common(rep);

  cli::ScanRequest request;
  request.seed = 7;
  auto* scan = app.add_subcommand("scan", "Kobayashi gate, Griffiths scan over k, then the full pipeline");
  scan->add_option("bundle", request.bundle, "Builtin bundle name, e.g. line_sum(1,1)")->required();
  scan->add_option("--k-max", request.k_max, "Largest k tried")->capture_default_str()->check(CLI::Range(1, 12));
  scan->add_option("--seed", request.seed, "Sampling seed")->capture_default_str();
  scan->add_option("--samples", request.samples, "Base samples per check")->capture_default_str();
  scan->add_option("--epsilon", request.epsilon, "Regularization weight")->capture_default_str();
  scan->add_option("--resolution", request.resolution, "Quadrature resolution")->capture_default_str();
  add_common(scan);

  app.add_subcommand("list-builtins", "List builtin bundles and metrics");
  app.add_subcommand("schema", "Print the config JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  try {
    cli::RunResult result;
    if (app.got_subcommand("list-builtins")) {
      std::cout << cli::builtins_text();
      return 0;
    }
    if (app.got_subcommand("schema")) {
      std::cout << finslerlab::config::config_schema().dump(2) << "\n";
      return 0;
    }
    if (app.got_subcommand("run")) {
      result = cli::run_file(config_path, cli::RunOptions{seed, parallel});
    } else if (app.got_subcommand("reproduce")) {
      result = cli::reproduce(example, cli::RunOptions{seed, false});
    } else {
      result = cli::scan(request);
    }
    if (const int code = emit(cli::render(result, format), out)) return code;
    return result.exit_code;
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return cli::kExitConfig;
  }
}
