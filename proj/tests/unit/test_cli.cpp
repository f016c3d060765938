#include <cmath>

#include "doctest.h"
#include "runner.hpp"

using namespace finslerlab;
using nlohmann::json;

namespace {

std::string doc(const std::string& bundle, const json& tasks, std::uint64_t seed = 42) {
  return json{{"schema_version", 1}, {"bundle", bundle}, {"tasks", tasks}, {"sampling", {{"count", 10}, {"seed", seed}}}}
      .dump();
}

double re(const json& c) { return c[0].get<double>(); }

}  // namespace

TEST_CASE("run: Example 4.2 config") {
  const auto r = cli::run_text(doc("point_space(2)", json::array({
                                                         {{"task", "reproduce-example-4.2"}, {"expect", "reproduced"}},
                                                         {{"task", "hk-gram"}, {"params", {{"k", 2}}}, {"expect", "positive_definite"}},
                                                     })));
  CHECK(r.exit_code == cli::kExitOk);
  const json& gram = r.report["tasks"][1]["result"]["matrix"];
  const double want[] = {M_PI / 3, M_PI / 3, M_PI / 6};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(re(gram[i][j]) - (i == j ? want[i] : 0.0)) < 1e-8);
      CHECK(std::abs(gram[i][j][1].get<double>()) < 1e-8);
    }
  }
  for (const json& t : r.report["tasks"]) {
    CHECK(t.contains("tolerance"));
    CHECK(t.contains("samples"));
  }
}

TEST_CASE("run: asserting convexity of the Example 4.1 norm is a mismatch") {
  const auto r = cli::run_text(doc("point_space(2)", json::array({{{"task", "example-4.1-convexity"}, {"expect", "convex"}}})));
  CHECK(r.exit_code == cli::kExitMismatch);
  const json& t = r.report["tasks"][0];
  CHECK(t["verdict"] == "non_convex");
  CHECK(t["matched"] == false);
  CHECK(t["result"]["power_form_hessian_xx"] == json::parse("[[14.0,16.0],[16.0,14.0]]"));
  CHECK(t["result"]["hessian_violations"].get<int>() > 0);
}

TEST_CASE("run: exit codes") {
  CHECK(cli::run_text("{\"schema_version\": 1,").exit_code == cli::kExitConfig);
  CHECK(cli::run_text(doc("point_space(2)", json::array({{{"task", "fly"}}}))).exit_code == cli::kExitConfig);
  CHECK(cli::run_file("/nonexistent/config.json").exit_code == cli::kExitConfig);

  // domain error inside a task
  const auto d = cli::run_text(doc("point_space(2)", json::array({{{"task", "kobayashi-sign"}}})));
  CHECK(d.exit_code == cli::kExitConfig);
  CHECK(d.report["tasks"][0]["status"] == "error");
  CHECK(d.report["tasks"][0]["error"]["kind"] == "domain");

  const auto z = cli::run_text(doc("line_sum(1,1)", json::array({{{"task", "hk-gram"}, {"params", {{"z", json::parse("[[0,0],[1,0]]")}}}}})));
  CHECK(z.exit_code == cli::kExitConfig);
  CHECK(z.report["tasks"][0]["error"]["field_path"] == "/tasks/0/params/z");
}

TEST_CASE("reproduce") {
  const auto a = cli::reproduce("4.1");
  CHECK(a.exit_code == 0);
  const json& eig = a.report["tasks"][0]["result"]["eigenvalues"];
  CHECK(eig[0].get<double>() == doctest::Approx(-2.0));
  CHECK(eig[1].get<double>() == doctest::Approx(30.0));

  const auto b = cli::reproduce("4.2");
  CHECK(b.exit_code == 0);
  const json& ints = b.report["tasks"][0]["result"]["integrals"];
  CHECK(std::abs(re(ints["H(e1^2,e2^2)"])) < 1e-12);
  CHECK(re(ints["H(e1e2,e1e2)"]) == doctest::Approx(M_PI / 6).epsilon(1e-12));

  CHECK_THROWS_AS(cli::reproduce("9.9"), cli::UsageError);
}

TEST_CASE("scan gates") {
  cli::ScanRequest neg{"line_sum(-1,-1)"};
  neg.seed = 7;
  const auto r = cli::scan(neg);
  CHECK(r.exit_code == cli::kExitMismatch);
  CHECK(r.report["verdict"] == "gate_failed");
  CHECK(r.report["gate"]["verdict"] == "negative");
  CHECK(!r.report["gate"]["max_witness"].is_null());

  const auto p = cli::scan(cli::ScanRequest{"point_space(2)"});
  CHECK(p.exit_code == cli::kExitMismatch);
  CHECK(p.report["verdict"] == "gate_rejected");

  CHECK(cli::scan(cli::ScanRequest{"nothing(1)"}).exit_code == cli::kExitConfig);
}

TEST_CASE("reports are deterministic") {
  const std::string d = doc("line_sum(1,1)", json::array({
                                                 {{"task", "check-atlas"}, {"expect", "compatible"}},
                                                 {{"task", "kobayashi-sign"}, {"expect", "positive"}},
                                                 {{"task", "line-curvature-signature"}, {"expect", "(1,1,0)"}},
                                                 {{"task", "convexity"}, {"params", {{"pairs", 200}}}, {"expect", "convex"}},
                                             }),
                            7);
  const auto a = cli::run_text(d);
  const auto b = cli::run_text(d);
  const auto c = cli::run_text(d, cli::RunOptions{std::nullopt, true});
  CHECK(a.exit_code == 0);
  CHECK(a.report.dump() == b.report.dump());
  CHECK(a.report.dump() == c.report.dump());
  CHECK(a.report.dump().find("millisecond") == std::string::npos);
  CHECK(a.report.dump().find("timing") == std::string::npos);

  const auto s = cli::run_text(d, cli::RunOptions{std::uint64_t{8}, false});
  CHECK(s.report["seed"] == 8);
  CHECK(s.report["config_hash"] != a.report["config_hash"]);
  CHECK(cli::render_text(a).find(" ms") != std::string::npos);
}
