#include "finslerlab/config.hpp"

#include <cstdio>
#include <map>
#include <set>

#include "finslerlab/errors.hpp"

namespace finslerlab::config {

using nlohmann::json;

namespace {

enum class ParamKind { kCount, kDegree, kPoint, kEpsilon };

// Allowed `params` keys per task.
const std::map<std::string, std::map<std::string, ParamKind>>& task_table() {
  static const std::map<std::string, std::map<std::string, ParamKind>> table{
      {"check-atlas", {{"samples", ParamKind::kCount}}},
      {"check-homogeneity", {{"samples", ParamKind::kCount}}},
      {"strong-pseudoconvexity", {{"samples", ParamKind::kCount}}},
      {"convexity", {{"samples", ParamKind::kCount}, {"pairs", ParamKind::kCount}}},
      {"strong-convexity", {{"samples", ParamKind::kCount}}},
      {"kobayashi-sign", {{"samples", ParamKind::kCount}}},
      {"transversal-signature", {{"samples", ParamKind::kCount}}},
      {"psh-total", {{"samples", ParamKind::kCount}}},
      {"line-curvature-signature", {{"samples", ParamKind::kCount}}},
      {"hk-gram", {{"k", ParamKind::kDegree}, {"z", ParamKind::kPoint}}},
      {"griffiths-scan", {{"samples", ParamKind::kCount}}},
      {"theorem1-pipeline", {{"k", ParamKind::kDegree}, {"samples", ParamKind::kCount}, {"epsilon", ParamKind::kEpsilon}}},
      {"reproduce-example-4.1", {}},
      {"reproduce-example-4.2", {}},
      {"example-4.1-convexity", {}},
  };
  return table;
}

std::string join(const std::string& base, const std::string& key) { return base + "/" + key; }
std::string join(const std::string& base, std::size_t index) { return base + "/" + std::to_string(index); }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(join(path, key), "unknown field");
  }
}

long long get_int(const json& v, const std::string& path, long long lo, long long hi) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const long long x = v.get<long long>();
  if (x < lo || x > hi) {
    throw ConfigError(path, "value " + std::to_string(x) + " out of range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  }
  return x;
}

double get_positive(const json& v, const std::string& path, bool allow_zero = false) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0)) {
    throw ConfigError(path, allow_zero ? "must be finite and >= 0" : "must be finite and > 0");
  }
  return x;
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

bundles::BundleSpec parse_bundle(const json& v, const std::string& path) {
  if (v.is_string()) {
    try {
      return bundles::parse_bundle_name(v.get<std::string>());
    } catch (const DomainError& e) {
      throw ConfigError(path, e.what());
    }
  }
  reject_unknown(v, path, {"family", "rank", "degrees", "weights", "base_dim"});
  if (!v.contains("family")) throw ConfigError(join(path, "family"), "required");
  const std::string family = get_string(v["family"], join(path, "family"));
  bundles::BundleSpec spec;
  if (family == "point_space") {
    spec.family = bundles::Family::kPointSpace;
    spec.base_dim = 0;
  } else if (family == "line_sum") {
    spec.family = bundles::Family::kLineSum;
    spec.base_dim = 1;
  } else if (family == "trivial_weighted") {
    spec.family = bundles::Family::kTrivialWeighted;
    spec.base_dim = 1;
  } else if (family == "quartic_finsler") {
    spec.family = bundles::Family::kQuarticFinsler;
    spec.base_dim = 1;
  } else {
    throw ConfigError(join(path, "family"), "unknown family '" + family + "'");
  }
  if (v.contains("rank")) spec.rank = static_cast<int>(get_int(v["rank"], join(path, "rank"), 1, 4));
  if (v.contains("base_dim")) {
    const int lo = spec.family == bundles::Family::kPointSpace ? 0 : 1;
    const int hi = spec.family == bundles::Family::kPointSpace ? 0 : (spec.family == bundles::Family::kLineSum ? 1 : 2);
    spec.base_dim = static_cast<int>(get_int(v["base_dim"], join(path, "base_dim"), lo, hi));
  }
  if (spec.family == bundles::Family::kLineSum) {
    if (v.contains("rank") && spec.rank != 2) throw ConfigError(join(path, "rank"), "line_sum has rank 2");
    spec.rank = 2;
    const std::string p = join(path, "degrees");
    if (!v.contains("degrees") || !v["degrees"].is_array() || v["degrees"].size() != 2) {
      throw ConfigError(p, "expected two integer degrees");
    }
    for (std::size_t i = 0; i < 2; ++i) {
      spec.degrees.push_back(static_cast<int>(get_int(v["degrees"][i], join(p, i), -16, 16)));
    }
  } else if (v.contains("degrees")) {
    throw ConfigError(join(path, "degrees"), "only line_sum takes degrees");
  }
  if (spec.family == bundles::Family::kTrivialWeighted) {
    const std::string p = join(path, "weights");
    if (!v.contains("weights") || !v["weights"].is_array()) throw ConfigError(p, "expected an array of weights");
    if (v["weights"].size() != static_cast<std::size_t>(spec.rank)) throw ConfigError(p, "needs exactly rank entries");
    for (std::size_t i = 0; i < v["weights"].size(); ++i) {
      const json& w = v["weights"][i];
      if (!w.is_number() || !std::isfinite(w.get<double>())) throw ConfigError(join(p, i), "expected a finite number");
      spec.weights.push_back(w.get<double>());
    }
  } else if (v.contains("weights")) {
    throw ConfigError(join(path, "weights"), "only trivial_weighted takes weights");
  }
  try {
    bundles::validate(spec);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return spec;
}

void validate_params(const std::string& task, const json& params, const std::string& path) {
  if (!params.is_object()) throw ConfigError(path, "expected an object");
  const auto& allowed = task_table().at(task);
  for (const auto& [key, value] : params.items()) {
    const auto it = allowed.find(key);
    const std::string p = join(path, key);
    if (it == allowed.end()) throw ConfigError(p, "unknown parameter for task '" + task + "'");
    switch (it->second) {
      case ParamKind::kCount: get_int(value, p, 1, 100000); break;
      case ParamKind::kDegree: get_int(value, p, 1, 8); break;
      case ParamKind::kEpsilon: get_positive(value, p, true); break;
      case ParamKind::kPoint:
        if (!value.is_array()) throw ConfigError(p, "expected an array of [re, im] pairs");
        for (std::size_t i = 0; i < value.size(); ++i) {
          const json& c = value[i];
          if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
            throw ConfigError(join(p, i), "expected [re, im]");
          }
        }
        break;
    }
  }
}

}  // namespace

const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, params] : task_table()) out.push_back(name);
    return out;
  }();
  return names;
}

ScenarioConfig from_json(const json& doc) {
  reject_unknown(doc, "", {"schema_version", "bundle", "metric", "tasks", "sampling", "tolerances", "k_range",
                           "epsilon", "quadrature", "output"});
  ScenarioConfig cfg;
  if (!doc.contains("schema_version")) throw ConfigError("/schema_version", "required");
  cfg.schema_version = static_cast<int>(get_int(doc["schema_version"], "/schema_version", kSchemaVersion, kSchemaVersion));

  if (!doc.contains("bundle")) throw ConfigError("/bundle", "required");
  cfg.bundle = parse_bundle(doc["bundle"], "/bundle");

  if (doc.contains("metric")) {
    try {
      cfg.metric = bundles::parse_metric_variant(get_string(doc["metric"], "/metric"));
    } catch (const DomainError& e) {
      throw ConfigError("/metric", e.what());
    }
  }

  if (!doc.contains("tasks")) throw ConfigError("/tasks", "required");
  const json& tasks = doc["tasks"];
  if (!tasks.is_array() || tasks.empty()) throw ConfigError("/tasks", "expected a non-empty array");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string p = join("/tasks", i);
    const json& t = tasks[i];
    reject_unknown(t, p, {"task", "expect", "params"});
    if (!t.contains("task")) throw ConfigError(join(p, "task"), "required");
    TaskSpec spec;
    spec.task = get_string(t["task"], join(p, "task"));
    if (!task_table().count(spec.task)) throw ConfigError(join(p, "task"), "unknown task '" + spec.task + "'");
    if (t.contains("expect")) spec.expect = get_string(t["expect"], join(p, "expect"));
    if (t.contains("params")) {
      validate_params(spec.task, t["params"], join(p, "params"));
      spec.params = t["params"];
    }
    cfg.tasks.push_back(std::move(spec));
  }

  if (doc.contains("sampling")) {
    const json& s = doc["sampling"];
    reject_unknown(s, "/sampling", {"count", "seed"});
    if (s.contains("count")) cfg.sampling.count = static_cast<std::size_t>(get_int(s["count"], "/sampling/count", 1, 100000));
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned() && !(s["seed"].is_number_integer() && s["seed"].get<long long>() >= 0)) {
        throw ConfigError("/sampling/seed", "expected a non-negative integer");
      }
      cfg.sampling.seed = s["seed"].get<std::uint64_t>();
    }
  }

  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    reject_unknown(t, "/tolerances", {"pd", "eig", "triangle_rel", "hessian_rel", "homogeneity", "atlas",
                                      "signature_band", "jet_agreement"});
    auto read = [&](const char* key, double& field) {
      if (t.contains(key)) field = get_positive(t[key], join("/tolerances", key));
    };
    read("pd", cfg.tolerances.pd);
    read("eig", cfg.tolerances.eig);
    read("triangle_rel", cfg.tolerances.triangle_rel);
    read("hessian_rel", cfg.tolerances.hessian_rel);
    read("homogeneity", cfg.tolerances.homogeneity);
    read("atlas", cfg.tolerances.atlas);
    read("signature_band", cfg.tolerances.signature_band);
    read("jet_agreement", cfg.tolerances.jet_agreement);
  }

  if (doc.contains("k_range")) {
    const json& k = doc["k_range"];
    if (!k.is_array() || k.size() != 2) throw ConfigError("/k_range", "expected [k_min, k_max]");
    cfg.k_min = static_cast<int>(get_int(k[0], "/k_range/0", 1, 8));
    cfg.k_max = static_cast<int>(get_int(k[1], "/k_range/1", 1, 8));
    if (cfg.k_min > cfg.k_max) throw ConfigError("/k_range", "k_min exceeds k_max");
  }

  if (doc.contains("epsilon")) cfg.epsilon = get_positive(doc["epsilon"], "/epsilon", true);

  if (doc.contains("quadrature")) {
    const json& q = doc["quadrature"];
    reject_unknown(q, "/quadrature", {"resolution", "density"});
    if (q.contains("resolution")) {
      cfg.quadrature.resolution = static_cast<int>(get_int(q["resolution"], "/quadrature/resolution", 4, 256));
    }
    if (q.contains("density")) {
      cfg.quadrature.density = get_string(q["density"], "/quadrature/density");
      if (cfg.quadrature.density != "induced" && cfg.quadrature.density != "fubini_study") {
        throw ConfigError("/quadrature/density", "expected \"induced\" or \"fubini_study\"");
      }
    }
  }

  if (doc.contains("output")) {
    const json& o = doc["output"];
    reject_unknown(o, "/output", {"format"});
    if (o.contains("format")) {
      cfg.output_format = get_string(o["format"], "/output/format");
      if (cfg.output_format != "json" && cfg.output_format != "text") {
        throw ConfigError("/output/format", "expected \"json\" or \"text\"");
      }
    }
  }
  return cfg;
}

ScenarioConfig load_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("parse error: ") + e.what());
  }
  return from_json(doc);
}

json to_json(const ScenarioConfig& c) {
  json tasks = json::array();
  for (const auto& t : c.tasks) {
    json entry{{"task", t.task}, {"params", t.params}};
    if (t.expect) entry["expect"] = *t.expect;
    tasks.push_back(std::move(entry));
  }
  return json{
      {"schema_version", c.schema_version},
      {"bundle", c.bundle.canonical_name()},
      {"metric", bundles::to_string(c.metric)},
      {"tasks", std::move(tasks)},
      {"sampling", {{"count", c.sampling.count}, {"seed", c.sampling.seed}}},
      {"tolerances",
       {{"pd", c.tolerances.pd},
        {"eig", c.tolerances.eig},
        {"triangle_rel", c.tolerances.triangle_rel},
        {"hessian_rel", c.tolerances.hessian_rel},
        {"homogeneity", c.tolerances.homogeneity},
        {"atlas", c.tolerances.atlas},
        {"signature_band", c.tolerances.signature_band},
        {"jet_agreement", c.tolerances.jet_agreement}}},
      {"k_range", {c.k_min, c.k_max}},
      {"epsilon", c.epsilon},
      {"quadrature", {{"resolution", c.quadrature.resolution}, {"density", c.quadrature.density}}},
      {"output", {{"format", c.output_format}}},
  };
}

std::string serialize(const ScenarioConfig& config) { return to_json(config).dump(); }

std::string config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json config_schema() {
  json tasks = json::object();
  for (const auto& [name, params] : task_table()) {
    json p = json::object();
    for (const auto& [key, kind] : params) {
      switch (kind) {
        case ParamKind::kCount: p[key] = "integer >= 1"; break;
        case ParamKind::kDegree: p[key] = "integer in 1..8"; break;
        case ParamKind::kEpsilon: p[key] = "number >= 0"; break;
        case ParamKind::kPoint: p[key] = "array of [re, im], one per base coordinate"; break;
      }
    }
    tasks[name] = p;
  }
  return json{
      {"schema_version", {{"type", "integer"}, {"required", true}, {"value", kSchemaVersion}}},
      {"bundle",
       {{"required", true},
        {"forms", {"builtin name string, e.g. \"line_sum(1,1)\"",
                   "object {family, rank, degrees, weights, base_dim}"}},
        {"families", bundles::list_builtins()}}},
      {"metric", {{"default", "default"}, {"values", {"default", "flat_frame"}}}},
      {"tasks",
       {{"required", true},
        {"item", {{"task", "name, see task_params"}, {"expect", "optional verdict string"}, {"params", "object"}}},
        {"task_params", tasks}}},
      {"sampling", {{"count", {{"default", 50}}}, {"seed", {{"default", 42}}}}},
      {"tolerances",
       {{"pd", 1e-10},
        {"eig", 1e-9},
        {"triangle_rel", 1e-9},
        {"hessian_rel", 1e-7},
        {"homogeneity", 1e-8},
        {"atlas", 1e-8},
        {"signature_band", 1e-7},
        {"jet_agreement", 1e-5}}},
      {"k_range", {{"default", {1, 4}}, {"bounds", "1 <= k_min <= k_max <= 8"}}},
      {"epsilon", {{"default", 1e-2}}},
      {"quadrature", {{"resolution", {{"default", 24}, {"bounds", "4..256"}}},
                      {"density", {{"default", "induced"}, {"values", {"induced", "fubini_study"}}}}}},
      {"output", {{"format", {{"default", "json"}, {"values", {"json", "text"}}}}}},
  };
}

}  // namespace finslerlab::config
