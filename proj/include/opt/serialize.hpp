#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "opt/errors.hpp"
#include "opt/methods.hpp"
#include "opt/problems.hpp"

// JSON serialization of instance configs, method specs, benchmark configs,
// and generated instances (matrix row-major + dims, self-describing for
// replay outside this codebase).

namespace opt {

using json = nlohmann::json;

namespace detail {

inline std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline void reject_unknown_fields(const json& j, std::initializer_list<const char*> known,
                                  const char* what) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(ErrorCode::invalid_argument, std::string(what) + ": unknown field '" + item.key() + "'");
  }
}

}  // namespace detail

inline json instance_config_to_json(const InstanceConfig& c) {
  return json{{"kind", instance_kind_name(c.kind)},
              {"m", c.m},
              {"n", c.n},
              {"sparsity", c.sparsity},
              {"lambda", c.lambda},
              {"seed", c.seed},
              {"mu", c.mu},
              {"kappa", c.kappa},
              {"L_declared", c.L_declared},
              {"use_declared_L", c.use_declared_L},
              {"unscaled_half_vec", c.unscaled_half_vec}};
}

// Starts from the kind's defaults and overrides the fields present, so a
// config file only needs to state what it changes.
inline InstanceConfig instance_config_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    fail(ErrorCode::invalid_argument, "instance config: missing 'kind'");
  detail::reject_unknown_fields(j,
                                {"kind", "m", "n", "sparsity", "lambda", "seed", "mu", "kappa",
                                 "L_declared", "use_declared_L", "unscaled_half_vec"},
                                "instance config");
  InstanceConfig c = InstanceConfig::defaults(instance_kind_from_name(j.at("kind").get<std::string>()));
  if (j.contains("m")) c.m = j.at("m").get<int>();
  if (j.contains("n")) c.n = j.at("n").get<int>();
  if (j.contains("sparsity")) c.sparsity = j.at("sparsity").get<int>();
  if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("mu")) c.mu = j.at("mu").get<double>();
  if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
  if (j.contains("L_declared")) c.L_declared = j.at("L_declared").get<double>();
  if (j.contains("use_declared_L")) c.use_declared_L = j.at("use_declared_L").get<bool>();
  if (j.contains("unscaled_half_vec")) c.unscaled_half_vec = j.at("unscaled_half_vec").get<bool>();
  return c;
}

inline json method_spec_to_json(const MethodSpec& s) {
  if (s.family == Family::composed) {
    return json{{"family", "composed"},
                {"first", method_spec_to_json(*s.first)},
                {"second", method_spec_to_json(*s.second)}};
  }
  json j{{"family", family_name(s.family)}, {"form", form_name(s.form)}};
  if (s.family == Family::fpgm_m) j["switch_index"] = s.switch_index;
  j["lambda"] = s.lambda;
  if (s.item_table_seed) j["item_table_seed"] = true;
  return j;
}

inline MethodSpec method_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("family"))
    fail(ErrorCode::invalid_argument, "method spec: missing 'family'");
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "composed") {
    detail::reject_unknown_fields(j, {"family", "first", "second"}, "method spec");
    if (!j.contains("first") || !j.contains("second"))
      fail(ErrorCode::invalid_argument, "composed method spec needs 'first' and 'second'");
    return MethodSpec::make_composed(method_spec_from_json(j.at("first")),
                                     method_spec_from_json(j.at("second")));
  }
  detail::reject_unknown_fields(
      j, {"family", "form", "lambda", "switch_index", "item_table_seed"}, "method spec");
  MethodSpec s = MethodSpec::make(family_from_name(fam));
  if (j.contains("form")) {
    const std::string f = j.at("form").get<std::string>();
    if (f == "momentum")
      s.form = Form::momentum;
    else if (f == "auxiliary")
      s.form = Form::auxiliary;
    else
      fail(ErrorCode::invalid_argument, "method spec: unknown form '" + f + "'");
  }
  if (j.contains("lambda")) s.lambda = j.at("lambda").get<double>();
  if (j.contains("switch_index")) s.switch_index = j.at("switch_index").get<int>();
  if (j.contains("item_table_seed")) s.item_table_seed = j.at("item_table_seed").get<bool>();
  return s;
}

// A short stable label for file names and CSV method columns.
inline std::string method_label(const MethodSpec& s) {
  if (s.family == Family::composed) return method_label(*s.first) + "+" + method_label(*s.second);
  std::string label = family_name(s.family);
  if (s.family == Family::fpgm_m) label += "_" + std::to_string(s.switch_index);
  return label;
}

enum class Metric { F_gap, gmap_sq, subgrad_sq, dist_sq };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::F_gap: return "F_gap";
    case Metric::gmap_sq: return "gmap_sq";
    case Metric::subgrad_sq: return "subgrad_sq";
    case Metric::dist_sq: return "dist_sq";
  }
  return "unknown";
}

inline Metric metric_from_name(const std::string& s) {
  for (Metric m : {Metric::F_gap, Metric::gmap_sq, Metric::subgrad_sq, Metric::dist_sq})
    if (s == metric_name(m)) return m;
  fail(ErrorCode::invalid_argument, "unknown metric: " + s);
}

struct BenchConfig {
  InstanceConfig instance;
  std::vector<MethodSpec> methods;
  std::vector<int> horizons;
  std::vector<Metric> metrics = {Metric::gmap_sq};
  std::string out_dir = "bench_out";
};

inline BenchConfig bench_config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::invalid_argument, "bench config must be a JSON object");
  detail::reject_unknown_fields(j, {"instance", "methods", "horizons", "metrics", "out"},
                                "bench config");
  BenchConfig c;
  if (!j.contains("instance")) fail(ErrorCode::invalid_argument, "bench config: missing 'instance'");
  c.instance = instance_config_from_json(j.at("instance"));
  if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty())
    fail(ErrorCode::invalid_argument, "bench config: 'methods' must be a non-empty array");
  for (const auto& m : j.at("methods")) c.methods.push_back(method_spec_from_json(m));
  if (!j.contains("horizons") || !j.at("horizons").is_array() || j.at("horizons").empty())
    fail(ErrorCode::invalid_argument, "bench config: 'horizons' must be a non-empty array");
  for (const auto& h : j.at("horizons")) {
    const int K = h.get<int>();
    if (K < 1) fail(ErrorCode::invalid_argument, "bench config: horizons must be >= 1");
    c.horizons.push_back(K);
  }
  if (j.contains("metrics")) {
    c.metrics.clear();
    for (const auto& m : j.at("metrics")) c.metrics.push_back(metric_from_name(m.get<std::string>()));
    if (c.metrics.empty()) fail(ErrorCode::invalid_argument, "bench config: empty 'metrics'");
  }
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  return c;
}

inline json instance_to_json(const GeneratedInstance& gi) {
  json j;
  j["config"] = instance_config_to_json(gi.config);
  j["A_rows"] = gi.A.rows();
  j["A_cols"] = gi.A.cols();
  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(gi.A.size()));
  for (Eigen::Index r = 0; r < gi.A.rows(); ++r)
    for (Eigen::Index cl = 0; cl < gi.A.cols(); ++cl) a.push_back(gi.A(r, cl));
  j["A"] = std::move(a);
  j["b"] = detail::to_std(gi.b);
  j["x_true"] = detail::to_std(gi.x_true);
  return j;
}

}  // namespace opt
