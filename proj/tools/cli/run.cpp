#include "run.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "dimdecomp/error.hpp"
#include "embedded_configs.hpp"

namespace dimdecomp::cli {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(where + ": unknown field '" + k + "'");
}

template <class T>
T get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

std::size_t get_size(const Json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_number_integer() || j[key].get<long long>() < 0)
    throw ConfigError(std::string("field '") + key + "' must be a non-negative integer");
  return j[key].get<std::size_t>();
}

std::vector<std::size_t> get_sizes(const Json& j, const char* key, std::vector<std::size_t> fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array() || j[key].empty()) throw ConfigError(std::string("field '") + key + "' must be a non-empty list");
  std::vector<std::size_t> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer() || v.get<long long>() < 1)
      throw ConfigError(std::string("field '") + key + "' must list positive integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

std::uint64_t seed_of(const Json& config) {
  if (!config.contains("seed") || config["seed"].is_null()) return 1;
  if (!config["seed"].is_number_unsigned() && !(config["seed"].is_number_integer() && config["seed"].get<long long>() >= 0))
    throw ConfigError("seed must be a non-negative integer");
  return config["seed"].get<std::uint64_t>();
}

IntegrationSpec integration_or(const Json& config, const char* key, IntegrationSpec fallback) {
  if (!config.contains(key)) return fallback;
  return integration_from_json(config[key], seed_of(config));
}

// Exact table of user-facing polynomial terms: coefficients c0 + c1 x + c2 x^2 + ...
ScalarFunction polynomial(const Json& j, const std::string& where) {
  if (j.is_null()) return nullptr;
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a list of polynomial coefficients");
  std::vector<double> c;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + ": coefficients must be numbers");
    c.push_back(v.get<double>());
  }
  return [c](double x) {
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
    return r;
  };
}

MarginalDistribution marginal_from_json(const Json& j, const std::string& where) {
  const std::string kind = get<std::string>(j, "kind", "");
  if (kind == "uniform") {
    check_keys(j, {"kind", "a", "b"}, where);
    return MarginalDistribution(Uniform{get(j, "a", 0.0), get(j, "b", 1.0)});
  }
  if (kind == "normal") {
    check_keys(j, {"kind", "mean", "stddev"}, where);
    return MarginalDistribution(Normal{get(j, "mean", 0.0), get(j, "stddev", 1.0)});
  }
  if (kind == "lognormal") {
    check_keys(j, {"kind", "log_mean", "log_stddev", "mean", "cov"}, where);
    if (j.contains("mean") || j.contains("cov")) {
      if (j.contains("log_mean") || j.contains("log_stddev"))
        throw ConfigError(where + ": give either (mean, cov) or (log_mean, log_stddev)");
      return MarginalDistribution(Lognormal::from_mean_cov(get(j, "mean", 1.0), get(j, "cov", 0.0)));
    }
    return MarginalDistribution(Lognormal{get(j, "log_mean", 0.0), get(j, "log_stddev", 1.0)});
  }
  throw ConfigError(where + ": kind must be uniform, normal or lognormal");
}

// Six significant digits, stable across platforms.
std::string num(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> unique_warnings(const StudyResult& r) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& w : r.warnings)
    if (seen.insert(w).second) out.push_back(w);
  return out;
}

// --- reproduce ---------------------------------------------------------------

StudyResult run_reproduce(const Json& c) {
  const std::string name = c.at("reproduce").get<std::string>();
  const auto seed = seed_of(c);
  if (name == "table1") {
    check_keys(c, {"reproduce", "function", "dimensions", "nu0", "seed", "output"}, name);
    Table1Options o;
    o.dimensions = get_sizes(c, "dimensions", o.dimensions);
    o.nu0 = get(c, "nu0", o.nu0);
    return table1(o);
  }
  if (name == "table2") {
    check_keys(c, {"reproduce", "function", "dimensions", "max_order", "mu0", "integration", "seed", "output"}, name);
    Table2Options o;
    o.dimensions = get_sizes(c, "dimensions", o.dimensions);
    o.max_order = get_size(c, "max_order", o.max_order);
    o.mu0 = get(c, "mu0", o.mu0);
    o.integration = integration_or(c, "integration", o.integration);
    return table2(o);
  }
  if (name == "table3") {
    check_keys(c, {"reproduce", "function", "n", "max_order", "y_empty", "integration", "seed", "output"}, name);
    Table3Options o;
    o.n = get_size(c, "n", o.n);
    o.max_order = get_size(c, "max_order", o.max_order);
    o.y_empty = get(c, "y_empty", o.y_empty);
    o.integration = integration_or(c, "integration", o.integration);
    return table3(o);
  }
  if (name == "table4") {
    check_keys(c,
               {"reproduce", "p", "dimensions", "blend_dimension", "y_empty", "integration", "integration_blend", "seed",
                "output"},
               name);
    Table4Options o;
    o.p = get(c, "p", o.p);
    o.dimensions = get_sizes(c, "dimensions", o.dimensions);
    o.blend_dimension = get_size(c, "blend_dimension", o.blend_dimension);
    o.y_empty = get(c, "y_empty", o.y_empty);
    o.integration_sums = integration_or(c, "integration", o.integration_sums);
    o.integration_blend = integration_or(c, "integration_blend", o.integration_blend);
    return table4(o);
  }
  auto power_mean = [&](const Json& j) {
    PowerMeanOptions b;
    b.n = get_size(j, "n", b.n);
    b.add_integration = integration_or(j, "add_integration", b.add_integration);
    b.grid_points = get(j, "grid_points", b.grid_points);
    b.integration = integration_or(j, "integration", IntegrationSpec::rqmc(1U << 16, seed, 8));
    return b;
  };
  if (name == "example4-errors") {
    check_keys(c,
               {"reproduce", "function", "n", "exponents", "add_integration", "grid_points", "integration", "seed",
                "output"},
               name);
    Example4ErrorOptions o;
    o.build = power_mean(c);
    if (c.contains("exponents")) {
      o.exponents.clear();
      for (auto s : get_sizes(c, "exponents", {})) o.exponents.push_back(static_cast<int>(s));
    }
    return example4_errors(o);
  }
  if (name == "example4-ccdf") {
    check_keys(c,
               {"reproduce", "function", "n", "m", "count", "points", "add_integration", "grid_points", "integration",
                "seed", "output"},
               name);
    Example4CcdfOptions o;
    o.build = power_mean(c);
    o.m = get(c, "m", o.m);
    o.count = get_size(c, "count", o.count);
    o.points = get_size(c, "points", o.points);
    o.seed = seed;
    return example4_ccdf(o);
  }
  if (name == "example2-pdf") {
    check_keys(c,
               {"reproduce", "function", "n", "max_order", "y_empty", "count", "bins", "integration", "seed", "output"},
               name);
    Example2PdfOptions o;
    o.n = get_size(c, "n", o.n);
    o.max_order = get_size(c, "max_order", o.max_order);
    o.y_empty = get(c, "y_empty", o.y_empty);
    o.count = get_size(c, "count", o.count);
    o.bins = get_size(c, "bins", o.bins);
    o.seed = seed;
    o.integration = integration_or(c, "integration", o.integration);
    return example2_pdf(o);
  }
  throw ConfigError("unknown reproduction: " + name);
}

// --- analyze -----------------------------------------------------------------

StudyResult run_analyze(const Json& c) {
  check_keys(c,
             {"analysis", "function", "params", "input_model", "truncation", "methods", "p", "count", "bins",
              "quantity", "integration", "add_integration", "grid_points", "max_order", "force_numeric", "seed",
              "output"},
             "analyze");
  const std::string analysis = get<std::string>(c, "analysis", "variance_table");
  InputModel model = example_model(1);
  FunctionSpec y = function_from_json(c, model);
  const std::size_t n = y.dimension();
  const auto seed = seed_of(c);

  std::size_t s_min = 1, s_max = analysis == "effective_dimension" ? n : 1;
  if (c.contains("truncation")) {
    const auto& t = c["truncation"];
    check_keys(t, {"min", "max"}, "truncation");
    s_min = get_size(t, "min", s_min);
    s_max = get_size(t, "max", std::max(s_min, s_max));
  }
  if (s_min < 1 || s_min > s_max) throw ConfigError("truncation must satisfy 1 <= min <= max");
  if (s_max > n) throw ConfigError("truncation max " + std::to_string(s_max) + " exceeds N = " + std::to_string(n));

  std::vector<Method> methods{Method::add, Method::fdd, Method::hdd_linear};
  if (c.contains("methods")) {
    if (!c["methods"].is_array() || c["methods"].empty()) throw ConfigError("methods must be a non-empty list");
    methods.clear();
    for (const auto& m : c["methods"]) {
      try {
        methods.push_back(parse_method(m.get<std::string>()));
      } catch (const std::exception&) {
        throw ConfigError("unknown method " + m.dump() +
                          " (expected add, fdd, hdd_linear, hdd_constrained or hdd_nonlinear)");
      }
      if (methods.back() == Method::exact) throw ConfigError("'exact' is not an approximation method");
    }
  }

  PipelineOptions po;
  po.integration = integration_or(c, "integration", IntegrationSpec::tensor_gauss(4));
  if (c.contains("add_integration")) po.add_integration = integration_from_json(c["add_integration"], seed);
  po.grid_points = get(c, "grid_points", 0);
  po.force_numeric = get(c, "force_numeric", false);
  if (c.contains("max_order")) {
    po.max_order = get_size(c, "max_order", s_max);
    if (*po.max_order < s_max || *po.max_order > n) throw ConfigError("max_order must lie in [truncation max, N]");
  } else if (!y.as_blended() || po.force_numeric) {
    po.max_order = s_max;
  }
  try {
    po.integration.validate(n);
    if (po.add_integration) po.add_integration->validate(n);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  Pipeline pipe(std::move(y), model, po);
  StudyResult out;
  out.name = "analyze-" + analysis;
  out.metadata.emplace_back("function", pipe.function().name().empty() ? "inline" : pipe.function().name());
  out.metadata.emplace_back("n", std::to_string(n));
  out.metadata.emplace_back("backend", po.integration.id());
  if (po.add_integration) out.metadata.emplace_back("add_backend", po.add_integration->id());
  out.metadata.emplace_back("add", pipe.add_provenance());

  if (analysis == "variance_table") {
    variance_table(pipe, methods, s_min, s_max, out);
  } else if (analysis == "effective_dimension") {
    const double p = get(c, "p", 0.99);
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
    effective_dimensions(pipe, methods, p, out);
  } else if (analysis == "univariate_errors") {
    univariate_error_rows(pipe, out);
  } else if (analysis == "distribution") {
    DistributionOptions d;
    d.methods = methods;
    d.s_min = s_min;
    d.s_max = s_max;
    d.count = get_size(c, "count", d.count);
    d.seed = seed;
    const std::string q = get<std::string>(c, "quantity", "ccdf");
    if (q != "ccdf" && q != "pdf") throw ConfigError("quantity must be ccdf or pdf");
    d.quantity = q == "pdf" ? DistributionQuantity::pdf : DistributionQuantity::ccdf;
    d.bins = get_size(c, "bins", q == "pdf" ? 100 : 201);
    if (d.count < 1000) throw ConfigError("count must be at least 1000");
    distributions(pipe, d, out);
  } else {
    throw ConfigError("analysis must be variance_table, effective_dimension, univariate_errors or distribution");
  }
  return out;
}

std::string layout_grid(const StudyResult& r, const std::string& method, const std::string& corner) {
  std::vector<std::size_t> ns, ss;
  std::map<std::pair<std::size_t, std::size_t>, double> cell;
  for (const auto& row : r.rows) {
    if (row.method != method) continue;
    if (std::find(ns.begin(), ns.end(), row.n) == ns.end()) ns.push_back(row.n);
    if (std::find(ss.begin(), ss.end(), row.s) == ss.end()) ss.push_back(row.s);
    cell[{row.s, row.n}] = row.value;
  }
  std::sort(ss.begin(), ss.end());
  std::ostringstream os;
  os << std::left << std::setw(6) << corner;
  for (auto n : ns) os << std::right << std::setw(14) << ("N=" + std::to_string(n));
  os << "\n";
  for (auto s : ss) {
    os << std::left << std::setw(6) << s;
    for (auto n : ns) {
      auto it = cell.find({s, n});
      os << std::right << std::setw(14) << (it == cell.end() ? "" : num(it->second));
    }
    os << "\n";
  }
  return os.str();
}

std::string layout_columns(const StudyResult& r, const std::vector<std::string>& methods, const std::string& corner,
                           bool key_is_x) {
  std::vector<double> keys;
  std::map<std::pair<double, std::string>, double> cell;
  for (const auto& row : r.rows) {
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) continue;
    const double k = key_is_x ? row.x.value_or(0.0) : static_cast<double>(row.s);
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    cell[{k, row.method}] = row.value;
  }
  std::ostringstream os;
  os << std::left << std::setw(6) << corner;
  for (const auto& m : methods) os << std::right << std::setw(std::max<int>(14, static_cast<int>(m.size()) + 2)) << m;
  os << "\n";
  for (double k : keys) {
    os << std::left << std::setw(6) << num(k);
    for (const auto& m : methods) {
      auto it = cell.find({k, m});
      os << std::right << std::setw(std::max<int>(14, static_cast<int>(m.size()) + 2))
         << (it == cell.end() ? "" : num(it->second));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace

std::vector<std::string> reproduce_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : kEmbeddedConfigs) out.emplace_back(name);
  return out;
}

Json frozen_config(const std::string& name) {
  for (const auto& [n, text] : kEmbeddedConfigs)
    if (n == name) return Json::parse(text);
  throw ConfigError("unknown reproduction '" + name + "'");
}

Json parse_backend(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto to_size = [&](const std::string& s) -> long long {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used != s.size() || v < 1) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad backend argument '" + s + "' in '" + text + "'");
    }
  };
  Json j;
  j["backend"] = kind;
  if (kind == "tensor_gauss") {
    if (!arg.empty()) j["points"] = to_size(arg);
  } else if (kind == "monte_carlo") {
    if (!arg.empty()) j["count"] = to_size(arg);
  } else if (kind == "rqmc") {
    if (!arg.empty()) {
      const auto x = arg.find('x');
      j["count"] = to_size(arg.substr(0, x));
      if (x != std::string::npos) j["replicates"] = to_size(arg.substr(x + 1));
    }
  } else {
    throw ConfigError("backend must be tensor_gauss[:n], monte_carlo[:count] or rqmc[:count[xreplicates]]");
  }
  return j;
}

IntegrationSpec integration_from_json(const Json& j, std::uint64_t default_seed) {
  check_keys(j, {"backend", "points", "count", "replicates", "seed", "target_rel_tolerance"}, "integration");
  const std::string kind = get<std::string>(j, "backend", "");
  IntegrationSpec spec;
  const std::uint64_t seed = j.contains("seed") ? get<std::uint64_t>(j, "seed", default_seed) : default_seed;
  if (kind == "tensor_gauss") {
    spec = IntegrationSpec::tensor_gauss(get(j, "points", 4));
  } else if (kind == "monte_carlo") {
    spec = IntegrationSpec::monte_carlo(get_size(j, "count", 100000), seed);
  } else if (kind == "rqmc") {
    spec = IntegrationSpec::rqmc(get_size(j, "count", 1U << 16), seed, get(j, "replicates", 8));
  } else {
    throw ConfigError("integration.backend must be tensor_gauss, monte_carlo or rqmc");
  }
  spec.target_rel_tolerance = get(j, "target_rel_tolerance", 0.0);
  if (spec.target_rel_tolerance < 0.0) throw ConfigError("target_rel_tolerance must be non-negative");
  return spec;
}

InputModel input_model_from_json(const Json& j, std::size_t n) {
  if (j.is_array()) {
    std::vector<MarginalDistribution> m;
    for (std::size_t i = 0; i < j.size(); ++i)
      m.push_back(marginal_from_json(j[i], "input_model[" + std::to_string(i) + "]"));
    if (m.size() != n)
      throw ConfigError("input_model lists " + std::to_string(m.size()) + " marginals but the function has N = " +
                        std::to_string(n));
    return InputModel(std::move(m));
  }
  check_keys(j, {"iid"}, "input_model");
  if (!j.contains("iid")) throw ConfigError("input_model: expected a list of marginals or {\"iid\": marginal}");
  return InputModel::iid(marginal_from_json(j["iid"], "input_model.iid"), n);
}

FunctionSpec function_from_json(const Json& c, InputModel& model_out) {
  if (!c.contains("function")) throw ConfigError("missing field 'function'");
  const auto& f = c["function"];
  auto model_for = [&](std::size_t n) {
    return c.contains("input_model") ? input_model_from_json(c["input_model"], n) : example_model(n);
  };
  try {
    if (f.is_string()) {
      const std::string name = f.get<std::string>();
      const auto names = example_names();
      if (std::find(names.begin(), names.end(), name) == names.end())
        throw ConfigError("unknown function '" + name + "'");
      ExampleParams p;
      if (c.contains("params")) {
        const auto& q = c["params"];
        check_keys(q, {"n", "m", "y_empty", "nu0", "mu0"}, "params");
        p.n = get_size(q, "n", p.n);
        p.m = get(q, "m", p.m);
        p.y_empty = get(q, "y_empty", p.y_empty);
        p.nu0 = get(q, "nu0", p.nu0);
        p.mu0 = get(q, "mu0", p.mu0);
      }
      if (p.n < 1 || p.n > IndexSubset::kMaxDimension) throw ConfigError("params.n must lie in [1, 64]");
      model_out = model_for(p.n);
      return make_example(name, p);
    }
    const std::string kind = get<std::string>(f, "kind", "");
    if (kind == "power_mean") {
      check_keys(f, {"kind", "m", "n"}, "function");
      model_out = model_for(get_size(f, "n", 1));
      return FunctionSpec(PowerMean{get(f, "m", 1), get_size(f, "n", 1)}, "power_mean");
    }
    if (kind == "standardized_blend") {
      check_keys(f, {"kind", "y_empty", "n"}, "function");
      model_out = model_for(get_size(f, "n", 1));
      return FunctionSpec(StandardizedBlend{get(f, "y_empty", 0.0), get_size(f, "n", 1)}, "standardized_blend");
    }
    if (kind == "multiplicative" || kind == "additive" || kind == "blended") {
      check_keys(f, {"kind", "nu0", "mu0", "terms"}, "function");
      if (!f.contains("terms") || !f["terms"].is_array() || f["terms"].empty())
        throw ConfigError("function.terms must be a non-empty list");
      const std::size_t n = f["terms"].size();
      model_out = model_for(n);
      std::vector<UnivariateTerm> terms;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& t = f["terms"][i];
        const std::string where = "function.terms[" + std::to_string(i) + "]";
        check_keys(t, {"h", "g"}, where);
        terms.push_back(make_term(polynomial(t.value("h", Json()), where + ".h"),
                                  polynomial(t.value("g", Json()), where + ".g"), model_out[i]));
      }
      if (kind == "multiplicative") return FunctionSpec(PurelyMultiplicative{get(f, "nu0", 1.0), terms}, kind);
      if (kind == "additive") return FunctionSpec(PurelyAdditive{get(f, "mu0", 0.0), terms}, kind);
      return FunctionSpec(Blended{get(f, "nu0", 1.0), get(f, "mu0", 0.0), terms}, kind);
    }
    throw ConfigError("function must be an example name or a record with kind multiplicative, additive, blended, "
                      "power_mean or standardized_blend");
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

StudyResult run(const Json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  if (config.contains("output")) {
    check_keys(config["output"], {"path", "format"}, "output");
    const std::string fmt = get<std::string>(config["output"], "format", "csv");
    if (fmt != "csv" && fmt != "json") throw ConfigError("output.format must be csv or json");
  }
  if (config.contains("reproduce")) return run_reproduce(config);
  return run_analyze(config);
}

std::string to_csv(const StudyResult& r) {
  const bool has_x = std::any_of(r.rows.begin(), r.rows.end(), [](const ResultRow& row) { return row.x.has_value(); });
  std::ostringstream os;
  os << "method,S,N,value,error_indicator,provenance" << (has_x ? ",x" : "") << "\n";
  for (const auto& row : r.rows) {
    os << csv_field(row.method) << ',' << row.s << ',' << row.n << ',' << num(row.value) << ','
       << num(row.error_indicator) << ',' << csv_field(row.provenance);
    if (has_x) os << ',' << (row.x ? num(*row.x) : "");
    os << "\n";
  }
  return os.str();
}

namespace {

Json metadata_json(const StudyResult& r) {
  Json m = Json::object();
  for (const auto& [k, v] : r.metadata) m[k] = v;
  return m;
}

}  // namespace

std::string render_json(const StudyResult& r, const Json& config) {
  Json j;
  j["name"] = r.name;
  j["config"] = config;
  j["metadata"] = metadata_json(r);
  j["warnings"] = unique_warnings(r);
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json o;
    o["method"] = row.method;
    o["S"] = row.s;
    o["N"] = row.n;
    o["value"] = row.value;
    o["error_indicator"] = row.error_indicator;
    o["provenance"] = row.provenance;
    if (row.x) o["x"] = *row.x;
    rows.push_back(o);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

std::string meta_json(const StudyResult& r, const Json& config) {
  Json j;
  j["name"] = r.name;
  j["config"] = config;
  j["metadata"] = metadata_json(r);
  j["warnings"] = unique_warnings(r);
  j["columns"] = {"method", "S", "N", "value", "error_indicator", "provenance"};
  if (std::any_of(r.rows.begin(), r.rows.end(), [](const ResultRow& row) { return row.x.has_value(); }))
    j["columns"].push_back("x");
  return j.dump(2) + "\n";
}

std::string layout(const StudyResult& r) {
  std::ostringstream os;
  if (r.name == "table1") {
    os << "ADD relative variance errors, y1 (blank: S > N)\n" << layout_grid(r, "add", "S");
  } else if (r.name == "table2") {
    os << "FDD relative variance errors, y2\n" << layout_grid(r, "fdd", "S");
  } else if (r.name == "table3") {
    os << "Relative variance errors and FDD means, standardized blend N=" << (r.rows.empty() ? 0 : r.rows[0].n) << "\n"
       << layout_columns(r, {"add", "fdd", "hdd_linear", "hdd_constrained", "hdd_nonlinear", "fdd_mean"}, "S", false);
  } else if (r.name == "table4") {
    std::map<std::pair<std::size_t, std::string>, std::size_t> cell;
    std::set<std::size_t> ns;
    for (const auto& row : r.rows) {
      cell[{row.n, row.method}] = row.s;
      ns.insert(row.n);
    }
    const std::vector<std::string> fns{"example1-y1", "example1-y2", "example2"};
    os << "Effective dimensions (ADD FDD HDD)\n" << std::left << std::setw(5) << "N";
    for (const auto& f : fns) os << std::setw(16) << f;
    os << "\n";
    for (auto n : ns) {
      os << std::left << std::setw(5) << n;
      for (const auto& f : fns) {
        std::string e;
        for (const char* m : {"add", "fdd", "hdd_linear"}) {
          auto it = cell.find({n, f + ":" + m});
          e += (it == cell.end() ? "-" : std::to_string(it->second)) + " ";
        }
        os << std::setw(16) << e;
      }
      os << "\n";
    }
  } else if (r.name == "example4-errors") {
    os << "Univariate relative variance errors and mean-squared errors by exponent m\n"
       << layout_columns(r,
                         {"add", "fdd", "hdd_linear", "hdd_nonlinear", "mse_add", "mse_fdd", "mse_hdd_linear",
                          "mse_hdd_nonlinear"},
                         "m", true);
  } else {
    std::size_t data = 0;
    for (const auto& row : r.rows) {
      if (row.method.rfind("tail_distance:", 0) == 0)
        os << row.method << " S=" << row.s << " " << num(row.value) << "\n";
      else
        ++data;
    }
    if (r.name.rfind("analyze-", 0) == 0 && r.name != "analyze-distribution") return to_csv(r);
    os << data << " distribution rows\n";
  }
  for (const auto& w : unique_warnings(r)) os << "warning: " << w << "\n";
  return os.str();
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file '" + path + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

int fail(int code, const std::string& type, const std::string& message) {
  Json e;
  e["error"] = {{"type", type}, {"message", message}, {"exit_status", code}};
  std::cerr << e.dump() << "\n";
  return code;
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"Dimensional decompositions (ADD, FDD, HDD) of multivariate functions"};
  app.require_subcommand(1);

  std::string config_path, out, format, backend, name;
  std::optional<std::uint64_t> seed;
  std::optional<double> p;

  auto* rep = app.add_subcommand("reproduce", "Run a built-in frozen reproduction config");
  rep->add_option("name", name, "table1, table2, table3, table4, example4-errors, example4-ccdf, example2-pdf")
      ->required();
  auto* ana = app.add_subcommand("analyze", "Run an analysis from a JSON config and/or flags");
  auto* list = app.add_subcommand("list", "List the built-in reproductions");
  auto* show = app.add_subcommand("show-config", "Print a frozen reproduction config");
  std::string show_name;
  show->add_option("name", show_name)->required();

  for (auto* sc : {rep, ana}) {
    sc->add_option("--out", out, "Output path (default: stdout)");
    sc->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sc->add_option("--seed", seed, "Seed for sampling and randomized backends");
    sc->add_option("--backend", backend, "tensor_gauss[:n], monte_carlo[:count] or rqmc[:count[xreplicates]]");
  }
  rep->add_option("--p", p, "Effective-dimension level (table4)");

  std::string function, analysis, methods, quantity, add_backend;
  std::optional<std::size_t> n, s_min, s_max, count, bins;
  std::optional<int> m;
  std::optional<double> y_empty;
  ana->add_option("--config", config_path, "JSON run config");
  ana->add_option("--function", function, "example1-y1, example1-y2, example2 or example4");
  ana->add_option("--n", n, "Dimension N of a named example");
  ana->add_option("--m", m, "Exponent of example4");
  ana->add_option("--y-empty", y_empty, "Constant of example2");
  ana->add_option("--analysis", analysis, "variance_table, effective_dimension, univariate_errors or distribution");
  ana->add_option("--methods", methods, "Comma-separated methods");
  ana->add_option("--s-min", s_min, "Lowest truncation");
  ana->add_option("--s-max", s_max, "Highest truncation");
  ana->add_option("--count", count, "Samples for distributions");
  ana->add_option("--bins", bins, "Histogram bins or CCDF grid points");
  ana->add_option("--quantity", quantity, "ccdf or pdf")->check(CLI::IsMember({"ccdf", "pdf"}));
  ana->add_option("--p", p, "Effective-dimension level");
  ana->add_option("--add-backend", add_backend, "Backend of the numeric ADD builder (default: --backend)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "config", e.what());
  }

  try {
    if (*list) {
      for (const auto& r : reproduce_names()) std::cout << r << "\n";
      return 0;
    }
    if (*show) {
      std::cout << frozen_config(show_name).dump(2) << "\n";
      return 0;
    }

    Json config;
    if (*rep) {
      config = frozen_config(name);
      if (p) {
        if (name != "table4") throw ConfigError("--p applies to table4 only");
        config["p"] = *p;
      }
    } else {
      if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw ConfigError("cannot read config '" + config_path + "'");
        try {
          config = Json::parse(f);
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
      } else {
        config = Json::object();
      }
      if (!function.empty()) config["function"] = function;
      auto set_param = [&](const char* key, const Json& v) { config["params"][key] = v; };
      if (n) set_param("n", *n);
      if (m) set_param("m", *m);
      if (y_empty) set_param("y_empty", *y_empty);
      if (!analysis.empty()) config["analysis"] = analysis;
      if (!methods.empty()) {
        Json list_json = Json::array();
        std::stringstream ss(methods);
        for (std::string item; std::getline(ss, item, ',');) list_json.push_back(item);
        config["methods"] = list_json;
      }
      if (s_min) config["truncation"]["min"] = *s_min;
      if (s_max) config["truncation"]["max"] = *s_max;
      if (count) config["count"] = *count;
      if (bins) config["bins"] = *bins;
      if (!quantity.empty()) config["quantity"] = quantity;
      if (p) config["p"] = *p;
      if (!add_backend.empty()) config["add_integration"] = parse_backend(add_backend);
    }
    if (seed) config["seed"] = *seed;
    if (!backend.empty()) {
      const Json b = parse_backend(backend);
      config["integration"] = b;
      if (config.contains("integration_blend")) config["integration_blend"] = b;
    }
    if (!out.empty()) config["output"]["path"] = out;
    if (!format.empty()) config["output"]["format"] = format;

    const StudyResult result = run(config);
    const std::string fmt = config.contains("output") ? config["output"].value("format", "csv") : "csv";
    const std::string path = config.contains("output") ? config["output"].value("path", "") : "";
    const std::string body = fmt == "json" ? render_json(result, config) : to_csv(result);
    if (path.empty()) {
      std::cout << (*rep && fmt == "csv" ? layout(result) + "\n" + body : body);
    } else {
      write_file(path, body);
      if (fmt == "csv") write_file(path + ".meta.json", meta_json(result, config));
      std::cout << layout(result);
    }
    return 0;
  } catch (const ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const InvalidArgument& e) {
    return fail(2, "config", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(2, "config", e.what());
  } catch (const Error& e) {
    return fail(3, "numeric", e.what());
  } catch (const std::exception& e) {
    return fail(3, "numeric", e.what());
  }
}

}  // namespace dimdecomp::cli
