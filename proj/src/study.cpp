#include "dimdecomp/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "dimdecomp/error.hpp"

namespace dimdecomp {

std::string to_string(Method m) {
  switch (m) {
    case Method::exact:
      return "exact";
    case Method::add:
      return "add";
    case Method::fdd:
      return "fdd";
    case Method::hdd_linear:
      return "hdd_linear";
    case Method::hdd_constrained:
      return "hdd_constrained";
    case Method::hdd_nonlinear:
      return "hdd_nonlinear";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::exact, Method::add, Method::fdd, Method::hdd_linear, Method::hdd_constrained,
                 Method::hdd_nonlinear})
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown method: " + name);
}

namespace {

std::optional<HybridKind> hybrid_kind(Method m) {
  switch (m) {
    case Method::hdd_linear:
      return HybridKind::Linear2;
    case Method::hdd_constrained:
      return HybridKind::LinearConstrained1;
    case Method::hdd_nonlinear:
      return HybridKind::Nonlinear3;
    default:
      return std::nullopt;
  }
}

HybridModel refit(HybridKind kind, const CrossMoments& cm) {
  switch (kind) {
    case HybridKind::Linear2:
      return fit_linear(cm);
    case HybridKind::LinearConstrained1:
      return fit_linear_constrained(cm);
    case HybridKind::Nonlinear3:
      return fit_nonlinear(cm);
  }
  return fit_linear(cm);
}

// The standardized blend has closed-form components only on unit-uniform inputs.
bool closed_form_applies(const FunctionSpec& y, const InputModel& model) {
  if (!y.as_blended()) return false;
  if (!std::holds_alternative<StandardizedBlend>(y.variant())) return true;
  return std::all_of(model.marginals().begin(), model.marginals().end(), [](const MarginalDistribution& m) {
    const auto* u = std::get_if<Uniform>(&m.kind());
    return u && u->a == 0.0 && u->b == 1.0;
  });
}

// Shortest text that round-trips.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

double hybrid_variance_error(const HybridModel& model) {
  const double base = hybrid_variance(model);
  double total = 0.0;
  using Entry = CrossMoments::Entry;
  for (Entry CrossMoments::*field :
       {&CrossMoments::var_add, &CrossMoments::var_fdd, &CrossMoments::e_add_fdd, &CrossMoments::e_w_fdd,
        &CrossMoments::e_add2_fdd, &CrossMoments::e_add_fdd2, &CrossMoments::e_add2_fdd2,
        &CrossMoments::e_w_add_fdd}) {
    const double err = (model.cross.*field).error_indicator;
    if (err == 0.0) continue;
    CrossMoments shifted = model.cross;
    (shifted.*field).value += err;
    total += std::abs(hybrid_variance(refit(model.kind, shifted)) - base);
  }
  return total;
}

Pipeline::Pipeline(FunctionSpec y, InputModel model, PipelineOptions options)
    : y_(std::move(y)), model_(std::move(model)), options_(std::move(options)) {
  if (y_.dimension() != model_.dimension()) throw InvalidArgument("pipeline: function and input model dimensions differ");
  options_.integration.validate(model_.dimension());
  exact_ = exact_moments(y_, model_);
}

std::string Pipeline::numeric_tag() const { return "numeric:" + options_.integration.id(); }

const Quantity& Pipeline::exact_variance() {
  if (!variance_) {
    if (exact_) {
      variance_ = Quantity{exact_->variance, 0.0, "closed_form"};
    } else {
      const auto mean = expectation(y_, model_, options_.integration);
      const double m = mean.value;
      const auto sq = expectation(
          [&](std::span<const double> x) {
            const double d = y_.evaluate(x) - m;
            return d * d;
          },
          model_, options_.integration, y_.concurrent_safe());
      variance_ = Quantity{sq.value, sq.error_indicator, numeric_tag()};
    }
  }
  return *variance_;
}

const AddDecomposition& Pipeline::add() {
  if (!add_) {
    const std::size_t order = options_.max_order.value_or(dimension());
    std::optional<AddDecomposition> built;
    if (!options_.force_numeric && closed_form_applies(y_, model_)) built.emplace(build_closed_form(y_, model_, order));
    if (!built)
      built.emplace(build_numeric(y_, model_, order, options_.add_integration.value_or(options_.integration),
                                  options_.grid_points));
    add_ = std::make_shared<const AddDecomposition>(std::move(*built));
  }
  return *add_;
}

std::string Pipeline::add_provenance() { return add().provenance_id(); }

const FddDecomposition& Pipeline::fdd() {
  if (!fdd_) {
    add();
    fdd_ = std::make_unique<FddDecomposition>(fdd_from_add(add_));
  }
  return *fdd_;
}

const CrossMoments& Pipeline::cross(std::size_t s) {
  auto it = cross_.find(s);
  if (it == cross_.end()) {
    CrossMomentOptions o;
    o.exact = exact_;
    o.prefer_closed_form = options_.prefer_closed_form;
    it = cross_.emplace(s, compute_cross_moments(y_, fdd(), s, model_, options_.integration, o)).first;
  }
  return it->second;
}

const HybridModel& Pipeline::hybrid(HybridKind kind, std::size_t s) {
  const auto key = std::make_pair(static_cast<int>(kind), s);
  auto it = hybrid_.find(key);
  if (it == hybrid_.end()) it = hybrid_.emplace(key, refit(kind, cross(s))).first;
  return it->second;
}

Quantity Pipeline::variance(Method m, std::size_t s) {
  if (m == Method::exact) return exact_variance();
  if (s > dimension()) throw InvalidArgument("truncation exceeds the dimension");
  if (s == 0) return {0.0, 0.0, "closed_form"};

  if (m == Method::add) {
    const auto& a = add();
    double err = 0.0;
    const auto& v = a.variances();
    const auto& e = a.component_errors();
    for (std::size_t k = 0; k < a.count_up_to(s); ++k) err += 2.0 * std::sqrt(v[k]) * e[k];
    return {truncated_variance(a, s), err, a.provenance_id()};
  }
  if (m == Method::fdd) {
    const auto& f = fdd();
    if (s == 1 && options_.prefer_closed_form) {
      const auto& v = f.add().variances();
      const std::vector<double> uni(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(f.add().count_up_to(1)));
      return {univariate_variance_closed_form(f.one_plus_z_empty(), uni), 0.0, f.add().provenance_id()};
    }
    auto it = fdd_moments_.find(s);
    if (it == fdd_moments_.end()) {
      const auto fm = exact_ ? moments_paired(f, s, y_, *exact_, model_, options_.integration)
                             : moments(f, s, model_, options_.integration);
      it = fdd_moments_.emplace(s, fm).first;
    }
    return {it->second.variance, it->second.variance_error, numeric_tag()};
  }
  const auto& h = hybrid(*hybrid_kind(m), s);
  return {hybrid_variance(h), hybrid_variance_error(h), numeric_tag()};
}

Quantity Pipeline::relative_variance_error(Method m, std::size_t s) {
  const auto& exact = exact_variance();
  const auto q = variance(m, s);
  return {dimdecomp::relative_variance_error(exact.value, q.value), q.error_indicator / exact.value, q.provenance};
}

Quantity Pipeline::fdd_mean(std::size_t s) {
  const auto& f = fdd();
  if (s == 0 || (s == 1 && options_.prefer_closed_form)) return {f.add().y_empty(), 0.0, f.add().provenance_id()};
  variance(Method::fdd, s);
  const auto& fm = fdd_moments_.at(s);
  return {fm.mean, fm.mean_error, numeric_tag()};
}

std::size_t Pipeline::effective_dimension(Method m, double p) {
  if (m == Method::exact) throw InvalidArgument("effective dimension needs an approximation method");
  return dimdecomp::effective_dimension(exact_variance().value, dimension(), p,
                                        [&](std::size_t s) { return variance(m, s).value; });
}

ErrorReport Pipeline::univariate_errors() {
  return dimdecomp::univariate_errors(y_, model_, fdd(), hybrid(HybridKind::Linear2, 1), options_.integration,
                                      hybrid(HybridKind::Nonlinear3, 1));
}

bool Pipeline::concurrent_safe(Method m) const { return m != Method::exact || y_.concurrent_safe(); }

Evaluator Pipeline::evaluator(Method m, std::size_t s) {
  if (m == Method::exact) return [this](std::span<const double> x) { return y_.evaluate(x); };
  if (s < 1 || s > add().max_order()) throw Unavailable("evaluator: truncation outside the built order");
  if (m == Method::add) {
    auto a = add_;
    return [a, s](std::span<const double> x) { return evaluate_truncated(*a, s, x); };
  }
  const FddDecomposition* f = &fdd();
  if (m == Method::fdd) return [f, s](std::span<const double> x) { return evaluate_truncated(*f, s, x); };
  HybridModel h = hybrid(*hybrid_kind(m), s);
  return [f, h](std::span<const double> x) { return evaluate(h, *f, x); };
}

namespace {

void add_hybrid_metadata(StudyResult& out, const std::string& prefix, const HybridModel& h) {
  out.metadata.emplace_back(prefix + ".alpha", fmt(h.alpha));
  out.metadata.emplace_back(prefix + ".beta", fmt(h.beta));
  if (h.kind == HybridKind::Nonlinear3) {
    out.metadata.emplace_back(prefix + ".gamma", fmt(h.gamma));
    out.metadata.emplace_back(prefix + ".condition", fmt(h.condition_estimate));
  }
  if (h.degenerate) out.warnings.push_back(prefix + ": degenerate fit, ADD weight 1 returned");
  if (h.fallback) out.warnings.push_back(prefix + ": ill-conditioned system, linear solution returned");
}

void collect_warnings(StudyResult& out, const std::string& prefix, const CrossMoments& cm) {
  for (const auto& w : cm.warnings) out.warnings.push_back(prefix + ": " + w);
}

ExampleParams params_n(std::size_t n) {
  ExampleParams p;
  p.n = n;
  return p;
}

}  // namespace

StudyResult table1(const Table1Options& options) {
  StudyResult out;
  out.name = "table1";
  out.metadata.emplace_back("function", "example1-y1");
  out.metadata.emplace_back("nu0", fmt(options.nu0));
  out.metadata.emplace_back("quantity", "relative variance error |var(y) - var(y_S)| / var(y)");
  for (std::size_t n : options.dimensions) {
    auto p = params_n(n);
    p.nu0 = options.nu0;
    Pipeline pipe(make_example("example1-y1", p), example_model(n));
    for (std::size_t s = 1; s <= n; ++s) {
      const auto q = pipe.relative_variance_error(Method::add, s);
      out.rows.push_back({"add", s, n, q.value, q.error_indicator, q.provenance, std::nullopt});
    }
  }
  return out;
}

StudyResult table2(const Table2Options& options) {
  StudyResult out;
  out.name = "table2";
  out.metadata.emplace_back("function", "example1-y2");
  out.metadata.emplace_back("mu0", fmt(options.mu0));
  out.metadata.emplace_back("backend", options.integration.id());
  out.metadata.emplace_back("estimator", "paired with y (exact mean and variance known)");
  for (std::size_t n : options.dimensions) {
    auto p = params_n(n);
    p.mu0 = options.mu0;
    PipelineOptions po;
    po.integration = options.integration;
    Pipeline pipe(make_example("example1-y2", p), example_model(n), po);
    for (std::size_t s = 1; s <= std::min(options.max_order, n); ++s) {
      const auto q = pipe.relative_variance_error(Method::fdd, s);
      out.rows.push_back({"fdd", s, n, q.value, q.error_indicator, q.provenance, std::nullopt});
    }
  }
  return out;
}

StudyResult table3(const Table3Options& options) {
  StudyResult out;
  out.name = "table3";
  const std::size_t n = options.n;
  out.metadata.emplace_back("function", "example2");
  out.metadata.emplace_back("y_empty", fmt(options.y_empty));
  out.metadata.emplace_back("backend", options.integration.id());
  auto p = params_n(n);
  p.y_empty = options.y_empty;
  PipelineOptions po;
  po.integration = options.integration;
  Pipeline pipe(make_example("example2", p), example_model(n), po);
  for (std::size_t s = 1; s <= std::min(options.max_order, n); ++s) {
    for (auto m : {Method::add, Method::fdd, Method::hdd_linear, Method::hdd_constrained, Method::hdd_nonlinear}) {
      const auto q = pipe.relative_variance_error(m, s);
      out.rows.push_back({to_string(m), s, n, q.value, q.error_indicator, q.provenance, std::nullopt});
    }
    const auto mean = pipe.fdd_mean(s);
    out.rows.push_back({"fdd_mean", s, n, mean.value, mean.error_indicator, mean.provenance, std::nullopt});
    const std::string tag = "S" + std::to_string(s);
    add_hybrid_metadata(out, "hdd_linear." + tag, pipe.hybrid(HybridKind::Linear2, s));
    add_hybrid_metadata(out, "hdd_constrained." + tag, pipe.hybrid(HybridKind::LinearConstrained1, s));
    add_hybrid_metadata(out, "hdd_nonlinear." + tag, pipe.hybrid(HybridKind::Nonlinear3, s));
    collect_warnings(out, tag, pipe.cross(s));
  }
  return out;
}

StudyResult table4(const Table4Options& options) {
  StudyResult out;
  out.name = "table4";
  out.metadata.emplace_back("p", fmt(options.p));
  out.metadata.emplace_back("hdd_model", to_string(HybridKind::Linear2));
  out.metadata.emplace_back("backend.example1", options.integration_sums.id());
  out.metadata.emplace_back("backend.example2", options.integration_blend.id());
  out.metadata.emplace_back("value", "effective dimension");

  auto run = [&](const std::string& name, Pipeline& pipe) {
    for (auto m : {Method::add, Method::fdd, Method::hdd_linear}) {
      const std::size_t d = pipe.effective_dimension(m, options.p);
      const auto q = pipe.relative_variance_error(m, d);
      out.rows.push_back(
          {name + ":" + to_string(m), d, pipe.dimension(), static_cast<double>(d), 0.0, q.provenance, std::nullopt});
    }
  };
  for (const char* name : {"example1-y1", "example1-y2"}) {
    for (std::size_t n : options.dimensions) {
      PipelineOptions po;
      po.integration = options.integration_sums;
      Pipeline pipe(make_example(name, params_n(n)), example_model(n), po);
      run(name, pipe);
    }
  }
  auto p = params_n(options.blend_dimension);
  p.y_empty = options.y_empty;
  PipelineOptions po;
  po.integration = options.integration_blend;
  Pipeline pipe(make_example("example2", p), example_model(options.blend_dimension), po);
  run("example2", pipe);
  return out;
}

namespace {

PipelineOptions power_mean_pipeline(const PowerMeanOptions& b) {
  PipelineOptions po;
  po.integration = b.integration;
  po.add_integration = b.add_integration;
  po.grid_points = b.grid_points;
  po.max_order = 1;
  return po;
}

void power_mean_metadata(StudyResult& out, const PowerMeanOptions& b) {
  out.metadata.emplace_back("function", "example4");
  out.metadata.emplace_back("n", std::to_string(b.n));
  out.metadata.emplace_back("add_backend", b.add_integration.id());
  out.metadata.emplace_back("add_grid_points", std::to_string(b.grid_points));
  out.metadata.emplace_back("backend", b.integration.id());
}

}  // namespace

StudyResult example4_errors(const Example4ErrorOptions& options) {
  StudyResult out;
  out.name = "example4-errors";
  power_mean_metadata(out, options.build);
  out.metadata.emplace_back("x", "exponent m");
  const std::size_t n = options.build.n;
  for (int m : options.exponents) {
    auto p = params_n(n);
    p.m = m;
    Pipeline pipe(make_example("example4", p), example_model(n), power_mean_pipeline(options.build));
    const double xm = m;
    for (auto meth : {Method::add, Method::fdd, Method::hdd_linear, Method::hdd_nonlinear}) {
      const auto q = pipe.relative_variance_error(meth, 1);
      out.rows.push_back({to_string(meth), 1, n, q.value, q.error_indicator, q.provenance, xm});
    }
    const auto r = pipe.univariate_errors();
    const std::string prov = pipe.cross(1).backend.empty() ? "" : "numeric:" + pipe.cross(1).backend;
    out.rows.push_back({"mse_add", 1, n, r.e_add_1, 0.0, pipe.add_provenance(), xm});
    out.rows.push_back({"mse_fdd", 1, n, r.e_fdd_1, pipe.cross(1).e_w_fdd.error_indicator * 2.0, prov, xm});
    out.rows.push_back({"mse_hdd_linear", 1, n, r.e_hdd_1_linear, 0.0, prov, xm});
    out.rows.push_back({"mse_hdd_nonlinear", 1, n, r.e_hdd_1_nonlinear.value_or(0.0), 0.0, prov, xm});
    const std::string tag = "m" + std::to_string(m);
    add_hybrid_metadata(out, "hdd_linear." + tag, pipe.hybrid(HybridKind::Linear2, 1));
    add_hybrid_metadata(out, "hdd_nonlinear." + tag, pipe.hybrid(HybridKind::Nonlinear3, 1));
    collect_warnings(out, tag, pipe.cross(1));
    if (!r.hybrid_is_best) out.warnings.push_back(tag + ": univariate hybrid error exceeds ADD or FDD error");
  }
  return out;
}

StudyResult example4_ccdf(const Example4CcdfOptions& options) {
  StudyResult out;
  out.name = "example4-ccdf";
  power_mean_metadata(out, options.build);
  out.metadata.emplace_back("m", std::to_string(options.m));
  const std::size_t n = options.build.n;
  auto p = params_n(n);
  p.m = options.m;
  Pipeline pipe(make_example("example4", p), example_model(n), power_mean_pipeline(options.build));
  DistributionOptions d;
  d.methods = {Method::add, Method::fdd, Method::hdd_linear, Method::hdd_nonlinear};
  d.count = options.count;
  d.seed = options.seed;
  d.bins = options.points;
  d.quantity = DistributionQuantity::ccdf;
  distributions(pipe, d, out);
  add_hybrid_metadata(out, "hdd_linear", pipe.hybrid(HybridKind::Linear2, 1));
  add_hybrid_metadata(out, "hdd_nonlinear", pipe.hybrid(HybridKind::Nonlinear3, 1));
  return out;
}

StudyResult example2_pdf(const Example2PdfOptions& options) {
  StudyResult out;
  out.name = "example2-pdf";
  const std::size_t n = options.n;
  out.metadata.emplace_back("function", "example2");
  out.metadata.emplace_back("y_empty", fmt(options.y_empty));
  out.metadata.emplace_back("backend", options.integration.id());
  auto p = params_n(n);
  p.y_empty = options.y_empty;
  PipelineOptions po;
  po.integration = options.integration;
  Pipeline pipe(make_example("example2", p), example_model(n), po);
  DistributionOptions d;
  d.methods = {Method::add, Method::fdd, Method::hdd_linear};
  d.s_min = 1;
  d.s_max = std::min(options.max_order, n);
  d.count = options.count;
  d.seed = options.seed;
  d.bins = options.bins;
  d.quantity = DistributionQuantity::pdf;
  distributions(pipe, d, out);
  return out;
}

namespace {

void check_range(const Pipeline& pipe, std::size_t s_min, std::size_t s_max) {
  if (s_min > s_max || s_max > pipe.dimension())
    throw InvalidArgument("truncation range must satisfy s_min <= s_max <= N");
}

std::string method_provenance(Pipeline& pipe, Method m, std::size_t s) {
  if (m == Method::exact) return "sampled";
  if (m == Method::add) return pipe.add_provenance();
  return pipe.variance(m, s).provenance;
}

}  // namespace

void variance_table(Pipeline& pipe, const std::vector<Method>& methods, std::size_t s_min, std::size_t s_max,
                    StudyResult& out) {
  check_range(pipe, s_min, s_max);
  const std::size_t n = pipe.dimension();
  const auto& v = pipe.exact_variance();
  out.rows.push_back({"exact_variance", 0, n, v.value, v.error_indicator, v.provenance, std::nullopt});
  for (std::size_t s = std::max<std::size_t>(s_min, 1); s <= s_max; ++s) {
    for (auto m : methods) {
      if (m == Method::exact) continue;
      const auto q = pipe.relative_variance_error(m, s);
      out.rows.push_back({to_string(m), s, n, q.value, q.error_indicator, q.provenance, std::nullopt});
    }
    if (s <= pipe.add().max_order()) {
      for (auto m : methods)
        if (m != Method::exact && m != Method::add && m != Method::fdd) {
          const auto kind = *hybrid_kind(m);
          add_hybrid_metadata(out, to_string(m) + ".S" + std::to_string(s), pipe.hybrid(kind, s));
          collect_warnings(out, to_string(m) + ".S" + std::to_string(s), pipe.cross(s));
        }
    }
  }
}

void effective_dimensions(Pipeline& pipe, const std::vector<Method>& methods, double p, StudyResult& out) {
  out.metadata.emplace_back("p", fmt(p));
  for (auto m : methods) {
    if (m == Method::exact) continue;
    const std::size_t d = pipe.effective_dimension(m, p);
    out.rows.push_back({to_string(m), d, pipe.dimension(), static_cast<double>(d), 0.0, method_provenance(pipe, m, d),
                        std::nullopt});
  }
}

void univariate_error_rows(Pipeline& pipe, StudyResult& out) {
  const std::size_t n = pipe.dimension();
  const auto r = pipe.univariate_errors();
  const std::string add_prov = pipe.add_provenance();
  const std::string prov = "numeric:" + pipe.cross(1).backend;
  out.rows.push_back({"mse_add", 1, n, r.e_add_1, 0.0, add_prov, std::nullopt});
  out.rows.push_back({"mse_fdd", 1, n, r.e_fdd_1, 2.0 * pipe.cross(1).e_w_fdd.error_indicator, prov, std::nullopt});
  out.rows.push_back({"mse_hdd_linear", 1, n, r.e_hdd_1_linear, 0.0, prov, std::nullopt});
  if (r.e_hdd_1_nonlinear)
    out.rows.push_back({"mse_hdd_nonlinear", 1, n, *r.e_hdd_1_nonlinear, 0.0, prov, std::nullopt});
  if (r.e_add_1_subset_sum)
    out.rows.push_back({"mse_add_subset_sum", 1, n, *r.e_add_1_subset_sum, 0.0, add_prov, std::nullopt});
  for (const auto& e : r.relative_variance_errors)
    out.rows.push_back({e.method, e.s, n, e.value, 0.0, e.method == "add" ? add_prov : prov, std::nullopt});
  out.metadata.emplace_back("fdd_variance_dominates", r.fdd_variance_dominates ? "true" : "false");
  out.metadata.emplace_back("hybrid_is_best", r.hybrid_is_best ? "true" : "false");
  if (!r.fdd_variance_dominates) out.warnings.push_back("univariate FDD variance below the ADD variance");
  if (!r.hybrid_is_best) out.warnings.push_back("univariate hybrid error exceeds ADD or FDD error");
  add_hybrid_metadata(out, "hdd_linear.S1", pipe.hybrid(HybridKind::Linear2, 1));
  add_hybrid_metadata(out, "hdd_nonlinear.S1", pipe.hybrid(HybridKind::Nonlinear3, 1));
  collect_warnings(out, "S1", pipe.cross(1));
}

void distributions(Pipeline& pipe, const DistributionOptions& options, StudyResult& out) {
  check_range(pipe, std::max<std::size_t>(options.s_min, 1), options.s_max);
  if (options.bins < 2) throw InvalidArgument("distribution needs at least two bins or grid points");
  const std::size_t n = pipe.dimension();
  const bool pdf = options.quantity == DistributionQuantity::pdf;
  out.metadata.emplace_back("count", std::to_string(options.count));
  out.metadata.emplace_back("seed", std::to_string(options.seed));
  out.metadata.emplace_back("quantity", pdf ? "histogram density at bin centre x" : "complementary CDF at x");
  out.metadata.emplace_back(pdf ? "bins" : "grid_points", std::to_string(options.bins));
  if (!pdf)
    out.metadata.emplace_back("tail_distance",
                              "max |log10 CCDF - log10 CCDF_y| at y quantiles, exceedance 1e-2 down to 10/count");

  auto draw = [&](Method m, std::size_t s) {
    return sample_values(pipe.evaluator(m, s), pipe.model(), options.count, options.seed, pipe.concurrent_safe(m));
  };
  const double total = static_cast<double>(options.count);
  std::vector<std::pair<Method, std::size_t>> series{{Method::exact, 0}};
  for (std::size_t s = std::max<std::size_t>(options.s_min, 1); s <= options.s_max; ++s)
    for (auto m : options.methods)
      if (m != Method::exact) series.emplace_back(m, s);

  if (pdf) {
    std::vector<std::vector<double>> values;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [m, s] : series) {
      values.push_back(draw(m, s));
      const auto [a, b] = std::minmax_element(values.back().begin(), values.back().end());
      lo = std::min(lo, *a);
      hi = std::max(hi, *b);
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto [m, s] = series[k];
      const std::string prov = method_provenance(pipe, m, s);
      const EmpiricalDistribution d(std::move(values[k]), options.bins, std::make_pair(lo, hi));
      const auto& e = d.bin_edges();
      const auto& h = d.pdf_heights();
      for (std::size_t b = 0; b < h.size(); ++b) {
        const double err = std::sqrt(h[b] / (total * (e[b + 1] - e[b])));
        out.rows.push_back({to_string(m), s, n, h[b], err, prov, 0.5 * (e[b] + e[b + 1])});
      }
    }
  } else {
    const EmpiricalDistribution ref(draw(Method::exact, 0), 1);
    const double lo = ref.sorted_samples().front(), hi = ref.sorted_samples().back();
    std::vector<double> grid(options.bins);
    for (std::size_t k = 0; k < grid.size(); ++k)
      grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid.size() - 1);
    for (const auto& [m, s] : series) {
      const std::string prov = method_provenance(pipe, m, s);
      std::optional<EmpiricalDistribution> own;
      if (m != Method::exact) own.emplace(draw(m, s), 1);
      const EmpiricalDistribution& d = own ? *own : ref;
      for (double x : grid) {
        const double c = d.ccdf(x);
        out.rows.push_back({to_string(m), s, n, c, std::sqrt(c * (1.0 - c) / total), prov, x});
      }
      if (own)
        out.rows.push_back({"tail_distance:" + to_string(m), s, n, tail_distance(*own, ref), 0.0, prov, std::nullopt});
    }
  }
  const bool hybrid = std::any_of(options.methods.begin(), options.methods.end(),
                                  [](Method m) { return hybrid_kind(m).has_value(); });
  if (hybrid)
    for (std::size_t s = std::max<std::size_t>(options.s_min, 1); s <= options.s_max; ++s)
      collect_warnings(out, "S" + std::to_string(s), pipe.cross(s));
}

}  // namespace dimdecomp
