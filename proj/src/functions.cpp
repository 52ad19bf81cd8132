#include "dimdecomp/functions.hpp"

#include <cmath>

#include "dimdecomp/error.hpp"

namespace dimdecomp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_terms(const std::vector<UnivariateTerm>& terms, bool need_h, bool need_g) {
  if (terms.empty()) throw InvalidArgument("structured function needs at least one term");
  if (terms.size() > 64) throw InvalidArgument("structured function supports at most 64 terms");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    if (need_h && !t.h) throw InvalidArgument("term " + std::to_string(i + 1) + " is missing h");
    if (need_g && !t.g) throw InvalidArgument("term " + std::to_string(i + 1) + " is missing g");
    if (t.delta_sq < 0.0 || t.lambda_sq < 0.0)
      throw InvalidArgument("term " + std::to_string(i + 1) + " has a negative variance");
    const double bound = std::sqrt(t.delta_sq * t.lambda_sq);
    if (std::abs(t.eta_sq) > bound * (1.0 + 1e-9) + 1e-300)
      throw InvalidArgument("term " + std::to_string(i + 1) + " violates Cauchy-Schwarz for Cov[h,g]");
  }
}

std::size_t dimension_of(const FunctionSpec::Variant& v) {
  return std::visit(Overloaded{[](const PurelyMultiplicative& s) { return s.terms.size(); },
                               [](const PurelyAdditive& s) { return s.terms.size(); },
                               [](const Blended& s) { return s.terms.size(); },
                               [](const PowerMean& s) { return s.n; },
                               [](const StandardizedBlend& s) { return s.n; },
                               [](const BlackBox& s) { return s.n; }},
                    v);
}

double blended_mean(const Blended& b) {
  double prod = 1.0;
  double sum = 0.0;
  for (const auto& t : b.terms) {
    prod *= t.nu;
    sum += t.mu;
  }
  return b.nu0 * prod + b.mu0 + sum;
}

bool is_standard_uniform(const MarginalDistribution& m) {
  const auto* u = std::get_if<Uniform>(&m.kind());
  return u != nullptr && u->a == 0.0 && u->b == 1.0;
}

// E[S^k], k = 0..kmax, for S the sum of independent coordinates. Exact for
// uniform and normal marginals (polynomial-exact Gauss rules).
std::optional<std::vector<double>> sum_moments(const InputModel& model, int kmax) {
  std::vector<double> acc(kmax + 1, 0.0);
  acc[0] = 1.0;
  for (const auto& marginal : model.marginals()) {
    if (std::holds_alternative<Lognormal>(marginal.kind())) return std::nullopt;
    const auto rule = gauss_rule(marginal, kmax / 2 + 1);
    std::vector<double> raw(kmax + 1, 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      double p = rule.weights[q];
      for (int k = 0; k <= kmax; ++k) {
        raw[k] += p;
        p *= rule.nodes[q];
      }
    }
    std::vector<double> next(kmax + 1, 0.0);
    for (int k = 0; k <= kmax; ++k) {
      double binom = 1.0;
      for (int j = 0; j <= k; ++j) {
        next[k] += binom * acc[j] * raw[k - j];
        binom = binom * (k - j) / (j + 1);
      }
    }
    acc = std::move(next);
  }
  return acc;
}

}  // namespace

UnivariateTerm make_term(ScalarFunction h, ScalarFunction g, const MarginalDistribution& marginal,
                         int quadrature_points) {
  const auto rule = gauss_rule(marginal, quadrature_points);
  UnivariateTerm t;
  double eh = 0.0, eg = 0.0, ehh = 0.0, egg = 0.0, ehg = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double x = rule.nodes[q];
    const double w = rule.weights[q];
    const double hv = h ? h(x) : 0.0;
    const double gv = g ? g(x) : 0.0;
    eh += w * hv;
    eg += w * gv;
  }
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double x = rule.nodes[q];
    const double w = rule.weights[q];
    const double dh = (h ? h(x) : 0.0) - eh;
    const double dg = (g ? g(x) : 0.0) - eg;
    ehh += w * dh * dh;
    egg += w * dg * dg;
    ehg += w * dh * dg;
  }
  // Constant pieces get exact moments (the weights sum to one only up to rounding).
  auto constant = [&](const ScalarFunction& f, double& mean, double& var) {
    if (!f) return;
    const double first = f(rule.nodes[0]);
    for (double x : rule.nodes)
      if (f(x) != first) return;
    mean = first;
    var = 0.0;
  };
  constant(h, eh, ehh);
  constant(g, eg, egg);
  if (ehh == 0.0 || egg == 0.0) ehg = 0.0;
  t.h = std::move(h);
  t.g = std::move(g);
  t.nu = eh;
  t.delta_sq = ehh;
  t.mu = eg;
  t.lambda_sq = egg;
  t.eta_sq = ehg;
  return t;
}

void EvaluationBudget::consume(std::size_t count) {
  std::size_t current = counter_.load();
  do {
    if (current + count > max_)
      throw BudgetExhausted("evaluation budget of " + std::to_string(max_) + " exhausted");
  } while (!counter_.compare_exchange_weak(current, current + count));
}

FunctionSpec::FunctionSpec(Variant variant, std::string name)
    : variant_(std::move(variant)), name_(std::move(name)), dimension_(dimension_of(variant_)) {
  // A blended term may omit either piece; it is then identically zero.
  if (auto* b = std::get_if<Blended>(&variant_)) {
    for (auto& t : b->terms) {
      if (!t.h) t.h = [](double) { return 0.0; };
      if (!t.g) t.g = [](double) { return 0.0; };
    }
  }
  std::visit(Overloaded{[](const PurelyMultiplicative& s) { check_terms(s.terms, true, false); },
                        [](const PurelyAdditive& s) { check_terms(s.terms, false, true); },
                        [](const Blended& s) { check_terms(s.terms, true, true); },
                        [](const PowerMean& s) {
                          if (s.m < 1) throw InvalidArgument("power-mean exponent must be positive");
                          if (s.n < 1 || s.n > 64) throw InvalidArgument("power-mean dimension must be in [1,64]");
                        },
                        [](const StandardizedBlend& s) {
                          if (s.n < 1 || s.n > 64) throw InvalidArgument("standardized blend dimension must be in [1,64]");
                        },
                        [](const BlackBox& s) {
                          if (!s.f) throw InvalidArgument("black box needs an evaluator");
                          if (s.n < 1 || s.n > 64) throw InvalidArgument("black box dimension must be in [1,64]");
                        }},
             variant_);
}

bool FunctionSpec::is_structured() const {
  return !(std::holds_alternative<PowerMean>(variant_) || std::holds_alternative<BlackBox>(variant_));
}

bool FunctionSpec::concurrent_safe() const {
  if (const auto* b = std::get_if<BlackBox>(&variant_)) return b->concurrent_safe;
  return true;
}

std::optional<Blended> FunctionSpec::as_blended() const {
  return std::visit(
      Overloaded{[](const PurelyMultiplicative& s) -> std::optional<Blended> {
                   Blended b{s.nu0, 0.0, s.terms};
                   for (auto& t : b.terms) {
                     t.g = [](double) { return 0.0; };
                     t.mu = t.lambda_sq = t.eta_sq = 0.0;
                   }
                   return b;
                 },
                 [](const PurelyAdditive& s) -> std::optional<Blended> {
                   Blended b{0.0, s.mu0, s.terms};
                   for (auto& t : b.terms) {
                     t.h = [](double) { return 1.0; };
                     t.nu = 1.0;
                     t.delta_sq = t.eta_sq = 0.0;
                   }
                   return b;
                 },
                 [](const Blended& s) -> std::optional<Blended> { return s; },
                 [](const StandardizedBlend& s) -> std::optional<Blended> {
                   const auto c = standardization_constants(s.n);
                   Blended b;
                   b.nu0 = 1.0 / c.product_stddev;
                   b.mu0 = s.y_empty - c.sum_mean / c.sum_stddev - c.product_mean / c.product_stddev;
                   const double inv = 1.0 / c.sum_stddev;
                   UnivariateTerm t;
                   t.h = [](double x) { return x; };
                   t.g = [inv](double x) { return inv * x; };
                   t.nu = 0.5;
                   t.delta_sq = 1.0 / 12.0;
                   t.mu = 0.5 * inv;
                   t.lambda_sq = inv * inv / 12.0;
                   t.eta_sq = inv / 12.0;
                   b.terms.assign(s.n, t);
                   return b;
                 },
                 [](const auto&) -> std::optional<Blended> { return std::nullopt; }},
      variant_);
}

double FunctionSpec::evaluate(std::span<const double> x) const {
  if (x.size() != dimension_)
    throw InvalidArgument("evaluate: expected " + std::to_string(dimension_) + " coordinates, got " +
                          std::to_string(x.size()));
  if (budget_) budget_->consume();
  return std::visit(Overloaded{[x](const PurelyMultiplicative& s) {
                                 double p = s.nu0;
                                 for (std::size_t i = 0; i < x.size(); ++i) p *= s.terms[i].h(x[i]);
                                 return p;
                               },
                               [x](const PurelyAdditive& s) {
                                 double sum = s.mu0;
                                 for (std::size_t i = 0; i < x.size(); ++i) sum += s.terms[i].g(x[i]);
                                 return sum;
                               },
                               [x](const Blended& s) {
                                 double p = s.nu0;
                                 double sum = s.mu0;
                                 for (std::size_t i = 0; i < x.size(); ++i) {
                                   p *= s.terms[i].h(x[i]);
                                   sum += s.terms[i].g(x[i]);
                                 }
                                 return p + sum;
                               },
                               [x](const PowerMean& s) {
                                 double sum = 0.0;
                                 for (double xi : x) sum += xi;
                                 const double base = 2.0 * sum / static_cast<double>(s.n);
                                 double p = 1.0;
                                 for (int k = 0; k < s.m; ++k) p *= base;
                                 return p;
                               },
                               [x](const StandardizedBlend& s) {
                                 const auto c = standardization_constants(s.n);
                                 double sum = 0.0;
                                 double prod = 1.0;
                                 for (double xi : x) {
                                   sum += xi;
                                   prod *= xi;
                                 }
                                 return s.y_empty + (sum - c.sum_mean) / c.sum_stddev +
                                        (prod - c.product_mean) / c.product_stddev;
                               },
                               [x](const BlackBox& s) { return s.f(x); }},
                    variant_);
}

StandardizationConstants standardization_constants(std::size_t n) {
  const double nn = static_cast<double>(n);
  const double p2 = std::pow(0.5, nn);
  const double p3 = std::pow(1.0 / 3.0, nn);
  const double p4 = std::pow(0.25, nn);
  return {0.5 * nn, std::sqrt(nn / 12.0), p2, std::sqrt(p3 - p4)};
}

std::optional<Moments> exact_moments(const FunctionSpec& spec, const InputModel& model) {
  if (model.dimension() != spec.dimension()) throw InvalidArgument("exact_moments: dimension mismatch");
  return std::visit(
      Overloaded{[](const PurelyMultiplicative& s) -> std::optional<Moments> {
                   double mean_prod = 1.0;
                   double second = 1.0;
                   double mean_sq = 1.0;
                   for (const auto& t : s.terms) {
                     mean_prod *= t.nu;
                     second *= t.delta_sq + t.nu * t.nu;
                     mean_sq *= t.nu * t.nu;
                   }
                   return Moments{s.nu0 * mean_prod, s.nu0 * s.nu0 * (second - mean_sq)};
                 },
                 [](const PurelyAdditive& s) -> std::optional<Moments> {
                   double mean = s.mu0;
                   double var = 0.0;
                   for (const auto& t : s.terms) {
                     mean += t.mu;
                     var += t.lambda_sq;
                   }
                   return Moments{mean, var};
                 },
                 [](const Blended& s) -> std::optional<Moments> {
                   const std::size_t n = s.terms.size();
                   double second = 1.0;
                   double mean_sq = 1.0;
                   double additive = 0.0;
                   double covariance = 0.0;
                   for (std::size_t i = 0; i < n; ++i) {
                     const auto& t = s.terms[i];
                     second *= t.delta_sq + t.nu * t.nu;
                     mean_sq *= t.nu * t.nu;
                     additive += t.lambda_sq;
                     // nu0 (prod_j nu_j) eta_i / nu_i written without the division.
                     double others = 1.0;
                     for (std::size_t j = 0; j < n; ++j)
                       if (j != i) others *= s.terms[j].nu;
                     covariance += others * t.eta_sq;
                   }
                   const double var = s.nu0 * s.nu0 * (second - mean_sq) + additive + 2.0 * s.nu0 * covariance;
                   return Moments{blended_mean(s), var};
                 },
                 [&model](const PowerMean& s) -> std::optional<Moments> {
                   const auto sm = sum_moments(model, 2 * s.m);
                   if (!sm) return std::nullopt;
                   const double scale = std::pow(2.0 / static_cast<double>(s.n), s.m);
                   const double mean = scale * (*sm)[s.m];
                   return Moments{mean, scale * scale * (*sm)[2 * s.m] - mean * mean};
                 },
                 [&model](const StandardizedBlend& s) -> std::optional<Moments> {
                   for (const auto& m : model.marginals())
                     if (!is_standard_uniform(m)) return std::nullopt;
                   const double nn = static_cast<double>(s.n);
                   const double ratio = nn * std::pow(3.0, nn - 1.0) / (std::pow(4.0, nn) - std::pow(3.0, nn));
                   return Moments{s.y_empty, 2.0 + 2.0 * std::sqrt(ratio)};
                 },
                 [](const BlackBox&) -> std::optional<Moments> { return std::nullopt; }},
      spec.variant());
}

InputModel example_model(std::size_t n) { return InputModel::iid(MarginalDistribution(Uniform{0.0, 1.0}), n); }

std::vector<std::string> example_names() { return {"example1-y1", "example1-y2", "example2", "example4"}; }

FunctionSpec make_example(const std::string& name, const ExampleParams& params) {
  const MarginalDistribution unit(Uniform{0.0, 1.0});
  const auto identity = [](double x) { return x; };
  if (name == "example1-y1") {
    PurelyMultiplicative s{params.nu0, {}};
    s.terms.assign(params.n, make_term(identity, nullptr, unit));
    return FunctionSpec(std::move(s), name);
  }
  if (name == "example1-y2") {
    PurelyAdditive s{params.mu0, {}};
    s.terms.assign(params.n, make_term(nullptr, identity, unit));
    return FunctionSpec(std::move(s), name);
  }
  if (name == "example2") return FunctionSpec(StandardizedBlend{params.y_empty, params.n}, name);
  if (name == "example4") return FunctionSpec(PowerMean{params.m, params.n}, name);
  throw InvalidArgument("unknown example function: " + name);
}

}  // namespace dimdecomp
