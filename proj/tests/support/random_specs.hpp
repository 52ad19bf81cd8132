#pragma once

// Random structured functions and the property / oracle checks run on them.
// Shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dimdecomp/add.hpp"
#include "dimdecomp/analysis.hpp"
#include "dimdecomp/error.hpp"
#include "dimdecomp/fdd.hpp"
#include "dimdecomp/functions.hpp"
#include "dimdecomp/hdd.hpp"
#include "dimdecomp/integrate.hpp"

namespace dimdecomp::testing {

enum class SpecKind { multiplicative, additive, blended };

struct RandomCase {
  SpecKind kind;
  FunctionSpec spec;
  InputModel model;
  int degree;  // per-variable polynomial degree of h_i and g_i
};

inline double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline double signed_magnitude(std::mt19937_64& rng, double lo, double hi) {
  const double v = uniform(rng, lo, hi);
  return std::bernoulli_distribution(0.5)(rng) ? v : -v;
}

inline MarginalDistribution random_marginal(std::mt19937_64& rng) {
  if (std::bernoulli_distribution(0.6)(rng)) {
    const double a = uniform(rng, -1.0, 1.0);
    return MarginalDistribution(Uniform{a, a + uniform(rng, 0.5, 2.0)});
  }
  return MarginalDistribution(Normal{uniform(rng, -1.0, 1.0), uniform(rng, 0.3, 1.0)});
}

// Polynomial c0 + c1 (x - m) + c2 (x - m)^2 with E = target when degree < 2.
inline ScalarFunction random_poly(std::mt19937_64& rng, double target, double centre, int degree, double spread) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  c[0] = target;
  for (int k = 1; k <= degree; ++k) c[static_cast<std::size_t>(k)] = uniform(rng, -spread, spread) / k;
  return [c, centre](double x) {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * (x - centre) + c[k];
    return v;
  };
}

inline RandomCase random_case(std::mt19937_64& rng, std::size_t n_min, std::size_t n_max, int degree,
                              std::optional<SpecKind> force = std::nullopt) {
  const auto n = std::uniform_int_distribution<std::size_t>(n_min, n_max)(rng);
  SpecKind kind = force.value_or(static_cast<SpecKind>(std::uniform_int_distribution<int>(0, 3)(rng) % 3));

  std::vector<MarginalDistribution> marginals;
  std::vector<UnivariateTerm> terms;
  for (std::size_t i = 0; i < n; ++i) {
    marginals.push_back(random_marginal(rng));
    const auto& mg = marginals.back();
    const double centre = mg.mean();
    const double scale = 1.0 / std::sqrt(mg.variance());
    ScalarFunction h, g;
    if (kind != SpecKind::additive)
      h = random_poly(rng, signed_magnitude(rng, 0.7, 1.5), centre, degree, 0.4 * scale);
    if (kind != SpecKind::multiplicative)
      g = random_poly(rng, uniform(rng, -1.0, 1.0), centre, degree, scale);
    terms.push_back(make_term(std::move(h), std::move(g), mg));
  }
  InputModel model(marginals);

  // Keep y_empty well away from zero.
  const double target = signed_magnitude(rng, 1.0, 4.0);
  double prod = 1.0, sum = 0.0;
  for (const auto& t : terms) {
    prod *= t.nu;
    sum += t.mu;
  }
  switch (kind) {
    case SpecKind::multiplicative:
      return {kind, FunctionSpec(PurelyMultiplicative{target / prod, terms}, "random-multiplicative"), model, degree};
    case SpecKind::additive:
      return {kind, FunctionSpec(PurelyAdditive{target - sum, terms}, "random-additive"), model, degree};
    case SpecKind::blended: {
      const double nu0 = signed_magnitude(rng, 0.5, 3.0) / prod;
      return {kind, FunctionSpec(Blended{nu0, target - nu0 * prod - sum, terms}, "random-blended"), model, degree};
    }
  }
  throw InvalidArgument("unreachable");
}

/// Gauss points per dimension that integrate every product used below exactly.
inline int exact_points(const RandomCase& c) { return 2 * c.degree + 1; }

struct PropertyReport {
  double zero_mean = 0.0;       // max |E[y_u]| / sigma^2
  double orthogonality = 0.0;   // max |E[y_u y_v]| / sigma^2, u != v
  bool fdd_dominates = true;
  bool hybrid_best = true;
  double alpha_beta_sum = 0.0;  // |alpha + beta - 1| of the univariate linear fit
  double reduction = 0.0;       // |nonlinear variance at gamma = 0 - linear variance| / sigma^2
  double sigma_sq = 0.0;
};

inline PropertyReport check_properties(const RandomCase& c) {
  PropertyReport r;
  const std::size_t n = c.spec.dimension();
  const auto exact = exact_moments(c.spec, c.model);
  r.sigma_sq = exact->variance;
  const auto points = exact_points(c);
  const auto spec = IntegrationSpec::tensor_gauss(points);

  auto add = std::make_shared<const AddDecomposition>(build_closed_form(c.spec, c.model));

  // Zero means and orthogonality by tensor quadrature. Large N: pairs up to order two.
  const std::size_t s = n <= 5 ? n : 2;
  const std::size_t k = add->count_up_to(s);
  const auto rules = tensor_rules(c.model, points);
  std::vector<double> mean(k, 0.0), gram(k * k, 0.0), vals(k), x(n);
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    double w = 1.0;
    for (std::size_t d = 0; d < n; ++d) {
      x[d] = rules[d].nodes[idx[d]];
      w *= rules[d].weights[idx[d]];
    }
    add->components(x, s, vals);
    for (std::size_t a = 0; a < k; ++a) {
      mean[a] += w * vals[a];
      for (std::size_t b = a + 1; b < k; ++b) gram[a * k + b] += w * vals[a] * vals[b];
    }
    std::size_t d = 0;
    while (d < n && ++idx[d] == rules[d].size()) idx[d++] = 0;
    if (d == n) break;
  }
  for (std::size_t a = 0; a < k; ++a) {
    r.zero_mean = std::max(r.zero_mean, std::abs(mean[a]) / r.sigma_sq);
    for (std::size_t b = a + 1; b < k; ++b) r.orthogonality = std::max(r.orthogonality, std::abs(gram[a * k + b]) / r.sigma_sq);
  }

  const auto fdd = fdd_from_add(add);
  CrossMomentOptions opt;
  opt.exact = exact;
  const auto cross = compute_cross_moments(c.spec, fdd, 1, c.model, spec, opt);
  const auto lin = fit_linear(cross);
  const auto non = fit_nonlinear(cross);
  const auto report = univariate_errors(c.spec, c.model, fdd, lin, spec, non);
  r.fdd_dominates = report.fdd_variance_dominates;
  r.hybrid_best = report.hybrid_is_best;
  r.alpha_beta_sum = std::abs(lin.alpha + lin.beta - 1.0);

  HybridModel reduced = non;
  reduced.alpha = lin.alpha;
  reduced.beta = lin.beta;
  reduced.gamma = 0.0;
  r.reduction = std::abs(hybrid_variance(reduced) - hybrid_variance(lin)) / r.sigma_sq;
  return r;
}

struct OracleReport {
  double variance_rel = 0.0;    // max relative difference of sigma_u^2, numeric vs closed form
  double add_reconstruction = 0.0;
  double fdd_reconstruction = 0.0;
};

inline OracleReport check_oracle(const RandomCase& c, std::mt19937_64& rng, std::size_t points = 100) {
  OracleReport r;
  const std::size_t n = c.spec.dimension();
  const int q = c.degree + 2;
  const auto closed = build_closed_form(c.spec, c.model);
  auto numeric = std::make_shared<const AddDecomposition>(
      build_numeric(c.spec, c.model, n, IntegrationSpec::tensor_gauss(q), q));
  const double sigma_sq = closed.total_variance();
  for (std::size_t k = 0; k < closed.subsets().size(); ++k) {
    const double a = closed.variances()[k];
    const double b = numeric->variances()[k];
    // Relative to the component, or to sigma^2 for components that vanish.
    r.variance_rel = std::max(r.variance_rel, std::abs(a - b) / std::max(std::abs(a), 1e-6 * sigma_sq));
  }
  const auto fdd = fdd_from_add(numeric);
  std::vector<double> x(n);
  for (std::size_t p = 0; p < points; ++p) {
    for (std::size_t d = 0; d < n; ++d) {
      const auto& mg = c.model[d];
      // Points inside the bulk of each marginal.
      x[d] = mg.quantile(uniform(rng, 0.02, 0.98));
    }
    const double y = c.spec.evaluate(x);
    const double scale = std::max(1.0, std::abs(y));
    r.add_reconstruction = std::max(r.add_reconstruction, std::abs(evaluate_truncated(*numeric, n, x) - y) / scale);
    r.fdd_reconstruction = std::max(r.fdd_reconstruction, std::abs(evaluate_truncated(fdd, n, x) - y) / scale);
  }
  return r;
}

}  // namespace dimdecomp::testing
