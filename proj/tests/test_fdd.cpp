#include <cmath>
#include <random>

#include "doctest.h"
#include "dimdecomp/error.hpp"
#include "dimdecomp/fdd.hpp"
#include "support/random_specs.hpp"

using namespace dimdecomp;

namespace {

std::shared_ptr<const AddDecomposition> closed(const FunctionSpec& y, const InputModel& m) {
  return std::make_shared<const AddDecomposition>(build_closed_form(y, m));
}

}  // namespace

TEST_CASE("factors of low order") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto c = testing::random_case(rng, 3, 5, 1, testing::SpecKind::blended);
    const auto add = closed(c.spec, c.model);
    const auto fdd = fdd_from_add(add);
    CHECK(fdd.one_plus_z_empty() == add->y_empty());
    std::vector<double> x(c.spec.dimension());
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = c.model[d].quantile(testing::uniform(rng, 0.1, 0.9));
    const double y0 = add->y_empty();
    const auto ui = IndexSubset::single(0), uj = IndexSubset::single(1), uij = IndexSubset::of({0, 1});
    const double yi = add->component(add->index_of(ui), x);
    const double yj = add->component(add->index_of(uj), x);
    const double yij = add->component(add->index_of(uij), x);
    CHECK(fdd.factor(ui, x) == doctest::Approx((y0 + yi) / y0).epsilon(1e-12));
    // Bivariate factor from the constant, univariate and bivariate components.
    const double expect = y0 * (y0 + yi + yj + yij) / ((y0 + yi) * (y0 + yj));
    CHECK(fdd.factor(uij, x) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("multiplicative functions are reproduced by the univariate FDD") {
  const auto y1 = make_example("example1-y1", {.n = 6});
  const auto fdd = fdd_from_add(closed(y1, example_model(6)));
  std::mt19937_64 rng(1);
  std::vector<double> x(6);
  for (int p = 0; p < 50; ++p) {
    for (auto& v : x) v = testing::uniform(rng, 0.0, 1.0);
    CHECK(evaluate_truncated(fdd, 1, x) == doctest::Approx(y1(x)).epsilon(1e-12));
    CHECK(fdd.factor(IndexSubset::single(2), x) == doctest::Approx(x[2] / 0.5).epsilon(1e-12));
    CHECK(fdd.factor(IndexSubset::of({1, 4}), x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(evaluate_truncated(fdd, 0, x) == fdd.one_plus_z_empty());
  }
  for (std::size_t s = 1; s <= 3; ++s) {
    const auto m = moments(fdd, s, example_model(6), IntegrationSpec::tensor_gauss(3));
    CHECK(m.variance == doctest::Approx(exact_moments(y1, example_model(6))->variance).epsilon(1e-12));
  }
}

TEST_CASE("two-variable function with a product correction is reproduced at S = 1") {
  // y = y0 + g1 + g2 + g1 g2 / y0 = (y0 + g1)(y0 + g2) / y0 with zero-mean g_i.
  const double y0 = 3.0;
  std::vector<UnivariateTerm> terms;
  const MarginalDistribution u(Uniform{});
  terms.push_back(make_term([=](double x) { return 1.0 + (x - 0.5) / y0; }, nullptr, u));
  terms.push_back(make_term([=](double x) { return 1.0 + (x * x - 1.0 / 3.0) / y0; }, nullptr, u));
  const FunctionSpec y(PurelyMultiplicative{y0, terms});
  const auto fdd = fdd_from_add(closed(y, example_model(2)));
  for (double a : {0.1, 0.5, 0.9})
    for (double b : {0.2, 0.7}) {
      const double x[2] = {a, b};
      const double g1 = a - 0.5, g2 = b * b - 1.0 / 3.0;
      CHECK(evaluate_truncated(fdd, 1, x) == doctest::Approx(y0 + g1 + g2 + g1 * g2 / y0).epsilon(1e-13));
    }
}

TEST_CASE("full reconstruction on random specs") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 30; ++i) {
    const auto c = testing::random_case(rng, 1, 4, 2);
    const auto fdd = fdd_from_add(closed(c.spec, c.model));
    std::vector<double> x(c.spec.dimension());
    for (int p = 0; p < 20; ++p) {
      for (std::size_t d = 0; d < x.size(); ++d) x[d] = c.model[d].quantile(testing::uniform(rng, 0.02, 0.98));
      const double y = c.spec(x);
      CHECK(std::abs(evaluate_truncated(fdd, x.size(), x) - y) <= 1e-9 * std::max(1.0, std::abs(y)));
    }
  }
}

TEST_CASE("univariate variance closed form") {
  const std::vector<double> none(4, 0.0);
  CHECK(univariate_variance_closed_form(2.0, none) == 0.0);
  const double comp = 100.0 * 100.0 * std::pow(0.25, 5) / 12.0;
  const std::vector<double> y1(6, comp);
  const double v = univariate_variance_closed_form(1.5625, y1);
  CHECK(v == doctest::Approx(2.44140625 * (std::pow(4.0 / 3.0, 6) - 1.0)).epsilon(1e-14));
  CHECK(v == doctest::Approx(11.276015).epsilon(1e-7));
  const std::vector<double> one{0.7};
  CHECK(univariate_variance_closed_form(-2.0, one) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK_THROWS_AS(univariate_variance_closed_form(0.0, one), SingularFactor);
}

TEST_CASE("FDD univariate variance approaches the ADD one as fluctuations shrink") {
  std::mt19937_64 rng(6);
  const auto c = testing::random_case(rng, 4, 4, 1, testing::SpecKind::blended);
  const auto add = closed(c.spec, c.model);
  std::vector<double> vars;
  for (std::size_t i = 0; i < 4; ++i) vars.push_back(add->variance(IndexSubset::single(i)));
  double previous = INFINITY;
  for (double scale : {1.0, 0.1, 0.01, 0.001}) {
    std::vector<double> scaled;
    double sum = 0.0;
    for (double v : vars) scaled.push_back(v * scale * scale), sum += v * scale * scale;
    const double ratio = univariate_variance_closed_form(add->y_empty(), scaled) / sum;
    CHECK(ratio >= 1.0);
    CHECK(ratio - 1.0 < previous);
    previous = ratio - 1.0;
  }
  CHECK(previous < 1e-5);
}

TEST_CASE("conditioning shift for a vanishing constant") {
  // y = x1 + x2 - 1 on uniforms: y_empty = 0.
  std::vector<UnivariateTerm> terms(2, make_term(nullptr, [](double x) { return x; }, MarginalDistribution(Uniform{})));
  const FunctionSpec y(PurelyAdditive{-1.0, terms});
  const auto add = closed(y, example_model(2));
  CHECK(add->y_empty() == doctest::Approx(0.0).epsilon(1e-15));
  const auto fdd = fdd_from_add(add);
  const double sigma = std::sqrt(add->total_variance());
  CHECK(fdd.conditioning_shift() == doctest::Approx(10.0 * sigma));
  const double x[2] = {0.3, 0.9};
  CHECK(evaluate_truncated(fdd, 2, x) == doctest::Approx(y(x)).epsilon(1e-12));
  const auto m = moments(fdd, 1, example_model(2), IntegrationSpec::tensor_gauss(4));
  CHECK(std::abs(m.mean) < 1e-12);
  CHECK_THROWS_AS(fdd_from_add(add, FddOptions{false}), SingularFactor);
}

TEST_CASE("FDD means of the standardized blend") {
  const auto y = make_example("example2", {.n = 5, .y_empty = 5.0});
  const auto fdd = fdd_from_add(closed(y, example_model(5)));
  const auto m1 = moments(fdd, 1, example_model(5), IntegrationSpec::tensor_gauss(8));
  CHECK(m1.mean == doctest::Approx(5.0).epsilon(1e-12));
  for (std::size_t s = 2; s <= 4; ++s)
    CHECK(std::abs(moments(fdd, s, example_model(5), IntegrationSpec::tensor_gauss(8)).mean - 5.0) < 5e-4);
  const auto paired = moments_paired(fdd, 2, y, *exact_moments(y, example_model(5)), example_model(5),
                                     IntegrationSpec::tensor_gauss(8));
  const auto plain = moments(fdd, 2, example_model(5), IntegrationSpec::tensor_gauss(8));
  CHECK(paired.variance == doctest::Approx(plain.variance).epsilon(1e-8));
}

TEST_CASE("sum function FDD variance errors") {
  const auto y2 = make_example("example1-y2", {.n = 6});
  const auto model = example_model(6);
  const auto fdd = fdd_from_add(closed(y2, model));
  const auto m = moments(fdd, 1, model, IntegrationSpec::tensor_gauss(4));
  const double sigma_sq = 0.5;
  CHECK(std::abs(m.variance - sigma_sq) / sigma_sq == doctest::Approx(2.3436e-2).epsilon(1e-4));
}

TEST_CASE("tabulated factors agree with pointwise evaluation") {
  const auto y = make_example("example2", {.n = 4, .y_empty = 5.0});
  const auto add = closed(y, example_model(4));
  const auto fdd = fdd_from_add(add);
  const auto rules = tensor_rules(example_model(4), 3);
  const auto at = add->tabulate(rules, 2);
  const auto ft = fdd.tabulate(at);
  std::vector<std::uint8_t> idx{2, 0, 1, 2};
  std::vector<double> x(4);
  for (std::size_t d = 0; d < 4; ++d) x[d] = rules[d].nodes[idx[d]];
  for (std::size_t k = 0; k < ft.subsets.size(); ++k) {
    CHECK(at.lookup(k, idx) == doctest::Approx(add->component(k, x)).epsilon(1e-13));
    CHECK(ft.lookup(k, idx) == doctest::Approx(fdd.factor(ft.subsets[k], x)).epsilon(1e-13));
  }
}
