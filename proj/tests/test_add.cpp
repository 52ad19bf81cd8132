#include <cmath>
#include <random>

#include "doctest.h"
#include "dimdecomp/add.hpp"
#include "dimdecomp/error.hpp"
#include "dimdecomp/subset.hpp"
#include "support/random_specs.hpp"

using namespace dimdecomp;

TEST_CASE("index subsets") {
  const auto u = IndexSubset::of({0, 2});
  CHECK(u.size() == 2);
  CHECK(u.to_string() == "{1,3}");
  CHECK(IndexSubset().to_string() == "{}");
  CHECK(u.complement(4) == IndexSubset::of({1, 3}));
  const auto all = subsets_up_to(4, 2);
  CHECK(all.size() == 1 + 4 + 6);
  CHECK(all[1] == IndexSubset::single(0));
  CHECK(all[5] == IndexSubset::of({0, 1}));
  CHECK(subsets_of(IndexSubset::of({1, 3, 4})).size() == 8);
}

TEST_CASE("closed form: example 1 product") {
  const auto add = build_closed_form(make_example("example1-y1", {.n = 6}), example_model(6));
  CHECK(add.y_empty() == doctest::Approx(1.5625));
  const double comp = 100.0 * 100.0 * std::pow(0.25, 5) / 12.0;
  CHECK(add.variance(IndexSubset::single(3)) == doctest::Approx(comp).epsilon(1e-14));
  CHECK(comp == doctest::Approx(0.8138021).epsilon(1e-7));
  CHECK(truncated_variance(add, 1) == doctest::Approx(4.8828125).epsilon(1e-14));
  const double sigma_sq = add.total_variance();
  CHECK(std::abs(sigma_sq - truncated_variance(add, 1)) / sigma_sq == doctest::Approx(0.566974).epsilon(1e-6));
  CHECK(truncated_variance(add, 6) == doctest::Approx(sigma_sq).epsilon(1e-14));

  double first = 0.0;
  for (const auto& s : sensitivity_indices(add))
    if (s.subset.size() == 1) first += s.value;
  CHECK(first == doctest::Approx(1.0 - 0.566974).epsilon(1e-6));

  std::mt19937_64 rng(3);
  std::vector<double> x(6);
  for (int p = 0; p < 100; ++p) {
    for (auto& v : x) v = testing::uniform(rng, 0.0, 1.0);
    CHECK(evaluate_truncated(add, 6, x) == doctest::Approx(make_example("example1-y1", {.n = 6})(x)).epsilon(1e-10));
    CHECK(evaluate_truncated(add, 0, x) == add.y_empty());
  }
}

TEST_CASE("closed form: example 1 sum") {
  const auto y2 = make_example("example1-y2", {.n = 10});
  const auto add = build_closed_form(y2, example_model(10), 3);
  const double x[10] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.05};
  CHECK(add.component(add.index_of(IndexSubset::single(2)), x) == doctest::Approx(0.3 - 0.5));
  CHECK(add.component(add.index_of(IndexSubset::of({1, 2})), x) == 0.0);
  for (std::size_t s = 1; s <= 3; ++s) CHECK(truncated_variance(add, s) == doctest::Approx(10.0 / 12.0).epsilon(1e-14));
  for (const auto& si : sensitivity_indices(add))
    if (si.subset.size() == 1) CHECK(si.value == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(evaluate_truncated(add, 1, x) == doctest::Approx(y2(x)).epsilon(1e-14));
  CHECK_THROWS_AS(truncated_variance(add, 4), Unavailable);
}

TEST_CASE("blended with nu0 = 0 has the additive components") {
  std::mt19937_64 rng(8);
  auto c = testing::random_case(rng, 3, 3, 2, testing::SpecKind::additive);
  const auto& a = std::get<PurelyAdditive>(c.spec.variant());
  const auto pure = build_closed_form(c.spec, c.model);
  const auto blend = build_closed_form(FunctionSpec(Blended{0.0, a.mu0, a.terms}), c.model);
  CHECK(pure.variances() == blend.variances());
  const double x[3] = {0.2, 0.4, 0.6};
  for (std::size_t k = 0; k < pure.subsets().size(); ++k) CHECK(pure.component(k, x) == blend.component(k, x));
}

TEST_CASE("deterministic coordinate gives zero sensitivity") {
  std::vector<UnivariateTerm> terms;
  const MarginalDistribution u(Uniform{});
  terms.push_back(make_term([](double x) { return 1.0 + x; }, nullptr, u));
  terms.push_back(make_term([](double) { return 2.0; }, nullptr, u));
  terms.push_back(make_term([](double x) { return x * x; }, nullptr, u));
  const auto add = build_closed_form(FunctionSpec(PurelyMultiplicative{1.0, terms}), example_model(3));
  for (const auto& s : sensitivity_indices(add))
    if (s.subset.contains(1)) CHECK(s.value == 0.0);
}

TEST_CASE("numeric builder: power mean and orders") {
  const auto pm = make_example("example4", {.n = 10, .m = 1});
  const auto add = build_numeric(pm, example_model(10), 1, IntegrationSpec::tensor_gauss(2), 4);
  const auto& grid = *add.grid();
  std::vector<double> x(10, 0.5);
  for (double node : grid.rules[0].nodes) {
    x[0] = node;
    CHECK(std::abs(add.component(0, x) - 0.2 * (node - 0.5)) < 1e-9);
  }
  const auto zero = build_numeric(pm, example_model(10), 0, IntegrationSpec::tensor_gauss(2));
  CHECK(zero.subsets().empty());
  CHECK(zero.y_empty() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(add.provenance() == Provenance::numeric);
  CHECK(add.provenance_id() == "numeric:tensor_gauss(2)");
}

TEST_CASE("numeric builder matches the closed form") {
  const auto y1 = make_example("example1-y1", {.n = 6});
  const auto closed = build_closed_form(y1, example_model(6), 2);
  const auto numeric = build_numeric(y1, example_model(6), 2, IntegrationSpec::tensor_gauss(3));
  for (std::size_t k = 0; k < closed.subsets().size(); ++k)
    CHECK(numeric.variances()[k] == doctest::Approx(closed.variances()[k]).epsilon(1e-8));

  std::mt19937_64 rng(21);
  for (int i = 0; i < 25; ++i) {
    const auto c = testing::random_case(rng, 1, 4, 1 + i % 2);
    const auto r = testing::check_oracle(c, rng, 30);
    CHECK(r.variance_rel <= 1e-8);
    CHECK(r.add_reconstruction <= 1e-9);
    CHECK(r.fdd_reconstruction <= 1e-9);
  }
}

TEST_CASE("zero means and orthogonality of closed-form components") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 20; ++i) {
    const auto c = testing::random_case(rng, 2, 5, 1);
    const auto r = testing::check_properties(c);
    CHECK(r.zero_mean <= 1e-8);
    CHECK(r.orthogonality <= 1e-8);
  }
}

TEST_CASE("univariate component moments") {
  const auto add = build_closed_form(make_example("example1-y2", {.n = 3}), example_model(3));
  const auto m = univariate_moments(add);
  REQUIRE(m.size() == 3);
  CHECK(m[0].variance == doctest::Approx(1.0 / 12.0));
  CHECK(std::abs(m[0].third) < 1e-15);
  CHECK(m[0].fourth == doctest::Approx(1.0 / 80.0));
}

TEST_CASE("closed form refuses unstructured specs") {
  CHECK_THROWS_AS(build_closed_form(make_example("example4", {.n = 3, .m = 2}), example_model(3)), InvalidArgument);
  CHECK_THROWS_AS(build_numeric(make_example("example4", {.n = 3, .m = 2}), example_model(3), 4,
                                IntegrationSpec::tensor_gauss(3)),
                  InvalidArgument);
}
