#include <cmath>
#include <random>

#include "doctest.h"
#include "dimdecomp/error.hpp"
#include "dimdecomp/functions.hpp"
#include "dimdecomp/integrate.hpp"
#include "support/random_specs.hpp"

using namespace dimdecomp;

TEST_CASE("evaluate: spec examples") {
  const auto y1 = make_example("example1-y1", {.n = 6});
  std::vector<double> ones(6, 1.0);
  CHECK(y1(ones) == 100.0);

  const auto pm = make_example("example4", {.n = 10, .m = 1});
  std::vector<double> x(10, 0.5);
  x[0] = 0.2, x[1] = 0.8;
  CHECK(pm(x) == doctest::Approx(1.0).epsilon(1e-15));
  for (int m = 1; m <= 8; ++m) {
    std::vector<double> half(10, 0.5);
    CHECK(make_example("example4", {.n = 10, .m = m})(half) == doctest::Approx(1.0).epsilon(1e-14));
  }

  // Hand evaluation of the standardized blend at the centre point, N = 5.
  const auto y = make_example("example2", {.n = 5, .y_empty = 5.0});
  std::vector<double> c(5, 0.5);
  const double sum_term = (2.5 - 2.5) / std::sqrt(5.0 / 12.0);
  const double prod_term = (std::pow(0.5, 5) - std::pow(0.5, 5)) / std::sqrt(std::pow(3.0, -5) - std::pow(4.0, -5));
  CHECK(y(c) == doctest::Approx(5.0 + sum_term + prod_term).epsilon(1e-14));
  std::vector<double> z{0.1, 0.9, 0.3, 0.7, 0.4};
  const double s = 2.4, p = 0.1 * 0.9 * 0.3 * 0.7 * 0.4;
  const double expect = 5.0 + (s - 2.5) / std::sqrt(5.0 / 12.0) +
                        (p - std::pow(0.5, 5)) / std::sqrt(std::pow(3.0, -5) - std::pow(4.0, -5));
  CHECK(y(z) == doctest::Approx(expect).epsilon(1e-14));

  CHECK_THROWS_AS(y1(std::vector<double>(5, 0.5)), InvalidArgument);
  CHECK_THROWS_AS(make_example("nope", {}), InvalidArgument);
}

TEST_CASE("exact moments: spec examples") {
  const auto m1 = exact_moments(make_example("example1-y1", {.n = 6}), example_model(6));
  REQUIRE(m1);
  CHECK(m1->mean == doctest::Approx(1.5625));
  CHECK(m1->variance == doctest::Approx(100.0 * 100.0 / 729.0 - 100.0 * 100.0 / 4096.0).epsilon(1e-14));
  CHECK(m1->variance == doctest::Approx(11.276015).epsilon(1e-7));

  const auto m2 = exact_moments(make_example("example1-y2", {.n = 10}), example_model(10));
  CHECK(m2->mean == doctest::Approx(5.0));
  CHECK(m2->variance == doctest::Approx(10.0 / 12.0).epsilon(1e-14));

  const auto m3 = exact_moments(make_example("example2", {.n = 5, .y_empty = 5.0}), example_model(5));
  CHECK(m3->mean == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(m3->variance == doctest::Approx(2.0 + 2.0 * std::sqrt(405.0 / 781.0)).epsilon(1e-13));
  CHECK(m3->variance == doctest::Approx(3.4402305).epsilon(1e-7));

  CHECK_FALSE(exact_moments(FunctionSpec(BlackBox{2, [](std::span<const double>) { return 1.0; }}), example_model(2)));
}

TEST_CASE("exact moments agree with quadrature on random structured specs") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const auto c = testing::random_case(rng, 1, 5, 2);
    const auto m = exact_moments(c.spec, c.model);
    REQUIRE(m);
    const auto e = expectation(
        [&](const Node& node, std::span<double> out) {
          const double v = c.spec(node.x);
          out[0] = v;
          out[1] = v * v;
        },
        2, c.model, IntegrationSpec::tensor_gauss(3));
    CHECK(e[0].value == doctest::Approx(m->mean).epsilon(1e-10));
    CHECK(e[1].value - e[0].value * e[0].value == doctest::Approx(m->variance).epsilon(1e-9));
  }
}

TEST_CASE("blended degenerations match the pure forms") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    auto a = testing::random_case(rng, 2, 6, 1, testing::SpecKind::additive);
    const auto& add = std::get<PurelyAdditive>(a.spec.variant());
    const auto blended_add = FunctionSpec(Blended{0.0, add.mu0, add.terms});
    CHECK(exact_moments(blended_add, a.model)->variance ==
          doctest::Approx(exact_moments(a.spec, a.model)->variance).epsilon(1e-14));

    auto p = testing::random_case(rng, 2, 6, 1, testing::SpecKind::multiplicative);
    auto mult = std::get<PurelyMultiplicative>(p.spec.variant());
    auto terms = mult.terms;
    for (auto& t : terms) t.g = nullptr, t.mu = 0.0, t.lambda_sq = 0.0, t.eta_sq = 0.0;
    const auto blended_mult = FunctionSpec(Blended{mult.nu0, 0.0, terms});
    CHECK(exact_moments(blended_mult, p.model)->variance ==
          doctest::Approx(exact_moments(p.spec, p.model)->variance).epsilon(1e-14));
  }
}

TEST_CASE("standardized blend pieces have zero mean and unit variance") {
  const std::size_t n = 5;
  const auto k = standardization_constants(n);
  CHECK(k.sum_mean == 2.5);
  CHECK(k.sum_stddev == doctest::Approx(std::sqrt(5.0 / 12.0)));
  const auto e = expectation(
      [&](const Node& node, std::span<double> out) {
        double s = 0.0, p = 1.0;
        for (double v : node.x) s += v, p *= v;
        const double a = (s - k.sum_mean) / k.sum_stddev;
        const double b = (p - k.product_mean) / k.product_stddev;
        out[0] = a, out[1] = a * a, out[2] = b, out[3] = b * b;
      },
      4, example_model(n), IntegrationSpec::rqmc(1 << 17, 1, 8));
  CHECK(std::abs(e[0].value) < 5e-3);
  CHECK(std::abs(e[1].value - 1.0) < 5e-3);
  CHECK(std::abs(e[2].value) < 5e-3);
  CHECK(std::abs(e[3].value - 1.0) < 5e-3);
}

TEST_CASE("evaluation budget") {
  FunctionSpec f(BlackBox{2, [](std::span<const double> x) { return x[0] + x[1]; }, true});
  auto budget = std::make_shared<EvaluationBudget>(10);
  f.attach_budget(budget);
  std::vector<double> x{0.1, 0.2};
  for (int i = 0; i < 10; ++i) f(x);
  CHECK(budget->used() == 10);
  CHECK_THROWS_AS(f(x), BudgetExhausted);
  CHECK(budget->used() == 10);
  CHECK_THROWS_AS(expectation(f, example_model(2), IntegrationSpec::tensor_gauss(3)), BudgetExhausted);
}

TEST_CASE("structured views") {
  CHECK(make_example("example2", {.n = 5})
            .as_blended()
            .has_value());
  CHECK_FALSE(make_example("example4", {.n = 5, .m = 3}).as_blended());
  CHECK(make_example("example1-y1", {.n = 3}).is_structured());
  CHECK_FALSE(make_example("example4", {.n = 3}).is_structured());
}
