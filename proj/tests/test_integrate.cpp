#include <cmath>
#include <random>

#include "doctest.h"
#include "dimdecomp/error.hpp"
#include "dimdecomp/functions.hpp"
#include "dimdecomp/integrate.hpp"
#include "dimdecomp/sobol.hpp"

using namespace dimdecomp;

namespace {

double product(std::span<const double> x) {
  double p = 1.0;
  for (double v : x) p *= v;
  return p;
}

// Smooth test integrand with a known mean over uniform(0,1)^d: prod (1 + c_i (x_i - 1/2)) exp-free.
double smooth(std::span<const double> x) {
  double p = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) p *= 1.0 + std::sin(3.0 * x[i]) / (1.0 + i);
  return p;
}

}  // namespace

TEST_CASE("tensor gauss: spec examples") {
  const auto model = example_model(6);
  const auto e = expectation(Evaluator(product), model, IntegrationSpec::tensor_gauss(4));
  CHECK(std::abs(e.value - 1.0 / 64.0) < 1e-12);

  const auto y1 = make_example("example1-y1", {.n = 6});
  const auto sq = expectation([&](std::span<const double> x) { return std::pow(y1(x), 2); }, model,
                              IntegrationSpec::tensor_gauss(4));
  const double ref = 100.0 * 100.0 / std::pow(3.0, 6);  // E[y1^2]
  CHECK(std::abs(sq.value - ref) < 1e-9);
  CHECK(ref == doctest::Approx(11.276015 + 1.5625 * 1.5625).epsilon(1e-7));

  const auto c = expectation([](std::span<const double>) { return 2.5; }, model, IntegrationSpec::tensor_gauss(4));
  CHECK(c.value == 2.5);
  CHECK(c.error_indicator == 0.0);
}

TEST_CASE("tensor gauss integrates per-dimension degree 2n-1 polynomials") {
  const InputModel model({Uniform{-1, 2}, Normal{0.5, 1.3}, Uniform{0, 1}});
  for (int n = 1; n <= 6; ++n) {
    const int deg = 2 * n - 1;
    auto f = [deg](std::span<const double> x) { return std::pow(x[0], deg) * std::pow(x[1], deg) + std::pow(x[2], deg); };
    const auto e = expectation(Evaluator(f), model, IntegrationSpec::tensor_gauss(n));
    // Exact value from the marginal moments.
    auto um = [](double a, double b, int k) { return (std::pow(b, k + 1) - std::pow(a, k + 1)) / ((k + 1) * (b - a)); };
    double nm = 0.0;
    {
      std::vector<double> m{1.0, 0.5};
      for (int k = 2; k <= deg; ++k) m.push_back(0.5 * m[k - 1] + (k - 1) * 1.69 * m[k - 2]);
      nm = m[deg];
    }
    const double ref = um(-1, 2, deg) * nm + um(0, 1, deg);
    CHECK(std::abs(e.value - ref) <= 1e-10 * std::abs(ref));
  }
}

TEST_CASE("tensor gauss node budget and validation") {
  const auto model = example_model(8);
  CHECK_THROWS_AS(expectation(Evaluator(product), model, IntegrationSpec::tensor_gauss(8)), IntegrationFailure);
  CHECK_THROWS_AS(IntegrationSpec::tensor_gauss(0).validate(2), InvalidArgument);
  CHECK_THROWS_AS(IntegrationSpec::rqmc(16, 1, 0).validate(2), InvalidArgument);
  CHECK_THROWS_AS(IntegrationSpec::monte_carlo(0, 1).validate(2), InvalidArgument);
  CHECK_THROWS_AS(expectation([](std::span<const double> x) { return 1.0 / (x[0] - x[0]); }, example_model(2),
                              IntegrationSpec::tensor_gauss(2)),
                  IntegrationFailure);
}

TEST_CASE("conditional expectation") {
  const auto model = example_model(10);
  const auto y2 = make_example("example1-y2", {.n = 10});
  const double x1 = 0.3;
  const auto e = conditional_expectation(y2, model, IndexSubset::single(0), std::span<const double>(&x1, 1),
                                         IntegrationSpec::tensor_gauss(2));
  CHECK(std::abs(e.value - (0.3 + 9 * 0.5)) < 1e-12);

  const auto y1 = make_example("example1-y1", {.n = 6});
  const double t = 0.8;
  const auto c = conditional_expectation(y1, example_model(6), IndexSubset::single(0), std::span<const double>(&t, 1),
                                         IntegrationSpec::tensor_gauss(3));
  CHECK(c.value == doctest::Approx(100.0 * t / 32.0).epsilon(1e-13));

  std::vector<double> all(6, 0.9);
  const auto full = conditional_expectation(y1, example_model(6), IndexSubset::full(6), all,
                                            IntegrationSpec::monte_carlo(10, 1));
  CHECK(full.value == y1(all));
  CHECK(full.error_indicator == 0.0);
}

TEST_CASE("sampled backends are deterministic and consistent") {
  const auto model = example_model(5);
  const auto ref = expectation(Evaluator(smooth), model, IntegrationSpec::tensor_gauss(12)).value;
  const auto a = expectation(Evaluator(smooth), model, IntegrationSpec::rqmc(4096, 3));
  const auto b = expectation(Evaluator(smooth), model, IntegrationSpec::rqmc(4096, 3));
  CHECK(a.value == b.value);
  CHECK(a.error_indicator == b.error_indicator);
  const auto m = expectation(Evaluator(smooth), model, IntegrationSpec::monte_carlo(200000, 9));
  CHECK(std::abs(m.value - ref) < 5 * m.error_indicator);

  // 8 replicates: the standard error scaled by the two-sided 95% Student-t quantile.
  int covered = 0;
  const int trials = 60;
  double se_small = 0.0, se_large = 0.0;
  for (int s = 0; s < trials; ++s) {
    const auto e = expectation(Evaluator(smooth), model, IntegrationSpec::rqmc(1024, 1000 + s));
    covered += std::abs(e.value - ref) <= 2.365 * e.error_indicator ? 1 : 0;
    se_small += e.error_indicator;
    if (s < 5) se_large += expectation(Evaluator(smooth), model, IntegrationSpec::rqmc(16384, 1000 + s)).error_indicator;
  }
  CHECK(covered >= 0.95 * trials);
  CHECK(se_large / 5 < 0.25 * se_small / trials);
}

TEST_CASE("sobol sequence") {
  const SobolSequence seq(3);
  std::vector<double> p(3);
  seq.point(0, p);
  CHECK(p == std::vector<double>{0.0, 0.0, 0.0});
  seq.point(1, p);
  CHECK(p == std::vector<double>{0.5, 0.5, 0.5});

  // First 2^k points stratify every coordinate, scrambled or not.
  const std::size_t k = 8, count = std::size_t{1} << k;
  for (bool scrambled : {false, true}) {
    std::vector<std::vector<int>> hits(3, std::vector<int>(count, 0));
    for (std::size_t i = 0; i < count; ++i) {
      if (scrambled)
        seq.scrambled_point(i, 17, p);
      else
        seq.point(i, p);
      for (std::size_t d = 0; d < 3; ++d) ++hits[d][static_cast<std::size_t>(p[d] * count)];
    }
    for (const auto& h : hits)
      for (int c : h) CHECK(c == 1);
  }
  CHECK_THROWS_AS(SobolSequence(65), InvalidArgument);
}

TEST_CASE("pairwise sum") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(pairwise_sum({}) == 0.0);
}

TEST_CASE("results do not depend on thread scheduling") {
  const auto model = example_model(6);
  auto f = [](std::span<const double> x) { return smooth(x) * x[0]; };
  const auto a = expectation(Evaluator(f), model, IntegrationSpec::rqmc(8192, 5), true);
  const auto b = expectation(Evaluator(f), model, IntegrationSpec::rqmc(8192, 5), false);
  CHECK(a.value == b.value);
  const auto c = expectation(Evaluator(f), model, IntegrationSpec::tensor_gauss(6), true);
  const auto d = expectation(Evaluator(f), model, IntegrationSpec::tensor_gauss(6), false);
  CHECK(c.value == d.value);
}
