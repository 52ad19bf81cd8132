#include <cmath>
#include <random>

#include "doctest.h"
#include "dimdecomp/analysis.hpp"
#include "dimdecomp/hdd.hpp"
#include "dimdecomp/study.hpp"
#include "support/random_specs.hpp"

using namespace dimdecomp;

namespace {

struct Fitted {
  FddDecomposition fdd;
  CrossMoments cross;
};

Fitted fit(const FunctionSpec& y, const InputModel& model, std::size_t s, const IntegrationSpec& spec) {
  auto fdd = fdd_from_add(std::make_shared<const AddDecomposition>(build_closed_form(y, model)));
  CrossMomentOptions opt;
  opt.exact = exact_moments(y, model);
  auto cross = compute_cross_moments(y, fdd, s, model, spec, opt);
  return {std::move(fdd), std::move(cross)};
}

}  // namespace

TEST_CASE("additive functions: the hybrid is the ADD approximation") {
  std::mt19937_64 rng(2);
  const auto c = testing::random_case(rng, 4, 4, 1, testing::SpecKind::additive);
  const auto f = fit(c.spec, c.model, 1, IntegrationSpec::tensor_gauss(3));
  CHECK(f.cross.e_w_fdd.value == doctest::Approx(f.cross.var_add.value).epsilon(1e-12));
  CHECK(f.cross.e_add_fdd.value == doctest::Approx(f.cross.var_add.value).epsilon(1e-12));
  const auto lin = fit_linear(f.cross);
  CHECK(lin.alpha == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(lin.beta) < 1e-12);
  const auto non = fit_nonlinear(f.cross);
  CHECK(non.alpha == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(non.gamma) < 1e-8);
  std::vector<double> x(4);
  for (int p = 0; p < 20; ++p) {
    for (std::size_t d = 0; d < 4; ++d) x[d] = c.model[d].quantile(testing::uniform(rng, 0.1, 0.9));
    CHECK(evaluate(lin, f.fdd, x) == doctest::Approx(evaluate_truncated(f.fdd.add(), 1, x)).epsilon(1e-12));
  }
}

TEST_CASE("multiplicative functions: the hybrid is the FDD approximation") {
  const auto y1 = make_example("example1-y1", {.n = 6});
  const auto f = fit(y1, example_model(6), 1, IntegrationSpec::tensor_gauss(3));
  const auto lin = fit_linear(f.cross);
  CHECK(std::abs(lin.alpha) < 1e-12);
  CHECK(lin.beta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hybrid_variance(lin) == doctest::Approx(exact_moments(y1, example_model(6))->variance).epsilon(1e-12));
}

TEST_CASE("hybrid variance at the corners") {
  const auto y = make_example("example2", {.n = 5, .y_empty = 5.0});
  const auto f = fit(y, example_model(5), 2, IntegrationSpec::tensor_gauss(6));
  HybridModel h;
  h.cross = f.cross;
  h.s = 2;
  h.alpha = 1.0;
  CHECK(hybrid_variance(h) == doctest::Approx(f.cross.var_add.value));
  h.alpha = 0.0, h.beta = 1.0;
  CHECK(hybrid_variance(h) == doctest::Approx(f.cross.var_fdd.value));
  h.kind = HybridKind::Nonlinear3;
  CHECK(hybrid_variance(h) == doctest::Approx(f.cross.var_fdd.value));
}

TEST_CASE("standardized blend: univariate fits") {
  const auto y = make_example("example2", {.n = 5, .y_empty = 5.0});
  const auto model = example_model(5);
  const double sigma_sq = exact_moments(y, model)->variance;
  const auto f = fit(y, model, 1, IntegrationSpec::tensor_gauss(8));
  const auto lin = fit_linear(f.cross);
  const auto con = fit_linear_constrained(f.cross);
  CHECK(lin.alpha + lin.beta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(con.alpha == doctest::Approx(lin.alpha).epsilon(1e-10));
  CHECK(con.beta == doctest::Approx(lin.beta).epsilon(1e-10));
  CHECK(relative_variance_error(sigma_sq, hybrid_variance(lin)) == doctest::Approx(2.2734e-2).epsilon(5e-3));
  for (const auto& chk : f.cross.checks) CHECK_MESSAGE(chk.agrees, chk.entry);
  CHECK(hybrid_mean(lin) == 5.0);

  // Symmetric components: E[y_i^3] = 0 collapses E[w~^2 w^].
  const auto add = build_closed_form(y, model);
  const auto um = univariate_moments(add);
  double pairs = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(std::abs(um[i].third) < 1e-14);
    for (std::size_t j = i + 1; j < 5; ++j) pairs += um[i].variance * um[j].variance;
  }
  CHECK(f.cross.e_add2_fdd.value == doctest::Approx(2.0 / 5.0 * pairs).epsilon(1e-10));
}

TEST_CASE("cross moments from two backends agree") {
  const auto y = make_example("example2", {.n = 5, .y_empty = 5.0});
  const auto model = example_model(5);
  CrossMomentOptions opt;
  opt.exact = exact_moments(y, model);
  const auto fdd = fdd_from_add(std::make_shared<const AddDecomposition>(build_closed_form(y, model)));
  const auto a = compute_cross_moments(y, fdd, 1, model, IntegrationSpec::tensor_gauss(8), opt);
  const auto b = compute_cross_moments(y, fdd, 1, model, IntegrationSpec::rqmc(1 << 16, 1, 8), opt);
  const double tol = 3.0 * (a.e_w_fdd.error_indicator + b.e_w_fdd.error_indicator) + 1e-12;
  CHECK(std::abs(a.e_w_fdd.value - b.e_w_fdd.value) <= tol);
  CHECK(std::abs(a.e_add_fdd.value) <= std::sqrt(a.var_add.value * a.var_fdd.value));
}

TEST_CASE("constrained fit degrades at S = 3") {
  const auto y = make_example("example2", {.n = 5, .y_empty = 5.0});
  const auto model = example_model(5);
  const double sigma_sq = exact_moments(y, model)->variance;
  const auto c2 = fit_linear_constrained(fit(y, model, 2, IntegrationSpec::tensor_gauss(8)).cross);
  const auto c3 = fit_linear_constrained(fit(y, model, 3, IntegrationSpec::tensor_gauss(8)).cross);
  const double e2 = relative_variance_error(sigma_sq, hybrid_variance(c2));
  const double e3 = relative_variance_error(sigma_sq, hybrid_variance(c3));
  CHECK(e2 == doctest::Approx(5.5528e-3).epsilon(0.05));
  CHECK(e3 > e2);
  CHECK(c2.alpha + c2.beta == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("linear four-variate hybrid error") {
  const auto y = make_example("example2", {.n = 5, .y_empty = 5.0});
  const auto model = example_model(5);
  const double sigma_sq = exact_moments(y, model)->variance;
  const auto l4 = fit_linear(fit(y, model, 4, IntegrationSpec::tensor_gauss(8)).cross);
  CHECK(relative_variance_error(sigma_sq, hybrid_variance(l4)) == doctest::Approx(1.4099e-5).epsilon(0.05));
}

TEST_CASE("degenerate and ill-conditioned systems") {
  CrossMoments cm;
  cm.s = 2;
  cm.var_add = {1.0};
  cm.var_fdd = {1.0};
  cm.e_add_fdd = {1.0};
  cm.e_w_fdd = {1.0};
  const auto lin = fit_linear(cm);
  CHECK(lin.degenerate);
  CHECK(lin.alpha == 1.0);
  CHECK(lin.beta == 0.0);
  const auto non = fit_nonlinear(cm);
  CHECK(non.fallback);
  CHECK(non.gamma == 0.0);
}

// 2^14 points leave the linear fit under-resolved at m = 8.
TEST_CASE("nonlinear hybrid improves on the linear one for the power mean") {
  Pipeline pipe(make_example("example4", {.n = 10, .m = 8}), example_model(10),
                {.integration = IntegrationSpec::rqmc(1 << 16, 1, 8),
                 .add_integration = IntegrationSpec::tensor_gauss(5),
                 .grid_points = 9,
                 .max_order = 1});
  const double lin = pipe.relative_variance_error(Method::hdd_linear, 1).value;
  const double non = pipe.relative_variance_error(Method::hdd_nonlinear, 1).value;
  CHECK(non < lin);
}

TEST_CASE("hybrid evaluation reproduces the mean") {
  const auto y = make_example("example2", {.n = 5, .y_empty = 5.0});
  const auto model = example_model(5);
  const auto f = fit(y, model, 1, IntegrationSpec::tensor_gauss(8));
  const auto lin = fit_linear(f.cross);
  const auto& fdd = f.fdd;
  const auto v = sample_values([&](std::span<const double> x) { return evaluate(lin, fdd, x); }, model, 1000000, 1);
  double mean = 0.0, sq = 0.0;
  for (double s : v) mean += s, sq += s * s;
  mean /= v.size();
  const double se = std::sqrt((sq / v.size() - mean * mean) / v.size());
  CHECK(std::abs(mean - 5.0) <= 3.0 * se);

  // At the centre of a symmetric input model both approximations vanish.
  std::vector<double> centre(5, 0.5);
  CHECK(std::abs(evaluate_truncated(fdd.add(), 1, centre) - 5.0) < 1e-14);
  CHECK(evaluate(lin, fdd, centre) == doctest::Approx(5.0).epsilon(1e-14));
}
