#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dimdecomp/input_model.hpp"

namespace dimdecomp {

using ScalarFunction = std::function<double(double)>;
using Evaluator = std::function<double(std::span<const double>)>;

/// Per-variable data of a structured function: the multiplicative factor h_i,
/// the additive term g_i and their moments under the i-th marginal.
struct UnivariateTerm {
  ScalarFunction h;
  ScalarFunction g;
  double nu = 0.0;         // E[h]
  double delta_sq = 0.0;   // Var[h]
  double mu = 0.0;         // E[g]
  double lambda_sq = 0.0;  // Var[g]
  double eta_sq = 0.0;     // Cov[h, g]
};

/// Builds a term and integrates its moments with an n-point Gauss rule of the marginal.
/// Either function may be empty (treated as identically zero).
UnivariateTerm make_term(ScalarFunction h, ScalarFunction g, const MarginalDistribution& marginal,
                         int quadrature_points = 48);

struct PurelyMultiplicative {
  double nu0 = 1.0;
  std::vector<UnivariateTerm> terms;
};

struct PurelyAdditive {
  double mu0 = 0.0;
  std::vector<UnivariateTerm> terms;
};

struct Blended {
  double nu0 = 1.0;
  double mu0 = 0.0;
  std::vector<UnivariateTerm> terms;
};

/// y = ((2/N) sum x_i)^m.
struct PowerMean {
  int m = 1;
  std::size_t n = 1;
};

/// y = y_empty + standardized sum + standardized product, for i.i.d. uniform(0,1) inputs.
struct StandardizedBlend {
  double y_empty = 0.0;
  std::size_t n = 1;
};

struct BlackBox {
  std::size_t n = 1;
  Evaluator f;
  bool concurrent_safe = false;
};

/// Caps the number of evaluations of a function spec. Thread-safe.
class EvaluationBudget {
 public:
  explicit EvaluationBudget(std::size_t max_evaluations) : max_(max_evaluations) {}

  /// Throws BudgetExhausted before the counter would exceed the cap.
  void consume(std::size_t count = 1);
  std::size_t used() const { return counter_.load(); }
  std::size_t max_evaluations() const { return max_; }

 private:
  std::size_t max_;
  std::atomic<std::size_t> counter_{0};
};

class FunctionSpec {
 public:
  using Variant = std::variant<PurelyMultiplicative, PurelyAdditive, Blended, PowerMean, StandardizedBlend, BlackBox>;

  FunctionSpec(Variant variant, std::string name = {});

  std::size_t dimension() const { return dimension_; }
  const std::string& name() const { return name_; }
  const Variant& variant() const { return variant_; }

  /// True for the three structured classes and StandardizedBlend (which is a Blended instance).
  bool is_structured() const;
  bool concurrent_safe() const;

  /// Structured view used by the closed-form ADD builder; empty for PowerMean and BlackBox.
  std::optional<Blended> as_blended() const;

  void attach_budget(std::shared_ptr<EvaluationBudget> budget) { budget_ = std::move(budget); }
  const std::shared_ptr<EvaluationBudget>& budget() const { return budget_; }

  double evaluate(std::span<const double> x) const;
  double operator()(std::span<const double> x) const { return evaluate(x); }

 private:
  Variant variant_;
  std::string name_;
  std::size_t dimension_ = 0;
  std::shared_ptr<EvaluationBudget> budget_;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Closed-form mean and variance; std::nullopt for black boxes or when the
/// input model is outside what the closed form covers.
std::optional<Moments> exact_moments(const FunctionSpec& spec, const InputModel& model);

/// Analytic standardization constants of the sum and product of N uniform(0,1) variables.
struct StandardizationConstants {
  double sum_mean;
  double sum_stddev;
  double product_mean;
  double product_stddev;
};
StandardizationConstants standardization_constants(std::size_t n);

/// Named example functions: "example1-y1", "example1-y2", "example2", "example4".
/// `m` is the exponent of example4 and `y_empty` the constant of example2.
struct ExampleParams {
  std::size_t n = 6;
  int m = 1;
  double y_empty = 5.0;
  double nu0 = 100.0;
  double mu0 = 0.0;
};
FunctionSpec make_example(const std::string& name, const ExampleParams& params);
/// The examples are all defined on i.i.d. uniform(0,1) inputs.
InputModel example_model(std::size_t n);
std::vector<std::string> example_names();

}  // namespace dimdecomp
