#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dimdecomp/fdd.hpp"
#include "dimdecomp/functions.hpp"
#include "dimdecomp/integrate.hpp"

namespace dimdecomp {

enum class MomentSource { closed_form, numeric };
std::string to_string(MomentSource s);

/// Expectations of products of w = y - y_empty, the zero-mean ADD approximation
/// w~_S = y~_S - y_empty and the centered FDD approximation w^_S = y^_S - E[y^_S].
struct CrossMoments {
  struct Entry {
    double value = 0.0;
    MomentSource source = MomentSource::numeric;
    double error_indicator = 0.0;
  };
  /// A closed-form entry compared with its numerical estimate.
  struct Check {
    std::string entry;
    double closed_form = 0.0;
    double numeric = 0.0;
    bool agrees = true;
  };

  std::size_t s = 0;
  double y_empty = 0.0;
  Entry fdd_mean;     // E[y^_S]
  Entry var_add;      // E[w~^2]
  Entry var_fdd;      // E[w^^2]
  Entry e_add_fdd;    // E[w~ w^]
  Entry e_w_fdd;      // E[w w^]
  Entry e_add2_fdd;   // E[w~^2 w^]
  Entry e_add_fdd2;   // E[w~ w^^2]
  Entry e_add2_fdd2;  // E[w~^2 w^^2]
  Entry e_w_add_fdd;  // E[w w~ w^]
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  std::string backend;
};

struct CrossMomentOptions {
  /// Exact mean and variance of y; enables paired (control-variate) estimates of E[y^_S] and E[w^^2].
  std::optional<Moments> exact;
  /// At S = 1 use the closed forms (exact FDD mean, product-form variance, third/fourth
  /// order cross moments) in place of the numerical estimates.
  bool prefer_closed_form = true;
  /// Relative tolerance of the closed-form versus numeric cross-check.
  double check_tolerance = 1e-6;
};

/// Integrates every entry with the engine; at S = 1 the entries with closed forms are also
/// computed from y_empty and the univariate component moments and cross-checked.
CrossMoments compute_cross_moments(const FunctionSpec& y, const FddDecomposition& fdd, std::size_t s,
                                   const InputModel& model, const IntegrationSpec& spec,
                                   const CrossMomentOptions& options = {});

/// Closed-form S = 1 entries from y_empty (of the factorized function) and univariate moments.
struct UnivariateCrossMoments {
  double var_add = 0.0;
  double var_fdd = 0.0;
  double e_add2_fdd = 0.0;
  double e_add_fdd2 = 0.0;
  double e_add2_fdd2 = 0.0;
};
UnivariateCrossMoments univariate_cross_moments(double y_empty, std::span<const UnivariateComponentMoments> moments);

enum class HybridKind { Nonlinear3, Linear2, LinearConstrained1 };
std::string to_string(HybridKind k);

struct HybridModel {
  HybridKind kind = HybridKind::Linear2;
  std::size_t s = 1;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  CrossMoments cross;
  double y_empty = 0.0;
  double condition_estimate = 0.0;
  /// Denominator vanished (ADD and FDD approximations collinear); alpha = 1, beta = 0 returned.
  bool degenerate = false;
  /// Nonlinear system singular or ill-conditioned; the linear solution with gamma = 0 returned.
  bool fallback = false;
};

HybridModel fit_linear(const CrossMoments& cross);
HybridModel fit_linear_constrained(const CrossMoments& cross);
HybridModel fit_nonlinear(const CrossMoments& cross);

/// Variance of the hybrid approximation.
double hybrid_variance(const HybridModel& model);
/// The hybrid approximation reproduces the exact mean y_empty.
inline double hybrid_mean(const HybridModel& model) { return model.y_empty; }
/// Mean-squared error E[(w - w_bar)^2] given the exact variance of y.
double hybrid_mse(const HybridModel& model, double exact_variance);

/// y_empty + alpha w~_S + beta w^_S + gamma (w~_S w^_S - E[w~_S w^_S]).
double evaluate(const HybridModel& model, const FddDecomposition& fdd, std::span<const double> x);
double evaluate(const HybridModel& model, const TruncationEvaluator& approx, const Node& node);

}  // namespace dimdecomp
