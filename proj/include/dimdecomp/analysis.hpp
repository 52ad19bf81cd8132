#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dimdecomp/hdd.hpp"

namespace dimdecomp {

/// Approximation variance per truncation order S = 0..N; missing entries are nullopt.
struct VarianceCurve {
  double exact_variance = 0.0;
  std::vector<std::optional<double>> per_order;
  std::string method;

  std::size_t dimension() const { return per_order.empty() ? 0 : per_order.size() - 1; }
};

/// |sigma^2 - sigma_S^2| / sigma^2.
double relative_variance_error(double exact_variance, double approx_variance);

/// Smallest S in 1..N with |sigma^2 - sigma_S^2| <= (1 - p) sigma^2; N when the curve is
/// complete and nothing qualifies below N. Throws Unavailable when a missing entry is
/// reached before the criterion is met.
std::size_t effective_dimension(const VarianceCurve& curve, double p);

/// Same criterion, computing curve entries on demand and stopping at the first qualifying S.
std::size_t effective_dimension(double exact_variance, std::size_t n, double p,
                                const std::function<double(std::size_t)>& variance_at);

struct RelativeVarianceError {
  std::string method;
  std::size_t s = 0;
  double value = 0.0;
};

/// Mean-squared errors of the univariate approximations.
struct ErrorReport {
  double exact_variance = 0.0;
  double e_add_1 = 0.0;
  double e_fdd_1 = 0.0;
  double e_hdd_1_linear = 0.0;
  std::optional<double> e_hdd_1_nonlinear;
  /// Sum of ANOVA variances of order two and up, when every order was built.
  std::optional<double> e_add_1_subset_sum;
  bool fdd_variance_dominates = true;    // var_fdd >= var_add
  bool hybrid_is_best = true;  // e_hdd_1_linear <= min(e_add_1, e_fdd_1)
  std::vector<RelativeVarianceError> relative_variance_errors;
};

/// `hdd_linear` must be an S = 1 linear fit. The exact variance comes from the closed form
/// when available, otherwise from `int_spec`.
ErrorReport univariate_errors(const FunctionSpec& spec, const InputModel& model, const FddDecomposition& fdd,
                              const HybridModel& hdd_linear, const IntegrationSpec& int_spec,
                              const std::optional<HybridModel>& hdd_nonlinear = std::nullopt, double tolerance = 1e-10);

/// Histogram plus sorted-sample ECDF of seeded Monte Carlo draws.
class EmpiricalDistribution {
 public:
  /// Bins span [min, max] of the samples, or `range` when given (samples outside it are
  /// counted in no bin, so the heights then integrate to the in-range fraction).
  EmpiricalDistribution(std::vector<double> samples, std::size_t bins,
                        std::optional<std::pair<double, double>> range = std::nullopt);

  std::size_t sample_count() const { return sorted_.size(); }
  const std::vector<double>& bin_edges() const { return edges_; }
  const std::vector<double>& pdf_heights() const { return heights_; }
  const std::vector<double>& sorted_samples() const { return sorted_; }

  double mean() const { return mean_; }
  double variance() const { return variance_; }
  /// Fraction of samples <= x.
  double ecdf(double x) const;
  /// Fraction of samples > x.
  double ccdf(double x) const;
  /// Empirical quantile (order statistic at ceil(q n)).
  double quantile(double q) const;

 private:
  std::vector<double> sorted_;
  std::vector<double> edges_;
  std::vector<double> heights_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

/// Evaluates f at `count` draws of the seeded stream (count >= 1000). Deterministic
/// for any thread count. Throws IntegrationFailure reporting the number of non-finite values.
EmpiricalDistribution empirical_distribution(const Evaluator& f, const InputModel& model, std::size_t count,
                                             std::uint64_t seed, std::size_t bins, bool concurrent_safe = true);

/// The raw draws behind empirical_distribution.
std::vector<double> sample_values(const Evaluator& f, const InputModel& model, std::size_t count, std::uint64_t seed,
                                  bool concurrent_safe = true);

/// Largest |log10 CCDF_approx - log10 CCDF_ref| over the upper tail: evaluated at the reference
/// quantiles of exceedance probabilities log-spaced from `p_max` down to 10 / count.
/// Zero exceedance counts are floored at half a sample.
double tail_distance(const EmpiricalDistribution& approx, const EmpiricalDistribution& reference,
                     double p_max = 1e-2, std::size_t points = 41);

}  // namespace dimdecomp
