#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "dimdecomp/add.hpp"
#include "dimdecomp/functions.hpp"
#include "dimdecomp/integrate.hpp"

namespace dimdecomp {

struct FddOptions {
  /// Shift y by 10 sqrt(sigma^2) when |y_empty| < 1e-6 sqrt(sigma^2).
  bool allow_conditioning = true;
};

/// Factorized decomposition (1 + z_empty) prod_u (1 + z_u)(x_u), with factors
/// derived pointwise from ANOVA components. Immutable after construction.
class FddDecomposition {
 public:
  std::size_t dimension() const { return add_->dimension(); }
  std::size_t max_order() const { return add_->max_order(); }
  /// 1 + z_empty, i.e. y_empty plus the conditioning shift.
  double one_plus_z_empty() const { return one_plus_z_empty_; }
  /// Constant added to y before factorization (0 when unused).
  double conditioning_shift() const { return shift_; }
  double singularity_floor() const { return floor_; }
  const AddDecomposition& add() const { return *add_; }
  const std::vector<IndexSubset>& subsets() const { return add_->subsets(); }

  /// Factors (1 + z_u)(x_u) of the first add().count_up_to(s) subsets at x.
  void factors(std::span<const double> x, std::size_t s, std::span<double> out) const;
  double factor(IndexSubset u, std::span<const double> x) const;

  /// Factors tabulated on the grid of `add_tables` (which must come from add().tabulate).
  SubsetTables tabulate(const SubsetTables& add_tables) const;

 private:
  friend FddDecomposition fdd_from_add(std::shared_ptr<const AddDecomposition>, const FddOptions&);
  FddDecomposition() = default;

  std::shared_ptr<const AddDecomposition> add_;
  double one_plus_z_empty_ = 0.0;
  double shift_ = 0.0;
  double floor_ = 0.0;
  // Indices of the nonempty proper subsets of each subset.
  std::vector<std::vector<std::size_t>> proper_;
};

FddDecomposition fdd_from_add(std::shared_ptr<const AddDecomposition> add, const FddOptions& options = {});
FddDecomposition fdd_from_add(const AddDecomposition& add, const FddOptions& options = {});

/// S-variate FDD approximation at x (conditioning shift removed).
double evaluate_truncated(const FddDecomposition& fdd, std::size_t s, std::span<const double> x);

struct FddMoments {
  double mean = 0.0;
  double variance = 0.0;
  double mean_error = 0.0;
  double variance_error = 0.0;
  std::size_t evaluations = 0;
};

/// Mean and variance of the S-variate FDD approximation by numerical integration.
FddMoments moments(const FddDecomposition& fdd, std::size_t s, const InputModel& model, const IntegrationSpec& spec);

/// Same quantities estimated with y itself as a paired control variate, for
/// functions whose exact mean and variance are known:
/// var = sigma^2 + E[(yhat - y0)^2 - (y - y0)^2] - E[yhat - y]^2.
FddMoments moments_paired(const FddDecomposition& fdd, std::size_t s, const FunctionSpec& y, const Moments& exact,
                          const InputModel& model, const IntegrationSpec& spec);

/// Variance of the univariate FDD approximation from univariate ANOVA variances.
double univariate_variance_closed_form(double y_empty, std::span<const double> univariate_variances);

/// Evaluates the S-variate ADD and FDD approximations at integration nodes.
/// Tensor-grid nodes are served from tabulated components and factors, built
/// once per grid size; sampled nodes are evaluated pointwise. Thread-safe.
class TruncationEvaluator {
 public:
  TruncationEvaluator(const FddDecomposition& fdd, std::size_t s);

  struct Values {
    double add = 0.0;  // y~_S
    double fdd = 0.0;  // y^_S
  };
  Values operator()(const Node& node) const;

  std::size_t order() const { return s_; }

 private:
  struct Tables {
    SubsetTables add;
    SubsetTables fdd;
  };
  const Tables& tables(int points) const;

  const FddDecomposition& fdd_;
  std::size_t s_;
  std::size_t count_;
  mutable std::mutex mutex_;
  mutable std::map<int, std::unique_ptr<Tables>> cache_;
};

}  // namespace dimdecomp
