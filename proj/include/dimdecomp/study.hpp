#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dimdecomp/analysis.hpp"

namespace dimdecomp {

enum class Method { exact, add, fdd, hdd_linear, hdd_constrained, hdd_nonlinear };
std::string to_string(Method m);
Method parse_method(const std::string& name);

/// One output record: method, truncation S, dimension N, value, error indicator and provenance.
/// `x` is set for distribution data (abscissa of a PDF or CCDF value).
struct ResultRow {
  std::string method;
  std::size_t s = 0;
  std::size_t n = 0;
  double value = 0.0;
  double error_indicator = 0.0;
  std::string provenance;
  std::optional<double> x;
};

struct StudyResult {
  std::string name;
  std::vector<ResultRow> rows;
  /// Ordered key/value provenance (spec, backends, seeds, model choices).
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> warnings;
};

struct PipelineOptions {
  /// Used for FDD moments, cross moments and numerically integrated variances.
  IntegrationSpec integration = IntegrationSpec::tensor_gauss(4);
  /// Numeric ADD builds only; defaults to `integration`.
  std::optional<IntegrationSpec> add_integration;
  int grid_points = 0;
  /// Highest ADD order built; defaults to N.
  std::optional<std::size_t> max_order;
  /// Force the numeric ADD builder even for structured functions.
  bool force_numeric = false;
  bool prefer_closed_form = true;
};

struct Quantity {
  double value = 0.0;
  double error_indicator = 0.0;
  std::string provenance;
};

/// Lazily builds and caches the decompositions of one function, answering variance,
/// cross-moment and evaluation queries per method and truncation.
class Pipeline {
 public:
  Pipeline(FunctionSpec y, InputModel model, PipelineOptions options = {});

  const FunctionSpec& function() const { return y_; }
  const InputModel& model() const { return model_; }
  std::size_t dimension() const { return y_.dimension(); }
  const PipelineOptions& options() const { return options_; }

  /// Exact mean and variance of y: closed form when available, else integrated.
  const Quantity& exact_variance();
  const std::optional<Moments>& exact_moments_closed() const { return exact_; }

  const AddDecomposition& add();
  const FddDecomposition& fdd();
  const CrossMoments& cross(std::size_t s);
  const HybridModel& hybrid(HybridKind kind, std::size_t s);

  /// Variance of the S-variate approximation (S = 0 is the constant; `exact` ignores S).
  Quantity variance(Method m, std::size_t s);
  Quantity relative_variance_error(Method m, std::size_t s);
  /// Mean of the S-variate FDD approximation.
  Quantity fdd_mean(std::size_t s);

  std::size_t effective_dimension(Method m, double p);
  ErrorReport univariate_errors();

  /// Pointwise evaluator of y or one of its approximations.
  Evaluator evaluator(Method m, std::size_t s);
  bool concurrent_safe(Method m) const;

  std::string add_provenance();

 private:
  std::string numeric_tag() const;

  FunctionSpec y_;
  InputModel model_;
  PipelineOptions options_;
  std::optional<Moments> exact_;
  std::optional<Quantity> variance_;
  std::shared_ptr<const AddDecomposition> add_;
  std::unique_ptr<FddDecomposition> fdd_;
  std::map<std::size_t, CrossMoments> cross_;
  std::map<std::pair<int, std::size_t>, HybridModel> hybrid_;
  std::map<std::size_t, FddMoments> fdd_moments_;
};

enum class DistributionQuantity { pdf, ccdf };

struct DistributionOptions {
  std::vector<Method> methods{Method::add, Method::fdd, Method::hdd_linear};
  std::size_t s_min = 1;
  std::size_t s_max = 1;
  std::size_t count = 1'000'000;
  std::uint64_t seed = 1;
  /// Histogram bins (pdf) or CCDF abscissae (ccdf).
  std::size_t bins = 100;
  DistributionQuantity quantity = DistributionQuantity::ccdf;
};

/// Relative variance errors of each method for S in [s_min, s_max], plus the exact variance (S = 0).
void variance_table(Pipeline& pipe, const std::vector<Method>& methods, std::size_t s_min, std::size_t s_max,
                    StudyResult& out);
/// One row per method: S = value = effective dimension at level p.
void effective_dimensions(Pipeline& pipe, const std::vector<Method>& methods, double p, StudyResult& out);
/// Univariate mean-squared errors (mse_*), relative variance errors and the ordering flags.
void univariate_error_rows(Pipeline& pipe, StudyResult& out);
/// Sampled distributions of y (S = 0) and of each method for S in range. CCDF rows are
/// evaluated on a grid spanning the samples of y; PDF rows share one histogram range.
/// For CCDFs, rows tail_distance:<method> compare each approximation with y.
void distributions(Pipeline& pipe, const DistributionOptions& options, StudyResult& out);

/// First-order propagation of the cross-moment error indicators into the hybrid variance.
double hybrid_variance_error(const HybridModel& model);

struct Table1Options {
  std::vector<std::size_t> dimensions{6, 7, 8, 9, 10};
  double nu0 = 100.0;
};
/// ADD relative variance errors of the product function, S = 1..N.
StudyResult table1(const Table1Options& options = {});

struct Table2Options {
  std::vector<std::size_t> dimensions{6, 7, 8, 9, 10};
  std::size_t max_order = 5;
  double mu0 = 0.0;
  IntegrationSpec integration = IntegrationSpec::tensor_gauss(4);
};
/// FDD relative variance errors of the sum function.
StudyResult table2(const Table2Options& options = {});

struct Table3Options {
  std::size_t n = 5;
  std::size_t max_order = 4;
  double y_empty = 5.0;
  IntegrationSpec integration = IntegrationSpec::tensor_gauss(8);
};
/// ADD, FDD and hybrid relative variance errors of the standardized blend, plus FDD means.
StudyResult table3(const Table3Options& options = {});

struct Table4Options {
  double p = 0.99;
  std::vector<std::size_t> dimensions{6, 7, 8, 9, 10};
  std::size_t blend_dimension = 5;
  double y_empty = 5.0;
  IntegrationSpec integration_sums = IntegrationSpec::tensor_gauss(4);
  IntegrationSpec integration_blend = IntegrationSpec::tensor_gauss(8);
};
/// Effective dimensions (ADD, FDD, linear hybrid) of the three example functions.
StudyResult table4(const Table4Options& options = {});

struct PowerMeanOptions {
  std::size_t n = 10;
  IntegrationSpec add_integration = IntegrationSpec::tensor_gauss(5);
  int grid_points = 9;
  IntegrationSpec integration = IntegrationSpec::rqmc(1U << 16, 1, 8);
};

struct Example4ErrorOptions {
  PowerMeanOptions build;
  std::vector<int> exponents{2, 3, 4, 5, 6, 7, 8};
};
/// Univariate relative variance errors and mean-squared errors of the power-mean function.
StudyResult example4_errors(const Example4ErrorOptions& options = {});

struct Example4CcdfOptions {
  PowerMeanOptions build;
  int m = 8;
  std::size_t count = 10'000'000;
  std::uint64_t seed = 1;
  std::size_t points = 201;
};
/// CCDFs of y and its univariate approximations, plus upper-tail distances to y's CCDF.
StudyResult example4_ccdf(const Example4CcdfOptions& options = {});

struct Example2PdfOptions {
  std::size_t n = 5;
  std::size_t max_order = 4;
  double y_empty = 5.0;
  std::size_t count = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t bins = 100;
  IntegrationSpec integration = IntegrationSpec::tensor_gauss(8);
};
/// Histogram PDFs of the standardized blend and its ADD, FDD and linear hybrid approximations.
StudyResult example2_pdf(const Example2PdfOptions& options = {});

}  // namespace dimdecomp
