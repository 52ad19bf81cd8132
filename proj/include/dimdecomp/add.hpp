#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dimdecomp/functions.hpp"
#include "dimdecomp/input_model.hpp"
#include "dimdecomp/integrate.hpp"
#include "dimdecomp/subset.hpp"

namespace dimdecomp {

enum class Provenance { closed_form, numeric };
std::string to_string(Provenance p);

/// Values of subset-indexed functions on a tensor grid with `points` nodes per
/// dimension. Entry k holds the tensor of subsets[k] over its own coordinates
/// (ascending dimension order, last dimension fastest).
struct SubsetTables {
  int points = 0;
  std::vector<IndexSubset> subsets;
  std::vector<std::vector<std::uint8_t>> dims;
  std::vector<std::vector<double>> values;

  /// Value of entry k at the grid node with full multi-index `index`.
  double lookup(std::size_t k, std::span<const std::uint8_t> index) const {
    std::size_t off = 0;
    for (auto d : dims[k]) off = off * static_cast<std::size_t>(points) + index[d];
    return values[k][off];
  }
};

/// Per-dimension interpolation grid of a numeric decomposition.
struct InterpolationGrid {
  std::vector<QuadratureRule1D> rules;
  std::vector<std::vector<double>> barycentric;

  /// Lagrange basis values of dimension d at x.
  void basis(std::size_t d, double x, std::span<double> out) const;
};

/// Moments of a univariate component y_{i}: E[y^2], E[y^3], E[y^4].
struct UnivariateComponentMoments {
  double variance = 0.0;
  double third = 0.0;
  double fourth = 0.0;
};

/// ANOVA decomposition y_empty + sum_u y_u(x_u), built up to a maximum order.
/// Immutable after construction.
class AddDecomposition {
 public:
  std::size_t dimension() const { return dimension_; }
  std::size_t max_order() const { return max_order_; }
  double y_empty() const { return y_empty_; }
  /// Total variance of y: exact for closed-form builds, integrated for numeric ones.
  double total_variance() const { return total_variance_; }
  Provenance provenance() const { return provenance_; }
  /// "closed_form" or "numeric:<backend id>".
  const std::string& provenance_id() const { return provenance_id_; }

  /// Nonempty subsets with |u| <= max_order, canonical order.
  const std::vector<IndexSubset>& subsets() const { return subsets_; }
  /// Number of leading entries of subsets() with |u| <= s.
  std::size_t count_up_to(std::size_t s) const;
  std::size_t index_of(IndexSubset u) const;

  double variance(IndexSubset u) const { return variances_[index_of(u)]; }
  const std::vector<double>& variances() const { return variances_; }
  /// sigma_u^2 < 1e-14 sigma^2.
  bool negligible(IndexSubset u) const { return negligible_[index_of(u)]; }
  /// Largest integration error indicator met while building each component (0 for closed form).
  const std::vector<double>& component_errors() const { return component_errors_; }

  /// y_u(x_u) for subsets()[k]; x is the full point.
  double component(std::size_t k, std::span<const double> x) const;
  /// Values of the first count_up_to(s) components at the full point x.
  void components(std::span<const double> x, std::size_t s, std::span<double> out) const;

  /// Components with |u| <= s tabulated on the tensor grid given by `rules`
  /// (one rule per dimension, all of the same size).
  SubsetTables tabulate(const std::vector<QuadratureRule1D>& rules, std::size_t s) const;

  const InputModel& model() const { return model_; }
  /// Interpolation grid (numeric builds only).
  const std::optional<InterpolationGrid>& grid() const { return grid_; }

 private:
  friend AddDecomposition build_closed_form(const FunctionSpec&, const InputModel&, std::optional<std::size_t>);
  friend AddDecomposition build_numeric(const FunctionSpec&, const InputModel&, std::size_t, const IntegrationSpec&,
                                        int);

  explicit AddDecomposition(InputModel model) : model_(std::move(model)) {}
  void finish();

  InputModel model_;
  std::size_t dimension_ = 0;
  std::size_t max_order_ = 0;
  double y_empty_ = 0.0;
  double total_variance_ = 0.0;
  Provenance provenance_ = Provenance::closed_form;
  std::string provenance_id_;
  std::vector<IndexSubset> subsets_;
  std::vector<std::size_t> order_end_;
  std::vector<double> variances_;
  std::vector<bool> negligible_;
  std::vector<double> component_errors_;

  // Closed form: coefficient nu0 * prod_{j not in u} nu_j per subset.
  std::optional<Blended> blended_;
  std::vector<double> coefficients_;

  // Numeric: per-subset tensors on the interpolation grid.
  std::optional<InterpolationGrid> grid_;
  std::vector<std::vector<double>> tensors_;
};

/// Closed-form components for the structured classes (and StandardizedBlend).
/// `max_order` defaults to N.
AddDecomposition build_closed_form(const FunctionSpec& spec, const InputModel& model,
                                   std::optional<std::size_t> max_order = std::nullopt);

/// Components by the conditional-expectation recursion, stored on a tensor grid of
/// `grid_points` Gauss nodes per dimension (0: the TensorGauss size of `int_spec`, else 8).
AddDecomposition build_numeric(const FunctionSpec& spec, const InputModel& model, std::size_t max_order,
                               const IntegrationSpec& int_spec, int grid_points = 0);

/// sum_{1<=|u|<=s} sigma_u^2.
double truncated_variance(const AddDecomposition& add, std::size_t s);

/// y_empty + sum_{1<=|u|<=s} y_u(x_u).
double evaluate_truncated(const AddDecomposition& add, std::size_t s, std::span<const double> x);

struct SensitivityIndex {
  IndexSubset subset;
  double value = 0.0;
};

/// sigma_u^2 / sigma^2 for every built subset.
std::vector<SensitivityIndex> sensitivity_indices(const AddDecomposition& add);

/// Moments of each univariate component by a Gauss rule of the marginal.
std::vector<UnivariateComponentMoments> univariate_moments(const AddDecomposition& add, int quadrature_points = 48);

namespace detail {
/// Mode-j product of a tensor with a matrix (rows x shape[j], row major).
std::vector<double> mode_product(const std::vector<double>& tensor, std::vector<std::size_t>& shape, std::size_t mode,
                                 const std::vector<double>& matrix, std::size_t rows);
}  // namespace detail

}  // namespace dimdecomp
