#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dimdecomp/functions.hpp"
#include "dimdecomp/input_model.hpp"
#include "dimdecomp/subset.hpp"

namespace dimdecomp {

struct TensorGauss {
  int points_per_dim = 4;
};

struct MonteCarlo {
  std::size_t count = 100000;
  std::uint64_t seed = 0;
};

struct RandomizedQmc {
  std::size_t count = 1U << 16;
  std::uint64_t seed = 0;
  int replicates = 8;
};

inline constexpr std::size_t kMaxTensorNodes = 10'000'000;

struct IntegrationSpec {
  std::variant<TensorGauss, MonteCarlo, RandomizedQmc> backend = TensorGauss{};
  /// When positive, Estimate::converged reports error_indicator <= tol * |value|.
  double target_rel_tolerance = 0.0;

  static IntegrationSpec tensor_gauss(int points_per_dim);
  static IntegrationSpec monte_carlo(std::size_t count, std::uint64_t seed);
  static IntegrationSpec rqmc(std::size_t count, std::uint64_t seed, int replicates = 8);

  /// Short backend id used in provenance columns, e.g. "tensor_gauss(4)".
  std::string id() const;
  void validate(std::size_t dimension) const;
};

struct Estimate {
  double value = 0.0;
  /// Standard error (MC, RQMC) or |Q_n - Q_{n-1}| (tensor Gauss).
  double error_indicator = 0.0;
  std::size_t evaluations_used = 0;
  bool converged = true;
};

/// One integration node handed to a vector integrand. `index` holds the
/// per-dimension node numbers on a tensor grid of `rule_points` points per
/// dimension; it is empty for sampled backends.
struct Node {
  std::span<const double> x;
  std::span<const std::uint8_t> index;
  int rule_points = 0;
};

using VectorIntegrand = std::function<void(const Node& node, std::span<double> out)>;

/// Per-dimension Gauss rules of a tensor grid.
std::vector<QuadratureRule1D> tensor_rules(const InputModel& model, int points_per_dim);

/// Componentwise E[f(X)] for an integrand with `outputs` components. Results
/// do not depend on the number of threads. Evaluators that are not safe for
/// concurrent calls are evaluated serially.
std::vector<Estimate> expectation(const VectorIntegrand& f, std::size_t outputs, const InputModel& model,
                                  const IntegrationSpec& spec, bool concurrent_safe = true);

Estimate expectation(const Evaluator& f, const InputModel& model, const IntegrationSpec& spec,
                     bool concurrent_safe = true);
Estimate expectation(const FunctionSpec& y, const InputModel& model, const IntegrationSpec& spec);

/// E[f(x_u, X_{-u})]: integrates only over the coordinates outside `u`.
/// `values` lists x_u in ascending index order.
Estimate conditional_expectation(const Evaluator& f, const InputModel& model, IndexSubset u,
                                 std::span<const double> values, const IntegrationSpec& spec,
                                 bool concurrent_safe = true);
Estimate conditional_expectation(const FunctionSpec& y, const InputModel& model, IndexSubset u,
                                 std::span<const double> values, const IntegrationSpec& spec);

/// Fixed-order pairwise sum.
double pairwise_sum(std::span<const double> values);

}  // namespace dimdecomp
