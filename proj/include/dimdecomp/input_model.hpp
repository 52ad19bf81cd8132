#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dimdecomp {

struct Uniform {
  double a = 0.0;
  double b = 1.0;
};

struct Normal {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Lognormal parameterized by the mean and standard deviation of ln X.
struct Lognormal {
  double log_mean = 0.0;
  double log_stddev = 1.0;

  /// From the mean and coefficient of variation of X itself.
  static Lognormal from_mean_cov(double mean, double cov);
};

struct RawMoments {
  double mean = 0.0;
  double variance = 0.0;
  double raw_moment_3 = 0.0;
  double raw_moment_4 = 0.0;
};

/// One independent input coordinate. Immutable after construction; the
/// constructor validates parameters.
class MarginalDistribution {
 public:
  using Kind = std::variant<Uniform, Normal, Lognormal>;

  MarginalDistribution(Kind kind);  // NOLINT(google-explicit-constructor)
  MarginalDistribution(Uniform u) : MarginalDistribution(Kind(u)) {}      // NOLINT(google-explicit-constructor)
  MarginalDistribution(Normal n) : MarginalDistribution(Kind(n)) {}       // NOLINT(google-explicit-constructor)
  MarginalDistribution(Lognormal l) : MarginalDistribution(Kind(l)) {}    // NOLINT(google-explicit-constructor)

  const Kind& kind() const { return kind_; }
  std::string name() const;

  double mean() const;
  double variance() const;
  /// E[X^k] for k in [0, 4].
  double raw_moment(int k) const;
  double density(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  /// Support bounds (infinite for unbounded kinds).
  double lower() const;
  double upper() const;

 private:
  Kind kind_;
};

RawMoments marginal_moments(const MarginalDistribution& marginal);

/// Independent random input X = (X_1,...,X_N) with product density.
class InputModel {
 public:
  explicit InputModel(std::vector<MarginalDistribution> marginals);

  /// N i.i.d. copies of one marginal.
  static InputModel iid(const MarginalDistribution& marginal, std::size_t n);

  std::size_t dimension() const { return marginals_.size(); }
  const MarginalDistribution& operator[](std::size_t i) const { return marginals_[i]; }
  const std::vector<MarginalDistribution>& marginals() const { return marginals_; }

 private:
  std::vector<MarginalDistribution> marginals_;
};

/// Probability-weighted 1-D rule: sum of weights is one.
struct QuadratureRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

inline constexpr int kMaxGaussPoints = 64;

/// n-point Gauss rule for the marginal measure: Legendre-type for uniform,
/// Hermite-type for normal, exp-mapped Hermite for lognormal.
QuadratureRule1D gauss_rule(const MarginalDistribution& marginal, int n);

/// Row-major count x N matrix of independent draws.
struct SampleMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Deterministic for a fixed seed; draw (r, j) depends only on (seed, r, j).
SampleMatrix sample(const InputModel& model, std::size_t count, std::uint64_t seed);

/// Fill `x` with draw number `row` of the seeded stream (same values as row `row` of sample()).
void sample_row(const InputModel& model, std::uint64_t seed, std::uint64_t row, std::span<double> x);

}  // namespace dimdecomp
