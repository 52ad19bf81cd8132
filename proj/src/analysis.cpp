#include "dimdecomp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "dimdecomp/error.hpp"

namespace dimdecomp {

double relative_variance_error(double exact_variance, double approx_variance) {
  if (!(exact_variance > 0.0)) throw InvalidArgument("relative variance error needs a positive exact variance");
  return std::abs(exact_variance - approx_variance) / exact_variance;
}

namespace {

void check_p(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("effective dimension: p must lie in [0, 1]");
}

bool qualifies(double exact, double approx, double p) { return std::abs(exact - approx) <= (1.0 - p) * exact; }

}  // namespace

std::size_t effective_dimension(const VarianceCurve& curve, double p) {
  check_p(p);
  if (!(curve.exact_variance > 0.0)) throw InvalidArgument("effective dimension needs a positive exact variance");
  const std::size_t n = curve.dimension();
  if (n == 0) throw InvalidArgument("effective dimension: empty variance curve");
  for (std::size_t s = 1; s <= n; ++s) {
    const auto& v = curve.per_order[s];
    if (!v) {
      throw Unavailable("effective dimension of " + curve.method + ": criterion not met up to S = " +
                        std::to_string(s - 1) + " and the curve stops there");
    }
    if (qualifies(curve.exact_variance, *v, p)) return s;
  }
  return n;
}

std::size_t effective_dimension(double exact_variance, std::size_t n, double p,
                                const std::function<double(std::size_t)>& variance_at) {
  check_p(p);
  if (!(exact_variance > 0.0)) throw InvalidArgument("effective dimension needs a positive exact variance");
  if (n == 0) throw InvalidArgument("effective dimension: dimension must be positive");
  for (std::size_t s = 1; s < n; ++s)
    if (qualifies(exact_variance, variance_at(s), p)) return s;
  return n;
}

ErrorReport univariate_errors(const FunctionSpec& spec, const InputModel& model, const FddDecomposition& fdd,
                              const HybridModel& hdd_linear, const IntegrationSpec& int_spec,
                              const std::optional<HybridModel>& hdd_nonlinear, double tolerance) {
  if (hdd_linear.s != 1 || hdd_linear.kind != HybridKind::Linear2)
    throw InvalidArgument("univariate_errors expects an S = 1 linear hybrid model");
  if (spec.dimension() != fdd.dimension() || model.dimension() != fdd.dimension())
    throw InvalidArgument("univariate_errors: dimension mismatch");

  double var;
  if (const auto exact = exact_moments(spec, model)) {
    var = exact->variance;
  } else {
    const double y0 = fdd.add().y_empty();
    const auto est = expectation(
        [&](const Node& node, std::span<double> out) {
          const double w = spec.evaluate(node.x) - y0;
          out[0] = w;
          out[1] = w * w;
        },
        2, model, int_spec, spec.concurrent_safe());
    var = est[1].value - est[0].value * est[0].value;
  }

  const auto& cm = hdd_linear.cross;
  const double va = cm.var_add.value;
  const double vf = cm.var_fdd.value;
  const double a = hdd_linear.alpha;
  auto clamp = [](double v) { return std::max(v, 0.0); };

  ErrorReport r;
  r.exact_variance = var;
  r.e_add_1 = clamp(var - va);
  r.e_fdd_1 = clamp(var + vf - 2.0 * cm.e_w_fdd.value);
  r.e_hdd_1_linear = clamp(var - (2.0 * a - a * a) * va - (1.0 - a) * (1.0 - a) * vf);
  if (hdd_nonlinear) r.e_hdd_1_nonlinear = clamp(hybrid_mse(*hdd_nonlinear, var));

  const auto& add = fdd.add();
  if (add.max_order() == add.dimension()) {
    const auto& v = add.variances();
    double sum = 0.0;
    for (std::size_t k = add.count_up_to(1); k < v.size(); ++k) sum += v[k];
    r.e_add_1_subset_sum = sum;
  }

  const double scale = tolerance * std::max(var, 1.0);
  r.fdd_variance_dominates = vf >= va - scale;
  r.hybrid_is_best = r.e_hdd_1_linear <= std::min(r.e_add_1, r.e_fdd_1) + scale;

  r.relative_variance_errors.push_back({"add", 1, relative_variance_error(var, va)});
  r.relative_variance_errors.push_back({"fdd", 1, relative_variance_error(var, vf)});
  r.relative_variance_errors.push_back({"hdd_linear", 1, relative_variance_error(var, hybrid_variance(hdd_linear))});
  if (hdd_nonlinear)
    r.relative_variance_errors.push_back(
        {"hdd_nonlinear", 1, relative_variance_error(var, hybrid_variance(*hdd_nonlinear))});
  return r;
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples, std::size_t bins,
                                             std::optional<std::pair<double, double>> range)
    : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw InvalidArgument("empirical distribution needs samples");
  if (bins == 0) throw InvalidArgument("empirical distribution needs at least one bin");
  const double n = static_cast<double>(sorted_.size());
  mean_ = pairwise_sum(sorted_) / n;
  std::vector<double> sq(sorted_.size());
  std::transform(sorted_.begin(), sorted_.end(), sq.begin(), [&](double v) { return (v - mean_) * (v - mean_); });
  variance_ = sorted_.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  std::sort(sorted_.begin(), sorted_.end());

  double lo = sorted_.front(), hi = sorted_.back();
  if (range) {
    lo = range->first;
    hi = range->second;
    if (!(hi >= lo)) throw InvalidArgument("empirical distribution: bad histogram range");
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  edges_.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) edges_[b] = lo + width * static_cast<double>(b);
  edges_.back() = hi;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : sorted_) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(b, bins - 1)]++;
  }
  heights_.resize(bins);
  for (std::size_t b = 0; b < bins; ++b)
    heights_[b] = static_cast<double>(counts[b]) / (n * (edges_[b + 1] - edges_[b]));
}

double EmpiricalDistribution::ecdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::ccdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(sorted_.end() - it) / static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  const auto n = sorted_.size();
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  return sorted_[k - 1];
}

std::vector<double> sample_values(const Evaluator& f, const InputModel& model, std::size_t count, std::uint64_t seed,
                                  bool concurrent_safe) {
  if (count < 1000) throw InvalidArgument("empirical distribution needs at least 1000 samples");
  constexpr std::size_t kChunk = 4096;
  const std::size_t n = model.dimension();
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  std::vector<double> values(count);
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::size_t> bad(chunks, 0);

#pragma omp parallel for schedule(dynamic) if (concurrent_safe)
  for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
    try {
      std::vector<double> x(n);
      const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
      const std::size_t end = std::min(count, begin + kChunk);
      for (std::size_t r = begin; r < end; ++r) {
        sample_row(model, seed, r, x);
        values[r] = f(x);
        if (!std::isfinite(values[r])) ++bad[static_cast<std::size_t>(c)];
      }
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::size_t non_finite = 0;
  for (auto b : bad) non_finite += b;
  if (non_finite > 0)
    throw IntegrationFailure("empirical distribution: " + std::to_string(non_finite) + " of " +
                             std::to_string(count) + " evaluations were not finite");
  return values;
}

EmpiricalDistribution empirical_distribution(const Evaluator& f, const InputModel& model, std::size_t count,
                                             std::uint64_t seed, std::size_t bins, bool concurrent_safe) {
  return EmpiricalDistribution(sample_values(f, model, count, seed, concurrent_safe), bins);
}

double tail_distance(const EmpiricalDistribution& approx, const EmpiricalDistribution& reference, double p_max,
                     std::size_t points) {
  const double n_ref = static_cast<double>(reference.sample_count());
  const double p_min = 10.0 / n_ref;
  if (!(p_max > p_min)) throw InvalidArgument("tail distance: too few samples for the requested tail");
  if (points < 2) throw InvalidArgument("tail distance needs at least two points");
  const double floor_a = 0.5 / static_cast<double>(approx.sample_count());
  const double floor_r = 0.5 / n_ref;
  const double l0 = std::log10(p_max), l1 = std::log10(p_min);
  double worst = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double p = std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(k) / static_cast<double>(points - 1));
    const double q = reference.quantile(1.0 - p);
    const double pr = std::max(reference.ccdf(q), floor_r);
    const double pa = std::max(approx.ccdf(q), floor_a);
    worst = std::max(worst, std::abs(std::log10(pa) - std::log10(pr)));
  }
  return worst;
}

}  // namespace dimdecomp
