#include "dimdecomp/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "dimdecomp/error.hpp"
#include "dimdecomp/rng.hpp"
#include "dimdecomp/sobol.hpp"

namespace dimdecomp {

namespace {

constexpr std::size_t kChunk = 2048;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::size_t tensor_size(int n, std::size_t dim) {
  std::size_t total = 1;
  for (std::size_t d = 0; d < dim; ++d) {
    total *= static_cast<std::size_t>(n);
    if (total > kMaxTensorNodes)
      throw IntegrationFailure("tensor grid " + std::to_string(n) + "^" + std::to_string(dim) +
                               " exceeds the node budget of 1e7");
  }
  return total;
}

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

void check_finite(std::span<const double> values, std::span<const double> x) {
  for (double v : values)
    if (!std::isfinite(v)) throw IntegrationFailure("non-finite integrand value at x = " + format_point(x));
}

// Runs fn(c) for every chunk; the error of the lowest failing chunk wins so the
// reported failure does not depend on scheduling.
template <class Fn>
void for_each_chunk(std::size_t chunks, bool parallel, Fn&& fn) {
  std::vector<std::exception_ptr> errors(chunks);
  const auto count = static_cast<long long>(chunks);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long c = 0; c < count; ++c) {
    try {
      fn(static_cast<std::size_t>(c));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Per-output running statistics of one chunk.
struct Stats {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    count += 1.0;
    const double d = v - mean;
    mean += d / count;
    m2 += d * (v - mean);
  }
};

Stats merge(const Stats& a, const Stats& b) {
  if (a.count == 0.0) return b;
  if (b.count == 0.0) return a;
  Stats r;
  r.count = a.count + b.count;
  const double d = b.mean - a.mean;
  r.mean = a.mean + d * (b.count / r.count);
  r.m2 = a.m2 + b.m2 + d * d * (a.count * b.count / r.count);
  return r;
}

Stats pairwise_merge(std::span<const Stats> s) {
  if (s.empty()) return {};
  if (s.size() == 1) return s[0];
  const std::size_t half = s.size() / 2;
  return merge(pairwise_merge(s.first(half)), pairwise_merge(s.subspan(half)));
}

// Tracks whether every value of an output equals the first one.
struct ConstantTracker {
  double first = 0.0;
  bool seen = false;
  bool constant = true;

  void add(double v) {
    if (!seen) {
      first = v;
      seen = true;
    } else if (v != first) {
      constant = false;
    }
  }
};

std::vector<ConstantTracker> merge_trackers(const std::vector<ConstantTracker>& chunks, std::size_t n_chunks,
                                            std::size_t outputs) {
  std::vector<ConstantTracker> all(outputs);
  for (std::size_t c = 0; c < n_chunks; ++c)
    for (std::size_t k = 0; k < outputs; ++k) {
      const auto& t = chunks[c * outputs + k];
      if (!t.seen) continue;
      all[k].add(t.first);
      if (!t.constant) all[k].constant = false;
    }
  return all;
}

struct QuadratureResult {
  std::vector<double> values;
  std::vector<ConstantTracker> constant;
  std::size_t evaluations = 0;
};

QuadratureResult tensor_quadrature(const VectorIntegrand& f, std::size_t outputs, const InputModel& model,
                                   int n, bool parallel) {
  const std::size_t dim = model.dimension();
  const std::size_t total = tensor_size(n, dim);
  const auto rules = tensor_rules(model, n);
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks * outputs, 0.0);
  std::vector<ConstantTracker> trackers(chunks * outputs);

  for_each_chunk(chunks, parallel, [&](std::size_t c) {
    std::vector<std::uint8_t> idx(dim, 0);
    std::vector<double> x(dim), out(outputs), acc(outputs, 0.0);
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(total, begin + kChunk);
    std::size_t rem = begin;
    for (std::size_t d = dim; d-- > 0;) {
      idx[d] = static_cast<std::uint8_t>(rem % n);
      rem /= n;
    }
    for (std::size_t k = begin; k < end; ++k) {
      double w = 1.0;
      for (std::size_t d = 0; d < dim; ++d) {
        x[d] = rules[d].nodes[idx[d]];
        w *= rules[d].weights[idx[d]];
      }
      std::fill(out.begin(), out.end(), 0.0);
      f(Node{x, idx, n}, out);
      check_finite(out, x);
      for (std::size_t o = 0; o < outputs; ++o) {
        acc[o] += w * out[o];
        trackers[c * outputs + o].add(out[o]);
      }
      for (std::size_t d = dim; d-- > 0;) {
        if (++idx[d] < n) break;
        idx[d] = 0;
      }
    }
    for (std::size_t o = 0; o < outputs; ++o) partial[c * outputs + o] = acc[o];
  });

  QuadratureResult r;
  r.values.resize(outputs);
  std::vector<double> column(chunks);
  for (std::size_t o = 0; o < outputs; ++o) {
    for (std::size_t c = 0; c < chunks; ++c) column[c] = partial[c * outputs + o];
    r.values[o] = pairwise_sum(column);
  }
  r.constant = merge_trackers(trackers, chunks, outputs);
  r.evaluations = total;
  return r;
}

std::vector<Estimate> tensor_expectation(const VectorIntegrand& f, std::size_t outputs, const InputModel& model,
                                         int n, bool parallel) {
  auto fine = tensor_quadrature(f, outputs, model, n, parallel);
  std::vector<Estimate> est(outputs);
  bool all_constant = true;
  for (std::size_t o = 0; o < outputs; ++o) all_constant = all_constant && fine.constant[o].constant;
  if (all_constant) {
    for (std::size_t o = 0; o < outputs; ++o) est[o] = {fine.constant[o].first, 0.0, fine.evaluations, true};
    return est;
  }
  auto coarse = tensor_quadrature(f, outputs, model, n > 1 ? n - 1 : 2, parallel);
  for (std::size_t o = 0; o < outputs; ++o) {
    if (fine.constant[o].constant) {
      est[o] = {fine.constant[o].first, 0.0, fine.evaluations + coarse.evaluations, true};
    } else {
      est[o] = {fine.values[o], std::abs(fine.values[o] - coarse.values[o]),
                fine.evaluations + coarse.evaluations, true};
    }
  }
  return est;
}

// Shared driver for the sampled backends: replicate r, point i -> node x.
template <class PointFn>
std::vector<Estimate> sampled_expectation(const VectorIntegrand& f, std::size_t outputs, std::size_t dim,
                                          std::size_t count, int replicates, bool parallel, PointFn&& point) {
  const std::size_t per_rep = (count + kChunk - 1) / kChunk;
  const std::size_t chunks = per_rep * static_cast<std::size_t>(replicates);
  std::vector<Stats> stats(chunks * outputs);
  std::vector<ConstantTracker> trackers(chunks * outputs);

  for_each_chunk(chunks, parallel, [&](std::size_t c) {
    const std::size_t rep = c / per_rep;
    const std::size_t begin = (c % per_rep) * kChunk;
    const std::size_t end = std::min(count, begin + kChunk);
    std::vector<double> x(dim), out(outputs);
    for (std::size_t i = begin; i < end; ++i) {
      point(rep, i, std::span<double>(x));
      std::fill(out.begin(), out.end(), 0.0);
      f(Node{x, {}, 0}, out);
      check_finite(out, x);
      for (std::size_t o = 0; o < outputs; ++o) {
        stats[c * outputs + o].add(out[o]);
        trackers[c * outputs + o].add(out[o]);
      }
    }
  });

  const auto constant = merge_trackers(trackers, chunks, outputs);
  std::vector<Estimate> est(outputs);
  const std::size_t evaluations = count * static_cast<std::size_t>(replicates);
  std::vector<Stats> column(per_rep);
  for (std::size_t o = 0; o < outputs; ++o) {
    if (constant[o].constant) {
      est[o] = {constant[o].first, 0.0, evaluations, true};
      continue;
    }
    std::vector<double> rep_means(replicates);
    Stats within;
    for (int r = 0; r < replicates; ++r) {
      for (std::size_t k = 0; k < per_rep; ++k) column[k] = stats[(r * per_rep + k) * outputs + o];
      const Stats s = pairwise_merge(column);
      rep_means[r] = s.mean;
      within = s;
    }
    double value = pairwise_sum(rep_means) / replicates;
    double err = 0.0;
    if (replicates > 1) {
      double ss = 0.0;
      for (double m : rep_means) ss += (m - value) * (m - value);
      err = std::sqrt(ss / (replicates - 1) / replicates);
    } else if (within.count > 1.0) {
      err = std::sqrt(within.m2 / (within.count - 1.0) / within.count);
    }
    est[o] = {value, err, evaluations, true};
  }
  return est;
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

IntegrationSpec IntegrationSpec::tensor_gauss(int points_per_dim) { return {TensorGauss{points_per_dim}, 0.0}; }

IntegrationSpec IntegrationSpec::monte_carlo(std::size_t count, std::uint64_t seed) {
  return {MonteCarlo{count, seed}, 0.0};
}

IntegrationSpec IntegrationSpec::rqmc(std::size_t count, std::uint64_t seed, int replicates) {
  return {RandomizedQmc{count, seed, replicates}, 0.0};
}

std::string IntegrationSpec::id() const {
  return std::visit(Overloaded{[](const TensorGauss& t) { return "tensor_gauss(" + std::to_string(t.points_per_dim) + ")"; },
                               [](const MonteCarlo& m) {
                                 return "monte_carlo(" + std::to_string(m.count) + ";seed=" + std::to_string(m.seed) + ")";
                               },
                               [](const RandomizedQmc& q) {
                                 return "rqmc(" + std::to_string(q.count) + "x" + std::to_string(q.replicates) +
                                        ";seed=" + std::to_string(q.seed) + ")";
                               }},
                    backend);
}

void IntegrationSpec::validate(std::size_t dimension) const {
  std::visit(Overloaded{[dimension](const TensorGauss& t) {
                          if (t.points_per_dim < 1 || t.points_per_dim > kMaxGaussPoints)
                            throw InvalidArgument("points_per_dim must be in [1,64]");
                          tensor_size(t.points_per_dim, dimension);
                        },
                        [](const MonteCarlo& m) {
                          if (m.count < 1) throw InvalidArgument("Monte Carlo count must be positive");
                        },
                        [dimension](const RandomizedQmc& q) {
                          if (q.count < 1) throw InvalidArgument("RQMC count must be positive");
                          if (q.replicates < 1) throw InvalidArgument("RQMC replicates must be positive");
                          if (dimension > SobolSequence::kMaxDimension)
                            throw InvalidArgument("RQMC supports at most 64 dimensions");
                        }},
             backend);
  if (!(target_rel_tolerance >= 0.0)) throw InvalidArgument("target_rel_tolerance must be non-negative");
}

std::vector<QuadratureRule1D> tensor_rules(const InputModel& model, int points_per_dim) {
  std::vector<QuadratureRule1D> rules;
  rules.reserve(model.dimension());
  for (const auto& m : model.marginals()) rules.push_back(gauss_rule(m, points_per_dim));
  return rules;
}

std::vector<Estimate> expectation(const VectorIntegrand& f, std::size_t outputs, const InputModel& model,
                                  const IntegrationSpec& spec, bool concurrent_safe) {
  spec.validate(model.dimension());
  if (outputs == 0) return {};
  const std::size_t dim = model.dimension();
  auto est = std::visit(
      Overloaded{[&](const TensorGauss& t) { return tensor_expectation(f, outputs, model, t.points_per_dim, concurrent_safe); },
                 [&](const MonteCarlo& m) {
                   return sampled_expectation(f, outputs, dim, m.count, 1, concurrent_safe,
                                              [&](std::size_t, std::size_t i, std::span<double> x) {
                                                sample_row(model, m.seed, i, x);
                                              });
                 },
                 [&](const RandomizedQmc& q) {
                   const SobolSequence sobol(dim);
                   return sampled_expectation(f, outputs, dim, q.count, q.replicates, concurrent_safe,
                                              [&](std::size_t rep, std::size_t i, std::span<double> x) {
                                                sobol.scrambled_point(i, rng::bits(q.seed, 0x52514D43ULL, rep), x);
                                                for (std::size_t d = 0; d < dim; ++d) x[d] = model[d].quantile(x[d]);
                                              });
                 }},
      spec.backend);
  if (spec.target_rel_tolerance > 0.0)
    for (auto& e : est) e.converged = e.error_indicator <= spec.target_rel_tolerance * std::abs(e.value);
  return est;
}

Estimate expectation(const Evaluator& f, const InputModel& model, const IntegrationSpec& spec, bool concurrent_safe) {
  const VectorIntegrand g = [&f](const Node& node, std::span<double> out) { out[0] = f(node.x); };
  return expectation(g, 1, model, spec, concurrent_safe)[0];
}

Estimate expectation(const FunctionSpec& y, const InputModel& model, const IntegrationSpec& spec) {
  if (y.dimension() != model.dimension()) throw InvalidArgument("expectation: dimension mismatch");
  return expectation([&y](std::span<const double> x) { return y.evaluate(x); }, model, spec, y.concurrent_safe());
}

Estimate conditional_expectation(const Evaluator& f, const InputModel& model, IndexSubset u,
                                 std::span<const double> values, const IntegrationSpec& spec, bool concurrent_safe) {
  const std::size_t n = model.dimension();
  if (!u.is_subset_of(IndexSubset::full(n))) throw InvalidArgument("conditional_expectation: subset out of range");
  if (values.size() != u.size())
    throw InvalidArgument("conditional_expectation: expected " + std::to_string(u.size()) + " fixed values");
  const auto fixed = u.indices();
  const auto free = u.complement(n).indices();
  if (free.empty()) {
    std::vector<double> x(values.begin(), values.end());
    const double v = f(x);
    check_finite(std::span<const double>(&v, 1), x);
    return {v, 0.0, 1, true};
  }
  std::vector<MarginalDistribution> marginals;
  for (auto i : free) marginals.push_back(model[i]);
  const InputModel sub(std::move(marginals));
  const Evaluator g = [&](std::span<const double> z) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < fixed.size(); ++k) x[fixed[k]] = values[k];
    for (std::size_t k = 0; k < free.size(); ++k) x[free[k]] = z[k];
    return f(x);
  };
  return expectation(g, sub, spec, concurrent_safe);
}

Estimate conditional_expectation(const FunctionSpec& y, const InputModel& model, IndexSubset u,
                                 std::span<const double> values, const IntegrationSpec& spec) {
  if (y.dimension() != model.dimension()) throw InvalidArgument("conditional_expectation: dimension mismatch");
  return conditional_expectation([&y](std::span<const double> x) { return y.evaluate(x); }, model, u, values, spec,
                                 y.concurrent_safe());
}

}  // namespace dimdecomp
