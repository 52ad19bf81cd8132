#include "dimdecomp/add.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "dimdecomp/error.hpp"

namespace dimdecomp {

namespace {

constexpr std::size_t kMaxSubsets = std::size_t{1} << 22;

std::size_t subset_count(std::size_t n, std::size_t s) {
  std::size_t total = 0;
  double binom = 1.0;
  for (std::size_t k = 1; k <= s; ++k) {
    binom = binom * static_cast<double>(n - k + 1) / static_cast<double>(k);
    total += static_cast<std::size_t>(std::llround(binom));
    if (total > kMaxSubsets)
      throw InvalidArgument("decomposition to order " + std::to_string(s) + " in " + std::to_string(n) +
                            " dimensions has too many component functions");
  }
  return total;
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

std::vector<double> barycentric_weights(const std::vector<double>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<double> w(n, 1.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) w[j] /= (nodes[j] - nodes[k]);
  double scale = 0.0;
  for (double v : w) scale = std::max(scale, std::abs(v));
  for (double& v : w) v /= scale;
  return w;
}

// Base-n digits of a flat tensor index (last digit fastest).
void decode(std::size_t flat, std::size_t n, std::span<std::size_t> digits) {
  for (std::size_t j = digits.size(); j-- > 0;) {
    digits[j] = flat % n;
    flat /= n;
  }
}

// Positions of the members of v inside the ascending member list of u.
std::vector<std::size_t> positions_in(const std::vector<std::size_t>& u_dims, IndexSubset v) {
  std::vector<std::size_t> pos;
  for (std::size_t p = 0; p < u_dims.size(); ++p)
    if (v.contains(u_dims[p])) pos.push_back(p);
  return pos;
}

std::size_t sub_offset(std::span<const std::size_t> digits, const std::vector<std::size_t>& pos, std::size_t n) {
  std::size_t off = 0;
  for (auto p : pos) off = off * n + digits[p];
  return off;
}

bool same_rule(const QuadratureRule1D& a, const QuadratureRule1D& b) {
  return a.nodes == b.nodes;
}

}  // namespace

std::string to_string(Provenance p) { return p == Provenance::closed_form ? "closed_form" : "numeric"; }

void InterpolationGrid::basis(std::size_t d, double x, std::span<double> out) const {
  const auto& nodes = rules[d].nodes;
  const auto& bw = barycentric[d];
  for (std::size_t j = 0; j < nodes.size(); ++j)
    if (x == nodes[j]) {
      std::fill(out.begin(), out.end(), 0.0);
      out[j] = 1.0;
      return;
    }
  double s = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    out[j] = bw[j] / (x - nodes[j]);
    s += out[j];
  }
  for (std::size_t j = 0; j < nodes.size(); ++j) out[j] /= s;
}

namespace detail {

std::vector<double> mode_product(const std::vector<double>& tensor, std::vector<std::size_t>& shape, std::size_t mode,
                                 const std::vector<double>& matrix, std::size_t rows) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t j = 0; j < mode; ++j) outer *= shape[j];
  for (std::size_t j = mode + 1; j < shape.size(); ++j) inner *= shape[j];
  const std::size_t cols = shape[mode];
  std::vector<double> out(outer * rows * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t a = 0; a < rows; ++a)
      for (std::size_t b = 0; b < cols; ++b) {
        const double m = matrix[a * cols + b];
        if (m == 0.0) continue;
        const double* src = tensor.data() + (o * cols + b) * inner;
        double* dst = out.data() + (o * rows + a) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += m * src[i];
      }
  shape[mode] = rows;
  return out;
}

}  // namespace detail

std::size_t AddDecomposition::count_up_to(std::size_t s) const { return order_end_[std::min(s, max_order_)]; }

std::size_t AddDecomposition::index_of(IndexSubset u) const {
  auto it = std::lower_bound(subsets_.begin(), subsets_.end(), u, canonical_less);
  if (it == subsets_.end() || *it != u)
    throw Unavailable("component " + u.to_string() + " was not built (max order " + std::to_string(max_order_) + ")");
  return static_cast<std::size_t>(it - subsets_.begin());
}

void AddDecomposition::finish() {
  order_end_.assign(max_order_ + 1, 0);
  for (const auto& u : subsets_)
    for (std::size_t k = u.size(); k <= max_order_; ++k) ++order_end_[k];
  negligible_.resize(subsets_.size());
  for (std::size_t k = 0; k < subsets_.size(); ++k) negligible_[k] = variances_[k] < 1e-14 * total_variance_;
  if (component_errors_.empty()) component_errors_.assign(subsets_.size(), 0.0);
}

double AddDecomposition::component(std::size_t k, std::span<const double> x) const {
  if (x.size() != dimension_) throw InvalidArgument("component: dimension mismatch");
  const IndexSubset u = subsets_.at(k);
  if (blended_) {
    const auto& terms = blended_->terms;
    double mult = 0.0;
    if (blended_->nu0 != 0.0) {
      mult = coefficients_[k];
      for (auto d : u.indices()) mult *= terms[d].h(x[d]) - terms[d].nu;
    }
    if (u.size() == 1) {
      const auto d = u.indices()[0];
      if (terms[d].g) mult += terms[d].g(x[d]) - terms[d].mu;
    }
    return mult;
  }
  const auto dims = u.indices();
  const auto& g = *grid_;
  const std::size_t n = g.rules[0].size();
  std::vector<double> basis(dims.size() * n);
  for (std::size_t j = 0; j < dims.size(); ++j) g.basis(dims[j], x[dims[j]], std::span(basis).subspan(j * n, n));
  const auto& t = tensors_[k];
  std::vector<std::size_t> digits(dims.size());
  double sum = 0.0;
  for (std::size_t f = 0; f < t.size(); ++f) {
    decode(f, n, digits);
    double w = t[f];
    for (std::size_t j = 0; j < dims.size() && w != 0.0; ++j) w *= basis[j * n + digits[j]];
    sum += w;
  }
  return sum;
}

void AddDecomposition::components(std::span<const double> x, std::size_t s, std::span<double> out) const {
  if (x.size() != dimension_) throw InvalidArgument("components: dimension mismatch");
  const std::size_t count = count_up_to(s);
  if (out.size() < count) throw InvalidArgument("components: output too small");
  if (blended_) {
    const auto& terms = blended_->terms;
    const bool has_mult = blended_->nu0 != 0.0;
    std::vector<double> dh(dimension_, 0.0), dg(dimension_, 0.0);
    for (std::size_t d = 0; d < dimension_; ++d) {
      if (has_mult) dh[d] = terms[d].h(x[d]) - terms[d].nu;
      if (terms[d].g) dg[d] = terms[d].g(x[d]) - terms[d].mu;
    }
    for (std::size_t k = 0; k < count; ++k) {
      const IndexSubset u = subsets_[k];
      double v = has_mult ? coefficients_[k] : 0.0;
      std::uint64_t m = u.mask();
      while (m != 0 && v != 0.0) {
        v *= dh[std::countr_zero(m)];
        m &= m - 1;
      }
      if (u.size() == 1) v += dg[std::countr_zero(u.mask())];
      out[k] = v;
    }
    return;
  }
  const auto& g = *grid_;
  const std::size_t n = g.rules[0].size();
  std::vector<double> basis(dimension_ * n);
  for (std::size_t d = 0; d < dimension_; ++d) g.basis(d, x[d], std::span(basis).subspan(d * n, n));
  std::vector<std::size_t> digits;
  for (std::size_t k = 0; k < count; ++k) {
    const auto dims = subsets_[k].indices();
    digits.resize(dims.size());
    const auto& t = tensors_[k];
    double sum = 0.0;
    for (std::size_t f = 0; f < t.size(); ++f) {
      decode(f, n, digits);
      double w = t[f];
      for (std::size_t j = 0; j < dims.size() && w != 0.0; ++j) w *= basis[dims[j] * n + digits[j]];
      sum += w;
    }
    out[k] = sum;
  }
}

SubsetTables AddDecomposition::tabulate(const std::vector<QuadratureRule1D>& rules, std::size_t s) const {
  if (rules.size() != dimension_) throw InvalidArgument("tabulate: one rule per dimension required");
  const std::size_t n = rules[0].size();
  for (const auto& r : rules)
    if (r.size() != n) throw InvalidArgument("tabulate: rules must share a size");
  if (n > 255) throw InvalidArgument("tabulate: at most 255 nodes per dimension");
  SubsetTables t;
  t.points = static_cast<int>(n);
  const std::size_t count = count_up_to(s);
  t.subsets.assign(subsets_.begin(), subsets_.begin() + count);
  t.dims.resize(count);
  t.values.resize(count);

  if (blended_) {
    const auto& terms = blended_->terms;
    const bool has_mult = blended_->nu0 != 0.0;
    std::vector<std::vector<double>> dh(dimension_, std::vector<double>(n, 0.0)), dg = dh;
    for (std::size_t d = 0; d < dimension_; ++d)
      for (std::size_t q = 0; q < n; ++q) {
        const double x = rules[d].nodes[q];
        if (has_mult) dh[d][q] = terms[d].h(x) - terms[d].nu;
        if (terms[d].g) dg[d][q] = terms[d].g(x) - terms[d].mu;
      }
    for (std::size_t k = 0; k < count; ++k) {
      const auto dims = subsets_[k].indices();
      t.dims[k].assign(dims.begin(), dims.end());
      auto& vals = t.values[k];
      vals.assign(ipow(n, dims.size()), 0.0);
      std::vector<std::size_t> digits(dims.size());
      for (std::size_t f = 0; f < vals.size(); ++f) {
        decode(f, n, digits);
        double v = has_mult ? coefficients_[k] : 0.0;
        for (std::size_t j = 0; j < dims.size(); ++j) v *= dh[dims[j]][digits[j]];
        if (dims.size() == 1) v += dg[dims[0]][digits[0]];
        vals[f] = v;
      }
    }
    return t;
  }

  const auto& g = *grid_;
  const std::size_t ng = g.rules[0].size();
  // Interpolation matrices from the stored grid to the requested rule, per dimension.
  std::vector<std::optional<std::vector<double>>> interp(dimension_);
  for (std::size_t d = 0; d < dimension_; ++d) {
    if (same_rule(rules[d], g.rules[d])) continue;
    std::vector<double> m(n * ng);
    for (std::size_t q = 0; q < n; ++q) g.basis(d, rules[d].nodes[q], std::span(m).subspan(q * ng, ng));
    interp[d] = std::move(m);
  }
  for (std::size_t k = 0; k < count; ++k) {
    const auto dims = subsets_[k].indices();
    t.dims[k].assign(dims.begin(), dims.end());
    std::vector<double> tensor = tensors_[k];
    std::vector<std::size_t> shape(dims.size(), ng);
    for (std::size_t j = 0; j < dims.size(); ++j) {
      if (interp[dims[j]]) {
        tensor = detail::mode_product(tensor, shape, j, *interp[dims[j]], n);
      } else if (ng != n) {
        throw InvalidArgument("tabulate: inconsistent grid");
      }
    }
    t.values[k] = std::move(tensor);
  }
  return t;
}

AddDecomposition build_closed_form(const FunctionSpec& spec, const InputModel& model,
                                   std::optional<std::size_t> max_order) {
  const std::size_t n = spec.dimension();
  if (model.dimension() != n) throw InvalidArgument("build_closed_form: model and function dimensions differ");
  auto blended = spec.as_blended();
  if (!blended) throw InvalidArgument("build_closed_form: '" + spec.name() + "' has no closed-form components");
  if (std::holds_alternative<StandardizedBlend>(spec.variant()))
    for (const auto& m : model.marginals()) {
      const auto* u = std::get_if<Uniform>(&m.kind());
      if (u == nullptr || u->a != 0.0 || u->b != 1.0)
        throw InvalidArgument("standardized blend is defined for uniform(0,1) inputs only");
    }
  const std::size_t s = max_order.value_or(n);
  if (s > n) throw InvalidArgument("build_closed_form: max order exceeds N");
  subset_count(n, s);

  AddDecomposition add(model);
  add.dimension_ = n;
  add.max_order_ = s;
  add.provenance_ = Provenance::closed_form;
  add.provenance_id_ = "closed_form";
  add.subsets_ = subsets_up_to(n, s, 1);

  const auto& terms = blended->terms;
  const double nu0 = blended->nu0;
  double mean_prod = 1.0, mu_sum = 0.0;
  for (const auto& t : terms) {
    mean_prod *= t.nu;
    mu_sum += t.mu;
  }
  add.y_empty_ = nu0 * mean_prod + blended->mu0 + mu_sum;

  add.coefficients_.resize(add.subsets_.size());
  add.variances_.resize(add.subsets_.size());
  for (std::size_t k = 0; k < add.subsets_.size(); ++k) {
    const IndexSubset u = add.subsets_[k];
    double c = nu0;
    double dprod = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (u.contains(j))
        dprod *= terms[j].delta_sq;
      else
        c *= terms[j].nu;
    }
    add.coefficients_[k] = c;
    double v = c * c * dprod;
    if (u.size() == 1) {
      const auto& t = terms[std::countr_zero(u.mask())];
      v += t.lambda_sq + 2.0 * c * t.eta_sq;
    }
    add.variances_[k] = v;
  }
  const auto moments = exact_moments(FunctionSpec(*blended), model);
  add.total_variance_ = moments->variance;
  add.blended_ = std::move(blended);
  add.finish();
  return add;
}

AddDecomposition build_numeric(const FunctionSpec& spec, const InputModel& model, std::size_t max_order,
                               const IntegrationSpec& int_spec, int grid_points) {
  const std::size_t n = spec.dimension();
  if (model.dimension() != n) throw InvalidArgument("build_numeric: model and function dimensions differ");
  if (max_order > n) throw InvalidArgument("build_numeric: max order exceeds N");
  int_spec.validate(n);
  subset_count(n, max_order);
  const auto* tg = std::get_if<TensorGauss>(&int_spec.backend);
  if (grid_points <= 0) grid_points = tg ? tg->points_per_dim : 8;
  if (grid_points > kMaxGaussPoints) throw InvalidArgument("build_numeric: grid_points must be in [1,64]");
  const std::size_t ng = static_cast<std::size_t>(grid_points);

  AddDecomposition add(model);
  add.dimension_ = n;
  add.max_order_ = max_order;
  add.provenance_ = Provenance::numeric;
  add.provenance_id_ = "numeric:" + int_spec.id();
  add.subsets_ = subsets_up_to(n, max_order, 1);

  InterpolationGrid grid;
  grid.rules = tensor_rules(model, grid_points);
  for (const auto& r : grid.rules) grid.barycentric.push_back(barycentric_weights(r.nodes));

  // With a tensor-Gauss backend on the interpolation grid itself, y is evaluated
  // once on the full grid and every conditional expectation is a contraction.
  bool cached = tg != nullptr && tg->points_per_dim == grid_points;
  std::size_t full = 1;
  for (std::size_t d = 0; cached && d < n; ++d) {
    full *= ng;
    if (full > kMaxTensorNodes) cached = false;
  }

  std::vector<double> values;  // y on the full grid (cached mode)
  if (cached) {
    values.resize(full);
    std::vector<double> weighted(full);
    const std::size_t chunk = 4096;
    const auto chunks = static_cast<long long>((full + chunk - 1) / chunk);
    std::vector<std::exception_ptr> errors(chunks);
#pragma omp parallel for schedule(dynamic) if (spec.concurrent_safe())
    for (long long c = 0; c < chunks; ++c) {
      try {
        std::vector<std::size_t> digits(n);
        std::vector<double> x(n);
        const std::size_t begin = static_cast<std::size_t>(c) * chunk;
        const std::size_t end = std::min(full, begin + chunk);
        for (std::size_t f = begin; f < end; ++f) {
          decode(f, ng, digits);
          double w = 1.0;
          for (std::size_t d = 0; d < n; ++d) {
            x[d] = grid.rules[d].nodes[digits[d]];
            w *= grid.rules[d].weights[digits[d]];
          }
          const double v = spec.evaluate(x);
          if (!std::isfinite(v)) throw IntegrationFailure("non-finite function value on the integration grid");
          values[f] = v;
          weighted[f] = w * v;
        }
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    add.y_empty_ = pairwise_sum(weighted);
    std::vector<std::size_t> digits(n);
    for (std::size_t f = 0; f < full; ++f) {
      decode(f, ng, digits);
      double w = 1.0;
      for (std::size_t d = 0; d < n; ++d) w *= grid.rules[d].weights[digits[d]];
      const double dv = values[f] - add.y_empty_;
      weighted[f] = w * dv * dv;
    }
    add.total_variance_ = pairwise_sum(weighted);
  } else {
    const auto mean = expectation(spec, model, int_spec);
    add.y_empty_ = mean.value;
    const double y0 = mean.value;
    const auto var = expectation([&spec, y0](std::span<const double> x) {
                                   const double d = spec.evaluate(x) - y0;
                                   return d * d;
                                 },
                                 model, int_spec, spec.concurrent_safe());
    add.total_variance_ = var.value;
  }

  add.tensors_.resize(add.subsets_.size());
  add.variances_.resize(add.subsets_.size());
  add.component_errors_.assign(add.subsets_.size(), 0.0);
  for (std::size_t k = 0; k < add.subsets_.size(); ++k) {
    const IndexSubset u = add.subsets_[k];
    const auto dims = u.indices();
    const std::size_t size = ipow(ng, dims.size());
    std::vector<double> cond(size, 0.0);

    if (cached) {
      std::vector<std::size_t> digits(n);
      for (std::size_t f = 0; f < full; ++f) {
        decode(f, ng, digits);
        double w = 1.0;
        std::size_t off = 0;
        for (std::size_t d = 0; d < n; ++d) {
          if (u.contains(d))
            off = off * ng + digits[d];
          else
            w *= grid.rules[d].weights[digits[d]];
        }
        cond[off] += w * values[f];
      }
    } else {
      std::vector<std::size_t> digits(dims.size());
      std::vector<double> xu(dims.size());
      for (std::size_t e = 0; e < size; ++e) {
        decode(e, ng, digits);
        for (std::size_t j = 0; j < dims.size(); ++j) xu[j] = grid.rules[dims[j]].nodes[digits[j]];
        const auto est = conditional_expectation(spec, model, u, xu, int_spec);
        cond[e] = est.value;
        add.component_errors_[k] = std::max(add.component_errors_[k], est.error_indicator);
      }
    }

    // Subtract y_empty and every lower-order component contained in u.
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> lower;
    for (const auto& v : subsets_of(u)) {
      if (v.empty() || v == u) continue;
      lower.emplace_back(add.index_of(v), positions_in(dims, v));
    }
    std::vector<std::size_t> digits(dims.size());
    double var = 0.0;
    for (std::size_t e = 0; e < size; ++e) {
      decode(e, ng, digits);
      double v = cond[e] - add.y_empty_;
      for (const auto& [idx, pos] : lower) v -= add.tensors_[idx][sub_offset(digits, pos, ng)];
      cond[e] = v;
      double w = 1.0;
      for (std::size_t j = 0; j < dims.size(); ++j) w *= grid.rules[dims[j]].weights[digits[j]];
      var += w * v * v;
    }
    add.tensors_[k] = std::move(cond);
    add.variances_[k] = var;
  }
  add.grid_ = std::move(grid);
  add.finish();
  return add;
}

double truncated_variance(const AddDecomposition& add, std::size_t s) {
  if (s > add.max_order())
    throw Unavailable("truncation " + std::to_string(s) + " exceeds the built order " + std::to_string(add.max_order()));
  const std::size_t count = add.count_up_to(s);
  return pairwise_sum(std::span(add.variances()).first(count));
}

double evaluate_truncated(const AddDecomposition& add, std::size_t s, std::span<const double> x) {
  if (s > add.max_order())
    throw Unavailable("truncation " + std::to_string(s) + " exceeds the built order " + std::to_string(add.max_order()));
  if (x.size() != add.dimension()) throw InvalidArgument("evaluate_truncated: dimension mismatch");
  const std::size_t count = add.count_up_to(s);
  std::vector<double> comps(count);
  add.components(x, s, comps);
  double sum = add.y_empty();
  for (double c : comps) sum += c;
  return sum;
}

std::vector<SensitivityIndex> sensitivity_indices(const AddDecomposition& add) {
  const double total = add.total_variance();
  if (!(total > 0.0)) throw InvalidArgument("sensitivity indices need a positive total variance");
  std::vector<SensitivityIndex> out;
  out.reserve(add.subsets().size());
  for (std::size_t k = 0; k < add.subsets().size(); ++k)
    out.push_back({add.subsets()[k], std::clamp(add.variances()[k] / total, 0.0, 1.0)});
  return out;
}

std::vector<UnivariateComponentMoments> univariate_moments(const AddDecomposition& add, int quadrature_points) {
  if (add.max_order() < 1) throw Unavailable("univariate moments need a decomposition of order >= 1");
  const std::size_t n = add.dimension();
  std::vector<UnivariateComponentMoments> out(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto rule = gauss_rule(add.model()[i], quadrature_points);
    const std::size_t k = add.index_of(IndexSubset::single(i));
    for (std::size_t d = 0; d < n; ++d) x[d] = add.model()[d].mean();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      x[i] = rule.nodes[q];
      const double v = add.component(k, x);
      const double w = rule.weights[q];
      out[i].variance += w * v * v;
      out[i].third += w * v * v * v;
      out[i].fourth += w * v * v * v * v;
    }
  }
  return out;
}

}  // namespace dimdecomp
