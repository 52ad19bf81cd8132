#include "dimdecomp/fdd.hpp"

#include <cmath>
#include <sstream>

#include "dimdecomp/error.hpp"

namespace dimdecomp {

namespace {

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

[[noreturn]] void singular(IndexSubset u, double value, double floor, const std::string& where) {
  std::ostringstream os;
  os << "factor 1+z" << u.to_string() << " = " << value << " is below the singularity floor " << floor << " at "
     << where;
  throw SingularFactor(os.str());
}

void check_order(const FddDecomposition& fdd, std::size_t s) {
  if (s > fdd.max_order())
    throw Unavailable("truncation " + std::to_string(s) + " exceeds the built order " +
                      std::to_string(fdd.max_order()));
}

}  // namespace

FddDecomposition fdd_from_add(std::shared_ptr<const AddDecomposition> add, const FddOptions& options) {
  if (!add) throw InvalidArgument("fdd_from_add: null decomposition");
  FddDecomposition fdd;
  const double y0 = add->y_empty();
  const double sd = std::sqrt(std::max(add->total_variance(), 0.0));
  if (std::abs(y0) < 1e-6 * sd || y0 == 0.0) {
    if (sd == 0.0) throw SingularFactor("y_empty is zero and y has zero variance; no factorization exists");
    if (!options.allow_conditioning)
      throw SingularFactor("y_empty is (nearly) zero; the factorization divides by it. Enable conditioning to shift y");
    fdd.shift_ = 10.0 * sd;
  }
  fdd.one_plus_z_empty_ = y0 + fdd.shift_;
  fdd.floor_ = 1e-12 * std::abs(fdd.one_plus_z_empty_);
  const auto& subsets = add->subsets();
  fdd.proper_.resize(subsets.size());
  for (std::size_t k = 0; k < subsets.size(); ++k)
    for (const auto& v : subsets_of(subsets[k]))
      if (!v.empty() && v != subsets[k]) fdd.proper_[k].push_back(add->index_of(v));
  fdd.add_ = std::move(add);

  // Numeric decompositions carry a grid: check every factor at its nodes.
  if (const auto& grid = fdd.add_->grid()) fdd.tabulate(fdd.add_->tabulate(grid->rules, fdd.max_order()));
  return fdd;
}

FddDecomposition fdd_from_add(const AddDecomposition& add, const FddOptions& options) {
  return fdd_from_add(std::make_shared<const AddDecomposition>(add), options);
}

void FddDecomposition::factors(std::span<const double> x, std::size_t s, std::span<double> out) const {
  check_order(*this, s);
  const std::size_t count = add_->count_up_to(s);
  if (out.size() < count) throw InvalidArgument("factors: output too small");
  std::vector<double> comps(count);
  add_->components(x, s, comps);
  const auto& subsets = add_->subsets();
  for (std::size_t k = 0; k < count; ++k) {
    double a = one_plus_z_empty_ + comps[k];
    double p = one_plus_z_empty_;
    for (auto j : proper_[k]) {
      a += comps[j];
      p *= out[j];
    }
    const double f = a / p;
    if (!(std::abs(f) > floor_)) singular(subsets[k], f, floor_, "x = " + format_point(x));
    out[k] = f;
  }
}

double FddDecomposition::factor(IndexSubset u, std::span<const double> x) const {
  const std::size_t k = add_->index_of(u);
  std::vector<double> out(add_->count_up_to(u.size()));
  factors(x, u.size(), out);
  return out[k];
}

SubsetTables FddDecomposition::tabulate(const SubsetTables& add_tables) const {
  SubsetTables t;
  t.points = add_tables.points;
  t.subsets = add_tables.subsets;
  t.dims = add_tables.dims;
  t.values.resize(add_tables.values.size());
  const std::size_t n = static_cast<std::size_t>(t.points);
  for (std::size_t k = 0; k < t.subsets.size(); ++k) {
    const auto& dims = t.dims[k];
    // For each proper subset, positions of its dimensions inside u.
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> lower;
    for (auto j : proper_[k]) {
      std::vector<std::size_t> pos;
      for (std::size_t p = 0; p < dims.size(); ++p)
        if (t.subsets[j].contains(dims[p])) pos.push_back(p);
      lower.emplace_back(j, std::move(pos));
    }
    const auto& own = add_tables.values[k];
    auto& out = t.values[k];
    out.resize(own.size());
    std::vector<std::size_t> digits(dims.size());
    for (std::size_t e = 0; e < own.size(); ++e) {
      std::size_t rem = e;
      for (std::size_t j = dims.size(); j-- > 0;) {
        digits[j] = rem % n;
        rem /= n;
      }
      double a = one_plus_z_empty_ + own[e];
      double p = one_plus_z_empty_;
      for (const auto& [j, pos] : lower) {
        std::size_t off = 0;
        for (auto q : pos) off = off * n + digits[q];
        a += add_tables.values[j][off];
        p *= t.values[j][off];
      }
      const double f = a / p;
      if (!(std::abs(f) > floor_)) {
        std::ostringstream where;
        where << "grid node (";
        for (std::size_t j = 0; j < dims.size(); ++j) where << (j ? ", " : "") << "x" << dims[j] + 1 << "#" << digits[j];
        where << ")";
        singular(t.subsets[k], f, floor_, where.str());
      }
      out[e] = f;
    }
  }
  return t;
}

double evaluate_truncated(const FddDecomposition& fdd, std::size_t s, std::span<const double> x) {
  check_order(fdd, s);
  if (x.size() != fdd.dimension()) throw InvalidArgument("evaluate_truncated: dimension mismatch");
  const std::size_t count = fdd.add().count_up_to(s);
  std::vector<double> f(count);
  fdd.factors(x, s, f);
  double prod = fdd.one_plus_z_empty();
  for (double v : f) prod *= v;
  return prod - fdd.conditioning_shift();
}

TruncationEvaluator::TruncationEvaluator(const FddDecomposition& fdd, std::size_t s)
    : fdd_(fdd), s_(s), count_(fdd.add().count_up_to(s)) {
  check_order(fdd, s);
}

const TruncationEvaluator::Tables& TruncationEvaluator::tables(int points) const {
  std::lock_guard lock(mutex_);
  auto& slot = cache_[points];
  if (!slot) {
    auto t = std::make_unique<Tables>();
    t->add = fdd_.add().tabulate(tensor_rules(fdd_.add().model(), points), s_);
    t->fdd = fdd_.tabulate(t->add);
    slot = std::move(t);
  }
  return *slot;
}

TruncationEvaluator::Values TruncationEvaluator::operator()(const Node& node) const {
  Values v;
  const double y0 = fdd_.add().y_empty();
  if (!node.index.empty()) {
    const auto& t = tables(node.rule_points);
    double sum = y0;
    double prod = fdd_.one_plus_z_empty();
    for (std::size_t k = 0; k < count_; ++k) {
      sum += t.add.lookup(k, node.index);
      prod *= t.fdd.lookup(k, node.index);
    }
    v.add = sum;
    v.fdd = prod - fdd_.conditioning_shift();
    return v;
  }
  std::vector<double> comps(count_), f(count_);
  fdd_.add().components(node.x, s_, comps);
  double sum = y0;
  for (double c : comps) sum += c;
  fdd_.factors(node.x, s_, f);
  double prod = fdd_.one_plus_z_empty();
  for (double c : f) prod *= c;
  v.add = sum;
  v.fdd = prod - fdd_.conditioning_shift();
  return v;
}

FddMoments moments(const FddDecomposition& fdd, std::size_t s, const InputModel& model, const IntegrationSpec& spec) {
  check_order(fdd, s);
  if (model.dimension() != fdd.dimension()) throw InvalidArgument("moments: dimension mismatch");
  const TruncationEvaluator eval(fdd, s);
  const double y0 = fdd.add().y_empty();
  const auto est = expectation(
      [&](const Node& node, std::span<double> out) {
        const double d = eval(node).fdd - y0;
        out[0] = d;
        out[1] = d * d;
      },
      2, model, spec);
  FddMoments m;
  m.mean = y0 + est[0].value;
  m.variance = est[1].value - est[0].value * est[0].value;
  m.mean_error = est[0].error_indicator;
  m.variance_error = est[1].error_indicator + 2.0 * std::abs(est[0].value) * est[0].error_indicator;
  m.evaluations = est[0].evaluations_used;
  return m;
}

FddMoments moments_paired(const FddDecomposition& fdd, std::size_t s, const FunctionSpec& y, const Moments& exact,
                          const InputModel& model, const IntegrationSpec& spec) {
  check_order(fdd, s);
  if (model.dimension() != fdd.dimension() || y.dimension() != fdd.dimension())
    throw InvalidArgument("moments_paired: dimension mismatch");
  const TruncationEvaluator eval(fdd, s);
  const double y0 = exact.mean;
  const auto est = expectation(
      [&](const Node& node, std::span<double> out) {
        const double yhat = eval(node).fdd;
        const double yv = y.evaluate(node.x);
        out[0] = yhat - yv;
        out[1] = (yhat - y0) * (yhat - y0) - (yv - y0) * (yv - y0);
      },
      2, model, spec, y.concurrent_safe());
  FddMoments m;
  m.mean = y0 + est[0].value;
  m.variance = exact.variance + est[1].value - est[0].value * est[0].value;
  m.mean_error = est[0].error_indicator;
  m.variance_error = est[1].error_indicator + 2.0 * std::abs(est[0].value) * est[0].error_indicator;
  m.evaluations = est[0].evaluations_used;
  return m;
}

double univariate_variance_closed_form(double y_empty, std::span<const double> univariate_variances) {
  if (y_empty == 0.0) throw SingularFactor("univariate FDD variance needs a nonzero y_empty");
  const double y2 = y_empty * y_empty;
  // prod(1 + a_i) - 1 accumulated without cancellation for small a_i.
  double excess = 0.0;
  for (double v : univariate_variances) {
    const double a = v / y2;
    excess = excess + a + excess * a;
  }
  return y2 * excess;
}

}  // namespace dimdecomp
