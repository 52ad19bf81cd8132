#include "dimdecomp/hdd.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "dimdecomp/error.hpp"

namespace dimdecomp {

namespace {

constexpr double kConditionLimit = 1e12;

double pairs_sum(std::span<const double> a) {
  double total = 0.0, prefix = 0.0;
  for (double v : a) {
    total += prefix * v;
    prefix += v;
  }
  return total;
}

void cross_check(CrossMoments& cm, const std::string& name, double closed, const Estimate& num, double scale,
                 double tol) {
  const double diff = std::abs(closed - num.value);
  const bool ok = diff <= tol * std::max(std::abs(closed), scale) + 10.0 * num.error_indicator;
  cm.checks.push_back({name, closed, num.value, ok});
  if (!ok) {
    std::ostringstream os;
    os.precision(10);
    os << name << ": closed form " << closed << " vs numeric " << num.value << " (error indicator "
       << num.error_indicator << ")";
    cm.warnings.push_back(os.str());
  }
}

}  // namespace

std::string to_string(MomentSource s) { return s == MomentSource::closed_form ? "closed_form" : "numeric"; }

std::string to_string(HybridKind k) {
  switch (k) {
    case HybridKind::Nonlinear3:
      return "hdd_nonlinear";
    case HybridKind::Linear2:
      return "hdd_linear";
    case HybridKind::LinearConstrained1:
      return "hdd_constrained";
  }
  return "unknown";
}

UnivariateCrossMoments univariate_cross_moments(double y0, std::span<const UnivariateComponentMoments> moments) {
  if (y0 == 0.0) throw SingularFactor("univariate cross moments need a nonzero y_empty");
  const std::size_t n = moments.size();
  const double y2 = y0 * y0;
  std::vector<double> var(n), t(n);
  double var_add = 0.0, third = 0.0, quartic_part = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = moments[i];
    var[i] = m.variance;
    var_add += m.variance;
    third += m.third;
    t[i] = (2.0 * y0 * m.variance + m.third) / (m.variance + y2);
    quartic_part += (y2 * m.variance + 2.0 * y0 * m.third + m.fourth) / (m.variance + y2);
  }
  const double pairs = pairs_sum(var);
  double t_sum = 0.0;
  for (double v : t) t_sum += v;
  UnivariateCrossMoments c;
  c.var_add = var_add;
  c.var_fdd = univariate_variance_closed_form(y0, var);
  const double scale = c.var_fdd + y2;
  c.e_add2_fdd = 2.0 / y0 * pairs + third;
  c.e_add_fdd2 = scale * t_sum - 2.0 * y0 * var_add;
  c.e_add2_fdd2 = scale * (quartic_part + 2.0 * pairs_sum(t)) - y2 * var_add - 2.0 * y0 * third - 4.0 * pairs;
  return c;
}

CrossMoments compute_cross_moments(const FunctionSpec& y, const FddDecomposition& fdd, std::size_t s,
                                   const InputModel& model, const IntegrationSpec& spec,
                                   const CrossMomentOptions& options) {
  const auto& add = fdd.add();
  if (y.dimension() != add.dimension() || model.dimension() != add.dimension())
    throw InvalidArgument("compute_cross_moments: dimension mismatch");
  if (s < 1 || s > fdd.max_order())
    throw Unavailable("cross moments need 1 <= S <= built order " + std::to_string(fdd.max_order()));

  const TruncationEvaluator approx(fdd, s);
  const double y0 = add.y_empty();
  const auto est = expectation(
      [&](const Node& node, std::span<double> out) {
        const auto a = approx(node);
        const double w = y.evaluate(node.x) - y0;
        const double wt = a.add - y0;
        const double v = a.fdd - y0;
        const double r = w - wt;
        out[0] = v;
        out[1] = v * v;
        out[2] = wt * v;
        out[3] = wt * wt * v;
        out[4] = wt * v * v;
        out[5] = wt * wt * v * v;
        out[6] = r * (v - wt);
        out[7] = r * wt * v;
        out[8] = v - w;
        out[9] = v * v - w * w;
      },
      10, model, spec, y.concurrent_safe());

  CrossMoments cm;
  cm.s = s;
  cm.y_empty = y0;
  cm.backend = spec.id();
  const double var_add = truncated_variance(add, s);
  cm.var_add = {var_add, add.provenance() == Provenance::closed_form ? MomentSource::closed_form : MomentSource::numeric,
                0.0};

  // Numeric estimates. Orthogonality of ANOVA components gives E[w~] = E[w - w~] = 0
  // and E[w w~] = E[w~^2]; only the remaining pieces are integrated.
  double m, var_fdd, m_err, var_err;
  if (options.exact) {
    const double bias = options.exact->mean - y0;
    m = bias + est[8].value;
    var_fdd = options.exact->variance + bias * bias + est[9].value - m * m;
    m_err = est[8].error_indicator;
    var_err = est[9].error_indicator + 2.0 * std::abs(m) * m_err;
  } else {
    m = est[0].value;
    var_fdd = est[1].value - m * m;
    m_err = est[0].error_indicator;
    var_err = est[1].error_indicator + 2.0 * std::abs(m) * m_err;
  }
  const double e_add_fdd = est[2].value;
  const Estimate num_var_fdd{var_fdd, var_err, 0, true};
  const Estimate num_e21{est[3].value - m * var_add, est[3].error_indicator, 0, true};
  const Estimate num_e12{est[4].value - 2.0 * m * est[2].value, est[4].error_indicator + 2.0 * est[2].error_indicator, 0,
                         true};
  const Estimate num_e22{est[5].value - 2.0 * m * est[3].value + m * m * var_add,
                         est[5].error_indicator + 2.0 * std::abs(m) * est[3].error_indicator, 0, true};

  cm.fdd_mean = {y0 + m, MomentSource::numeric, m_err};
  cm.var_fdd = {num_var_fdd.value, MomentSource::numeric, num_var_fdd.error_indicator};
  cm.e_add_fdd = {e_add_fdd, MomentSource::numeric, est[2].error_indicator};
  cm.e_w_fdd = {e_add_fdd + est[6].value, MomentSource::numeric, est[2].error_indicator + est[6].error_indicator};
  cm.e_add2_fdd = {num_e21.value, MomentSource::numeric, num_e21.error_indicator};
  cm.e_add_fdd2 = {num_e12.value, MomentSource::numeric, num_e12.error_indicator};
  cm.e_add2_fdd2 = {num_e22.value, MomentSource::numeric, num_e22.error_indicator};
  cm.e_w_add_fdd = {est[3].value + est[7].value - m * var_add, MomentSource::numeric,
                    est[3].error_indicator + est[7].error_indicator};

  if (s == 1) {
    const auto um = univariate_moments(add);
    const double yf = fdd.one_plus_z_empty();
    const auto closed = univariate_cross_moments(yf, um);
    const double scale2 = closed.var_fdd;
    const double scale3 = std::pow(scale2, 1.5);
    const double scale4 = scale2 * scale2;
    const double tol = options.check_tolerance;
    cross_check(cm, "fdd_mean", y0, {cm.fdd_mean.value, m_err, 0, true}, std::abs(y0) + std::sqrt(scale2), tol);
    cross_check(cm, "var_fdd", closed.var_fdd, num_var_fdd, scale2, tol);
    cross_check(cm, "e_add_fdd", var_add, {e_add_fdd, est[2].error_indicator, 0, true}, scale2, tol);
    cross_check(cm, "e_add2_fdd", closed.e_add2_fdd, num_e21, scale3, tol);
    cross_check(cm, "e_add_fdd2", closed.e_add_fdd2, num_e12, scale3, tol);
    cross_check(cm, "e_add2_fdd2", closed.e_add2_fdd2, num_e22, scale4, tol);
    if (options.prefer_closed_form) {
      const auto cf = MomentSource::closed_form;
      cm.fdd_mean = {y0, cf, 0.0};
      cm.var_fdd = {closed.var_fdd, cf, 0.0};
      cm.e_add_fdd = {var_add, cf, 0.0};
      cm.e_add2_fdd = {closed.e_add2_fdd, cf, 0.0};
      cm.e_add_fdd2 = {closed.e_add_fdd2, cf, 0.0};
      cm.e_add2_fdd2 = {closed.e_add2_fdd2, cf, 0.0};
      // With the exact FDD mean the w-entries need no centering correction.
      cm.e_w_fdd = {var_add + est[6].value, MomentSource::numeric, est[6].error_indicator};
      cm.e_w_add_fdd = {est[3].value + est[7].value, MomentSource::numeric,
                        est[3].error_indicator + est[7].error_indicator};
    }
  }
  return cm;
}

HybridModel fit_linear(const CrossMoments& cross) {
  HybridModel h;
  h.kind = HybridKind::Linear2;
  h.s = cross.s;
  h.cross = cross;
  h.y_empty = cross.y_empty;
  const double va = cross.var_add.value;
  const double vf = cross.var_fdd.value;
  const double c = cross.e_add_fdd.value;
  const double cw = cross.e_w_fdd.value;
  if (cross.s == 1) {
    const double den = vf - va;
    if (!(den > 1e-12 * std::max(vf, std::numeric_limits<double>::min()))) {
      h.alpha = 1.0;
      h.degenerate = true;
      return h;
    }
    h.alpha = (vf - cw) / den;
    h.beta = (cw - va) / den;
    return h;
  }
  const double det = va * vf - c * c;
  if (!(det > 1e-12 * va * vf)) {
    h.alpha = 1.0;
    h.degenerate = true;
    return h;
  }
  h.alpha = (vf * va - c * cw) / det;
  h.beta = (va * cw - va * c) / det;
  return h;
}

HybridModel fit_linear_constrained(const CrossMoments& cross) {
  HybridModel h;
  h.kind = HybridKind::LinearConstrained1;
  h.s = cross.s;
  h.cross = cross;
  h.y_empty = cross.y_empty;
  const double va = cross.var_add.value;
  const double vf = cross.var_fdd.value;
  const double c = cross.e_add_fdd.value;
  const double cw = cross.e_w_fdd.value;
  const double den = va + vf - 2.0 * c;
  if (!(den > 1e-12 * (va + vf))) {
    h.alpha = 1.0;
    h.degenerate = true;
  } else {
    h.alpha = (va + vf - c - cw) / den;
  }
  h.beta = 1.0 - h.alpha;
  return h;
}

HybridModel fit_nonlinear(const CrossMoments& cross) {
  const double va = cross.var_add.value;
  const double vf = cross.var_fdd.value;
  const double c = cross.e_add_fdd.value;
  Eigen::Matrix3d a;
  a << va, c, cross.e_add2_fdd.value,  //
      c, vf, cross.e_add_fdd2.value,   //
      cross.e_add2_fdd.value, cross.e_add_fdd2.value, cross.e_add2_fdd2.value - c * c;
  const Eigen::Vector3d b(va, cross.e_w_fdd.value, cross.e_w_add_fdd.value);

  // Symmetric, so the singular values are the absolute eigenvalues.
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d sv = eig.eigenvalues().cwiseAbs();
  const double cond = sv.minCoeff() > 0.0 ? sv.maxCoeff() / sv.minCoeff() : std::numeric_limits<double>::infinity();
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(a);

  if (!lu.isInvertible() || !(cond <= kConditionLimit)) {
    HybridModel h = fit_linear(cross);
    h.kind = HybridKind::Nonlinear3;
    h.gamma = 0.0;
    h.condition_estimate = cond;
    h.fallback = true;
    return h;
  }
  const Eigen::Vector3d sol = lu.solve(b);
  HybridModel h;
  h.kind = HybridKind::Nonlinear3;
  h.s = cross.s;
  h.cross = cross;
  h.y_empty = cross.y_empty;
  h.alpha = sol(0);
  h.beta = sol(1);
  h.gamma = sol(2);
  h.condition_estimate = cond;
  return h;
}

double hybrid_variance(const HybridModel& h) {
  const auto& x = h.cross;
  const double va = x.var_add.value;
  const double vf = x.var_fdd.value;
  const double c = x.e_add_fdd.value;
  const double a = h.alpha, b = h.beta, g = h.gamma;
  switch (h.kind) {
    case HybridKind::Linear2:
      if (h.s == 1) return (2.0 * a - a * a) * va + (1.0 - a) * (1.0 - a) * vf;
      return a * a * va + b * b * vf + 2.0 * a * b * c;
    case HybridKind::LinearConstrained1:
      return a * a * va + (1.0 - a) * (1.0 - a) * vf + 2.0 * a * (1.0 - a) * c;
    case HybridKind::Nonlinear3: {
      // At S = 1, E[w~ w^] equals the ADD variance.
      const double cc = h.s == 1 ? va : c;
      return a * a * va + b * b * vf + g * g * (x.e_add2_fdd2.value - cc * cc) + 2.0 * a * b * cc +
             2.0 * a * g * x.e_add2_fdd.value + 2.0 * b * g * x.e_add_fdd2.value;
    }
  }
  return 0.0;
}

double hybrid_mse(const HybridModel& h, double exact_variance) {
  const auto& x = h.cross;
  const double projection = h.alpha * x.var_add.value + h.beta * x.e_w_fdd.value + h.gamma * x.e_w_add_fdd.value;
  return exact_variance - 2.0 * projection + hybrid_variance(h);
}

double evaluate(const HybridModel& h, const FddDecomposition& fdd, std::span<const double> x) {
  const double wt = evaluate_truncated(fdd.add(), h.s, x) - h.y_empty;
  const double wh = evaluate_truncated(fdd, h.s, x) - h.cross.fdd_mean.value;
  double v = h.y_empty + h.alpha * wt + h.beta * wh;
  if (h.kind == HybridKind::Nonlinear3) v += h.gamma * (wt * wh - h.cross.e_add_fdd.value);
  return v;
}

double evaluate(const HybridModel& h, const TruncationEvaluator& approx, const Node& node) {
  const auto a = approx(node);
  const double wt = a.add - h.y_empty;
  const double wh = a.fdd - h.cross.fdd_mean.value;
  double v = h.y_empty + h.alpha * wt + h.beta * wh;
  if (h.kind == HybridKind::Nonlinear3) v += h.gamma * (wt * wh - h.cross.e_add_fdd.value);
  return v;
}

}  // namespace dimdecomp
