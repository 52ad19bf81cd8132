#include "dimdecomp/input_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>

#include "dimdecomp/error.hpp"
#include "dimdecomp/rng.hpp"

namespace dimdecomp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void validate(const MarginalDistribution::Kind& kind) {
  std::visit(Overloaded{
                 [](const Uniform& u) {
                   if (!(std::isfinite(u.a) && std::isfinite(u.b) && u.b > u.a))
                     throw InvalidArgument("uniform marginal requires finite a < b");
                 },
                 [](const Normal& n) {
                   if (!(std::isfinite(n.mean) && std::isfinite(n.stddev) && n.stddev > 0.0))
                     throw InvalidArgument("normal marginal requires stddev > 0");
                 },
                 [](const Lognormal& l) {
                   if (!(std::isfinite(l.log_mean) && std::isfinite(l.log_stddev) && l.log_stddev > 0.0))
                     throw InvalidArgument("lognormal marginal requires log_stddev > 0");
                 },
             },
             kind);
}

const boost::math::normal& std_normal() {
  static const boost::math::normal dist(0.0, 1.0);
  return dist;
}

// Three-term recurrence coefficients of the orthonormal polynomials of the
// reference measure: p_{k+1} = ((t - alpha_k) p_k - b_k p_{k-1}) / b_{k+1}.
struct Recurrence {
  std::vector<double> alpha;
  std::vector<double> b;  // b[k] = sqrt(beta_k), b[0] unused
};

Recurrence legendre_recurrence(int n) {
  Recurrence r{std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
  for (int k = 1; k <= n; ++k) {
    const double kk = k;
    r.b[k] = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  return r;
}

Recurrence hermite_recurrence(int n) {
  Recurrence r{std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
  for (int k = 1; k <= n; ++k) r.b[k] = std::sqrt(static_cast<double>(k));
  return r;
}

// Orthonormal p_0..p_{n-1} at t plus p_n and its derivative (for Newton).
struct PolyEval {
  double sum_sq = 0.0;
  double pn = 0.0;
  double dpn = 0.0;
};

PolyEval evaluate_orthonormal(const Recurrence& r, int n, double t) {
  PolyEval out;
  double p_prev = 0.0;
  double p = 1.0;
  double dp_prev = 0.0;
  double dp = 0.0;
  for (int k = 0; k < n; ++k) {
    out.sum_sq += p * p;
    const double b_prev = k > 0 ? r.b[k] : 0.0;
    const double p_next = ((t - r.alpha[k]) * p - b_prev * p_prev) / r.b[k + 1];
    const double dp_next = (p + (t - r.alpha[k]) * dp - b_prev * dp_prev) / r.b[k + 1];
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
  }
  out.pn = p;
  out.dpn = dp;
  return out;
}

// Golub-Welsch for initial nodes, then Newton polish and Christoffel weights.
QuadratureRule1D reference_rule(const Recurrence& r, int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    jacobi(k, k) = r.alpha[k];
    if (k + 1 < n) {
      jacobi(k, k + 1) = r.b[k + 1];
      jacobi(k + 1, k) = r.b[k + 1];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) throw InvalidArgument("Gauss rule eigenproblem failed");

  QuadratureRule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = solver.eigenvalues()(i);
    for (int iter = 0; iter < 3; ++iter) {
      const auto e = evaluate_orthonormal(r, n, t);
      if (e.dpn == 0.0) break;
      const double step = e.pn / e.dpn;
      t -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(t))) break;
    }
    rule.nodes[i] = t;
    rule.weights[i] = 1.0 / evaluate_orthonormal(r, n, t).sum_sq;
  }
  // Symmetric reference measures: enforce exact symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

Lognormal Lognormal::from_mean_cov(double mean, double cov) {
  if (!(mean > 0.0 && cov > 0.0)) throw InvalidArgument("lognormal mean and cov must be positive");
  const double s2 = std::log1p(cov * cov);
  return Lognormal{std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

MarginalDistribution::MarginalDistribution(Kind kind) : kind_(kind) { validate(kind_); }

std::string MarginalDistribution::name() const {
  return std::visit(Overloaded{[](const Uniform&) { return std::string("uniform"); },
                               [](const Normal&) { return std::string("normal"); },
                               [](const Lognormal&) { return std::string("lognormal"); }},
                    kind_);
}

double MarginalDistribution::mean() const { return raw_moment(1); }

double MarginalDistribution::variance() const {
  return std::visit(Overloaded{[](const Uniform& u) { return (u.b - u.a) * (u.b - u.a) / 12.0; },
                               [](const Normal& n) { return n.stddev * n.stddev; },
                               [](const Lognormal& l) {
                                 const double s2 = l.log_stddev * l.log_stddev;
                                 return std::expm1(s2) * std::exp(2.0 * l.log_mean + s2);
                               }},
                    kind_);
}

double MarginalDistribution::raw_moment(int k) const {
  if (k < 0 || k > 4) throw InvalidArgument("raw moments are exposed up to order 4");
  return std::visit(Overloaded{[k](const Uniform& u) {
                                 // (b^{k+1} - a^{k+1}) / ((k+1)(b-a)), expanded to avoid cancellation.
                                 double sum = 0.0;
                                 for (int j = 0; j <= k; ++j) sum += std::pow(u.a, j) * std::pow(u.b, k - j);
                                 return sum / (k + 1);
                               },
                               [k](const Normal& n) {
                                 const double m = n.mean;
                                 const double s2 = n.stddev * n.stddev;
                                 switch (k) {
                                   case 0: return 1.0;
                                   case 1: return m;
                                   case 2: return m * m + s2;
                                   case 3: return m * m * m + 3.0 * m * s2;
                                   default: return m * m * m * m + 6.0 * m * m * s2 + 3.0 * s2 * s2;
                                 }
                               },
                               [k](const Lognormal& l) {
                                 const double kk = k;
                                 return std::exp(kk * l.log_mean + 0.5 * kk * kk * l.log_stddev * l.log_stddev);
                               }},
                    kind_);
}

double MarginalDistribution::density(double x) const {
  return std::visit(Overloaded{[x](const Uniform& u) { return (x >= u.a && x <= u.b) ? 1.0 / (u.b - u.a) : 0.0; },
                               [x](const Normal& n) {
                                 return boost::math::pdf(std_normal(), (x - n.mean) / n.stddev) / n.stddev;
                               },
                               [x](const Lognormal& l) {
                                 if (x <= 0.0) return 0.0;
                                 return boost::math::pdf(std_normal(), (std::log(x) - l.log_mean) / l.log_stddev) /
                                        (l.log_stddev * x);
                               }},
                    kind_);
}

double MarginalDistribution::cdf(double x) const {
  return std::visit(Overloaded{[x](const Uniform& u) { return std::clamp((x - u.a) / (u.b - u.a), 0.0, 1.0); },
                               [x](const Normal& n) { return boost::math::cdf(std_normal(), (x - n.mean) / n.stddev); },
                               [x](const Lognormal& l) {
                                 if (x <= 0.0) return 0.0;
                                 return boost::math::cdf(std_normal(), (std::log(x) - l.log_mean) / l.log_stddev);
                               }},
                    kind_);
}

double MarginalDistribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return lower();
    if (p == 1.0) return upper();
    throw InvalidArgument("quantile requires p in [0,1]");
  }
  return std::visit(Overloaded{[p](const Uniform& u) { return u.a + p * (u.b - u.a); },
                               [p](const Normal& n) { return n.mean + n.stddev * boost::math::quantile(std_normal(), p); },
                               [p](const Lognormal& l) {
                                 return std::exp(l.log_mean + l.log_stddev * boost::math::quantile(std_normal(), p));
                               }},
                    kind_);
}

double MarginalDistribution::lower() const {
  return std::visit(Overloaded{[](const Uniform& u) { return u.a; },
                               [](const Normal&) { return -std::numeric_limits<double>::infinity(); },
                               [](const Lognormal&) { return 0.0; }},
                    kind_);
}

double MarginalDistribution::upper() const {
  return std::visit(Overloaded{[](const Uniform& u) { return u.b; },
                               [](const auto&) { return std::numeric_limits<double>::infinity(); }},
                    kind_);
}

RawMoments marginal_moments(const MarginalDistribution& marginal) {
  return {marginal.mean(), marginal.variance(), marginal.raw_moment(3), marginal.raw_moment(4)};
}

InputModel::InputModel(std::vector<MarginalDistribution> marginals) : marginals_(std::move(marginals)) {
  if (marginals_.empty()) throw InvalidArgument("input model needs at least one marginal");
  if (marginals_.size() > 64) throw InvalidArgument("input model supports at most 64 coordinates");
}

InputModel InputModel::iid(const MarginalDistribution& marginal, std::size_t n) {
  return InputModel(std::vector<MarginalDistribution>(n, marginal));
}

QuadratureRule1D gauss_rule(const MarginalDistribution& marginal, int n) {
  if (n < 1 || n > kMaxGaussPoints)
    throw InvalidArgument("Gauss rule size must be in [1, 64], got " + std::to_string(n));
  return std::visit(Overloaded{[n](const Uniform& u) {
                                 auto rule = reference_rule(legendre_recurrence(n), n);
                                 for (double& x : rule.nodes) x = u.a + 0.5 * (x + 1.0) * (u.b - u.a);
                                 return rule;
                               },
                               [n](const Normal& d) {
                                 auto rule = reference_rule(hermite_recurrence(n), n);
                                 for (double& x : rule.nodes) x = d.mean + d.stddev * x;
                                 return rule;
                               },
                               [n](const Lognormal& l) {
                                 auto rule = reference_rule(hermite_recurrence(n), n);
                                 for (double& x : rule.nodes) x = std::exp(l.log_mean + l.log_stddev * x);
                                 return rule;
                               }},
                    marginal.kind());
}

void sample_row(const InputModel& model, std::uint64_t seed, std::uint64_t row, std::span<double> x) {
  const std::size_t n = model.dimension();
  if (x.size() != n) throw InvalidArgument("sample_row: output length mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint64_t counter = 2 * row;
    const double u1 = rng::uniform01(seed, j, counter);
    std::visit(Overloaded{[&](const Uniform& u) { x[j] = u.a + u1 * (u.b - u.a); },
                          [&](const Normal& d) {
                            const double u2 = rng::uniform01(seed, j, counter + 1);
                            x[j] = d.mean + d.stddev * std::sqrt(-2.0 * std::log(u1)) *
                                                std::cos(2.0 * std::numbers::pi * u2);
                          },
                          [&](const Lognormal& l) {
                            const double u2 = rng::uniform01(seed, j, counter + 1);
                            x[j] = std::exp(l.log_mean + l.log_stddev * std::sqrt(-2.0 * std::log(u1)) *
                                                             std::cos(2.0 * std::numbers::pi * u2));
                          }},
               model[j].kind());
  }
}

SampleMatrix sample(const InputModel& model, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("sample count must be positive");
  SampleMatrix out{count, model.dimension(), std::vector<double>(count * model.dimension())};
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(count); ++r) {
    sample_row(model, seed, static_cast<std::uint64_t>(r),
               std::span<double>(out.values.data() + r * out.cols, out.cols));
  }
  return out;
}

}  // namespace dimdecomp
