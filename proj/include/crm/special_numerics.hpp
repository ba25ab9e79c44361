#pragma once

// Numerical kernels shared by the rest of the library: adaptive
// Gauss-Kronrod quadrature, incomplete gamma functions valid for
// non-positive shapes, the stable-beta tail integral, gamma quantiles and
// monotone inversion.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "crm/errors.hpp"

namespace crm {

struct QuadratureSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_subdivisions = 200;

  void validate() const {
    require(rel_tol > 0.0 && abs_tol > 0.0, "quadrature tolerances must be positive");
    require(max_subdivisions >= 1, "max_subdivisions must be at least 1");
  }
};

struct RootSettings {
  double rel_tol = 1e-12;
  int max_iter = 200;

  void validate() const {
    require(rel_tol > 0.0, "root rel_tol must be positive");
    require(max_iter >= 1, "root max_iter must be at least 1");
  }
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int subdivisions = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod rule with embedded 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208640166423, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double lo, hi, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment kronrod21(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = kKronrodWeights[10] * fc;
  double gauss = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kKronrodWeights[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1 + f2);
  }
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod)) {
    throw NumericError("quadrature: non-finite integrand on [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  }
  return {lo, hi, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (21-point) quadrature over a finite interval.
/// Never throws on non-convergence; inspect `converged`.
template <class F>
QuadratureResult integrate_detailed(F&& f, double lo, double hi,
                                    const QuadratureSettings& settings = {}) {
  settings.validate();
  if (lo == hi) return {0.0, 0.0, 0, true};
  if (lo > hi) {
    auto r = integrate_detailed(f, hi, lo, settings);
    r.value = -r.value;
    return r;
  }
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::kronrod21(f, lo, hi));
  double total = heap.top().value;
  double error = heap.top().error;
  int subdivisions = 1;
  while (error > std::max(settings.abs_tol, settings.rel_tol * std::abs(total)) &&
         subdivisions < settings.max_subdivisions) {
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (mid <= worst.lo || mid >= worst.hi) {  // interval exhausted at machine precision
      heap.push(worst);
      break;
    }
    const auto left = detail::kronrod21(f, worst.lo, mid);
    const auto right = detail::kronrod21(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
    // Recompute the error sum to avoid drift from repeated subtraction.
    error = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
      error += copy.top().error;
      copy.pop();
    }
  }
  const bool converged = error <= std::max(settings.abs_tol, settings.rel_tol * std::abs(total));
  return {total, error, subdivisions, converged};
}

/// Adaptive quadrature over [lo, hi]; throws NumericError if the tolerance is
/// not reached within `max_subdivisions`.
template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureSettings& settings = {}) {
  const auto r = integrate_detailed(f, lo, hi, settings);
  if (!r.converged) {
    throw NumericError("quadrature did not converge (estimate " + std::to_string(r.value) +
                       ", error " + std::to_string(r.abs_error) + ")");
  }
  return r.value;
}

/// Integral over [lo, inf) via the map x = lo + t / (1 - t).
template <class F>
double integrate_to_infinity(F&& f, double lo, const QuadratureSettings& settings = {}) {
  auto mapped = [&](double t) {
    const double one_minus = 1.0 - t;
    const double x = lo + t / one_minus;
    const double fx = f(x);
    return fx == 0.0 ? 0.0 : fx / (one_minus * one_minus);
  };
  return integrate(mapped, 0.0, 1.0, settings);
}

// ---------------------------------------------------------------------------
// Factorials

/// x (x + 1) ... (x + k - 1); equals 1 for k = 0.
inline double ascending_factorial(double x, std::size_t k) {
  double result = 1.0;
  for (std::size_t i = 0; i < k; ++i) result *= x + static_cast<double>(i);
  return result;
}

/// log of the ascending factorial for x > 0, safe for large k.
inline double log_ascending_factorial(double x, std::size_t k) {
  require(x > 0.0, "log_ascending_factorial requires x > 0");
  return std::lgamma(x + static_cast<double>(k)) - std::lgamma(x);
}

// ---------------------------------------------------------------------------
// Incomplete gamma

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// sum_{n >= 0} x^n / ((s + 1)(s + 2)...(s + n)), s > 0.
inline double lower_gamma_series_sum(double s, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (s + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) return sum;
  }
  throw NumericError("incomplete gamma series failed to converge");
}

// log Gamma(s, x) by the Legendre continued fraction (modified Lentz).
// Valid for every real s once x is moderately large; used for x >= 1 when
// s <= 0 and for x >= s + 1 otherwise.
inline double log_upper_gamma_cf(double s, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) return -x + s * std::log(x) + std::log(h);
  }
  throw NumericError("incomplete gamma continued fraction failed to converge");
}

// Exponential integral E1(x) = Gamma(0, x) for 0 < x < 1 by its power series.
inline double exponential_integral_series(double x) {
  double sum = 0.0;
  double term = 1.0;
  for (int k = 1; k < 1000; ++k) {
    term *= -x / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return -kEulerGamma - std::log(x) - sum;
}

// Gamma(s, x) for s in (0, 1] and 0 < x < 1 via
// Gamma(s, x) = (Gamma(1+s) - 1)/s - expm1(s log x)/s - sum_{n>=1} (-1)^n x^{s+n} / (n! (s+n)),
// which avoids the cancellation in Gamma(s) - gamma(s, x) for small s.
inline double upper_gamma_small_x(double s, double x) {
  const double log_x = std::log(x);
  const double head = (std::tgamma(1.0 + s) - 1.0) / s - std::expm1(s * log_x) / s;
  const double xs = std::exp(s * log_x);
  double sum = 0.0;
  double power = 1.0;  // (-1)^n x^n / n!
  for (int n = 1; n < 1000; ++n) {
    power *= -x / n;
    const double add = power / (s + n);
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return head - xs * sum;
}

inline bool is_nonpositive_integer(double s) { return s <= 0.0 && std::floor(s) == s; }

}  // namespace detail

/// Upper incomplete gamma integral Gamma(shape, x) = int_x^inf e^{-u} u^{shape-1} du.
/// Defined for every real shape when x > 0; non-positive shapes are reduced to
/// a shape in (0, 1] (or to E1 for integers) by the upward recurrence
/// Gamma(s, x) = (Gamma(s+1, x) - x^s e^{-x}) / s.
inline double upper_incomplete_gamma(double shape, double x) {
  require(std::isfinite(shape), "upper_incomplete_gamma: shape must be finite");
  require(x > 0.0 && std::isfinite(x), "upper_incomplete_gamma: x must be positive and finite");

  double value;
  if (shape > 0.0) {
    if (x >= shape + 1.0) {
      value = std::exp(detail::log_upper_gamma_cf(shape, x));
    } else if (shape <= 1.0 && x < 1.0) {
      value = detail::upper_gamma_small_x(shape, x);
    } else {
      const double log_p = shape * std::log(x) - x - std::lgamma(shape + 1.0) +
                           std::log(detail::lower_gamma_series_sum(shape, x));
      value = std::exp(std::lgamma(shape) + std::log1p(-std::exp(log_p)));
    }
  } else if (x >= 1.0) {
    value = std::exp(detail::log_upper_gamma_cf(shape, x));
  } else {
    double current;
    double s;
    if (detail::is_nonpositive_integer(shape)) {
      s = 0.0;
      current = detail::exponential_integral_series(x);
    } else {
      s = shape - std::floor(shape);  // in (0, 1)
      current = detail::upper_gamma_small_x(s, x);
    }
    const double log_x = std::log(x);
    while (s > shape) {
      s -= 1.0;
      current = (current - std::exp(s * log_x - x)) / s;
    }
    value = current;
  }
  if (!std::isfinite(value) || value < 0.0) {
    throw NumericError("upper_incomplete_gamma overflow at shape=" + std::to_string(shape) +
                       ", x=" + std::to_string(x));
  }
  return value;
}

/// log P(shape, x), the log of the regularized lower incomplete gamma; shape > 0.
inline double log_regularized_lower_gamma(double shape, double x) {
  require(shape > 0.0, "regularized gamma requires shape > 0");
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  if (x < shape + 1.0) {
    return shape * std::log(x) - x - std::lgamma(shape + 1.0) +
           std::log(detail::lower_gamma_series_sum(shape, x));
  }
  const double log_q = detail::log_upper_gamma_cf(shape, x) - std::lgamma(shape);
  return std::log1p(-std::exp(log_q));
}

/// Regularized lower incomplete gamma P(shape, x), i.e. the unit-scale gamma CDF.
inline double regularized_lower_gamma(double shape, double x) {
  return std::exp(log_regularized_lower_gamma(shape, x));
}

/// log of the unit-scale gamma density.
inline double log_gamma_density(double shape, double x) {
  return (shape - 1.0) * std::log(x) - x - std::lgamma(shape);
}

namespace detail {

// Abramowitz & Stegun 26.2.23, |error| < 4.5e-4; used only as a starting
// point. Takes log p so that levels below the smallest double are usable.
inline double rough_normal_quantile_log(double log_p) {
  const bool lower = log_p < std::log(0.5);
  const double log_q = lower ? log_p : std::log1p(-std::exp(log_p));
  const double t = std::sqrt(-2.0 * log_q);
  const double z = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                           (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
  return lower ? -z : z;
}

}  // namespace detail

/// Quantile of the unit-scale gamma distribution given log p: q with
/// log P(shape, q) = log_p. Wilson-Hilferty start, then Newton on log P
/// safeguarded by a bracket.
inline double gamma_quantile_log(double shape, double log_p, const RootSettings& settings = {}) {
  settings.validate();
  require(shape > 0.0 && std::isfinite(shape), "gamma_quantile: shape must be positive");
  require(log_p < 0.0 && std::isfinite(log_p), "gamma_quantile: p must lie in (0, 1)");

  double x;
  {
    const double z = detail::rough_normal_quantile_log(log_p);
    const double h = 1.0 / (9.0 * shape);
    const double cube = 1.0 - h + z * std::sqrt(h);
    // Left-tail approximation P(shape, x) ~ x^shape / Gamma(shape + 1).
    const double small_x = std::exp((log_p + std::lgamma(shape + 1.0)) / shape);
    x = cube > 0.0 ? shape * cube * cube * cube : small_x;
    if (!(x > 0.0) || !std::isfinite(x)) x = small_x;
  }

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < settings.max_iter; ++iter) {
    const double log_cdf = log_regularized_lower_gamma(shape, x);
    const double f = log_cdf - log_p;
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;
    // d/dx log P = density / P
    const double slope = std::exp(log_gamma_density(shape, x) - log_cdf);
    double next = x - f / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) {
      if (std::isinf(hi)) next = 2.0 * x;
      else if (lo == 0.0) next = 0.5 * hi;
      else next = std::sqrt(lo * hi);
    }
    if (std::abs(next - x) <= settings.rel_tol * x) return next;
    x = next;
  }
  throw NumericError("gamma_quantile did not converge for shape=" + std::to_string(shape) +
                     ", log p=" + std::to_string(log_p));
}

/// Quantile of the unit-scale gamma distribution: q with P(shape, q) = p.
inline double gamma_quantile(double shape, double p, const RootSettings& settings = {}) {
  require(p > 0.0 && p < 1.0, "gamma_quantile: p must lie in (0, 1)");
  return gamma_quantile_log(shape, std::log(p), settings);
}

// ---------------------------------------------------------------------------
// Stable-beta tail integral

/// Evaluates I(v) = int_v^1 u^{-sigma-1} (1-u)^{c+sigma-1} du for a fixed
/// (sigma, c). The pieces that do not depend on v are computed once, so
/// repeated evaluation (as in jump inversion) costs a short power series.
///
/// Layout: [v, delta] by the binomial series of (1-u)^{c+sigma-1};
/// [delta, 1/2] by quadrature; [1/2, 1] by quadrature after the substitution
/// 1 - u = s^{1/(c+sigma)} that removes the endpoint singularity.
class SbpTailIntegral {
 public:
  SbpTailIntegral(double sigma, double c, const QuadratureSettings& settings = {})
      : sigma_(sigma), c_(c), settings_(settings) {
    require(sigma >= 0.0 && sigma < 1.0, "stable-beta sigma must lie in [0, 1)");
    require(c > -sigma, "stable-beta concentration must satisfy c > -sigma");
    settings_.validate();
    beta_exp_ = c + sigma - 1.0;
    delta_ = std::min(0.5, 0.5 / (std::abs(beta_exp_) + 1.0));
    upper_half_ = upper_part(0.5);
    middle_ = delta_ < 0.5 ? lower_quadrature(delta_, 0.5) : 0.0;
  }

  double operator()(double v) const {
    require(v > 0.0 && v < 1.0, "sbp_tail_integral: v must lie in (0, 1)");
    if (v >= 0.5) return upper_part(v);
    if (v >= delta_) return lower_quadrature(v, 0.5) + upper_half_;
    return series(v) + middle_ + upper_half_;
  }

  double sigma() const { return sigma_; }
  double c() const { return c_; }

 private:
  double integrand(double u) const {
    return std::exp(-(sigma_ + 1.0) * std::log(u) + beta_exp_ * std::log1p(-u));
  }

  // int_v^1 for v >= 1/2 with 1 - u = (1 - v) r^{1/(c+sigma)}, r in (0, 1]. The
  // integrand stays O(1) however small the tail, so the tolerance is relative.
  double upper_part(double v) const {
    const double kappa = c_ + sigma_;
    const double w = 1.0 - v;
    auto f = [&](double r) { return std::pow(1.0 - w * std::pow(r, 1.0 / kappa), -sigma_ - 1.0); };
    return std::pow(w, kappa) * integrate(f, 0.0, 1.0, settings_) / kappa;
  }

  double lower_quadrature(double lo, double hi) const {
    return integrate([&](double u) { return integrand(u); }, lo, hi, settings_);
  }

  // int_v^delta u^{-sigma-1} sum_k b_k u^k du with b_k the binomial coefficients of (1-u)^beta.
  double series(double v) const {
    const double log_ratio = std::log(v / delta_);  // < 0
    // k = 0 term: (delta^{-sigma} - v^{-sigma}) / (-sigma), or log(delta / v) at sigma = 0.
    double sum = sigma_ == 0.0
                     ? -log_ratio
                     : std::pow(delta_, -sigma_) * std::expm1(-sigma_ * log_ratio) / sigma_;
    double coeff = 1.0;
    double delta_pow = std::pow(delta_, -sigma_);
    double v_pow = std::pow(v, -sigma_);
    for (int k = 1; k < 5000; ++k) {
      coeff *= (k - 1 - beta_exp_) / k;
      delta_pow *= delta_;
      v_pow *= v;
      if (coeff == 0.0) break;  // integer exponent: polynomial terminates
      const double p = k - sigma_;
      const double add = coeff * (delta_pow - v_pow) / p;
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }

  double sigma_;
  double c_;
  QuadratureSettings settings_;
  double beta_exp_ = 0.0;
  double delta_ = 0.5;
  double upper_half_ = 0.0;
  double middle_ = 0.0;
};

/// One-shot form of SbpTailIntegral.
inline double sbp_tail_integral(double v, double sigma, double c,
                                const QuadratureSettings& settings = {}) {
  require(v > 0.0 && v < 1.0, "sbp_tail_integral: v must lie in (0, 1)");
  return SbpTailIntegral(sigma, c, settings)(v);
}

// ---------------------------------------------------------------------------
// Monotone inversion

struct BracketHint {
  std::optional<double> lower;
  std::optional<double> upper;
};

namespace detail {

// Brent's zeroin on a decreasing g with g(a) >= 0 >= g(b).
template <class G>
double brent_zero(G& g, double a, double b, double fa, double fb, double xtol, int max_iter) {
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0 && fc > 0) || (fb < 0 && fc < 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0 ? tol : -tol);
    fb = g(b);
  }
  throw NumericError("root finding did not converge");
}

}  // namespace detail

/// Solves f(v) = target for a continuous, strictly decreasing f on (0, upper).
///
/// The search runs in t = log v (or the logit of v / upper when upper is
/// finite): the hint is widened geometrically until it brackets the root, then
/// Brent's method refines it. Returns 0 when the root lies below the smallest
/// positive double, and the largest double below `upper` when it lies above.
template <class F>
double invert_monotone_decreasing(F&& f, double target, BracketHint hint = {},
                                  const RootSettings& settings = {},
                                  double upper = std::numeric_limits<double>::infinity()) {
  settings.validate();
  require(target > 0.0 && std::isfinite(target), "inversion target must be positive and finite");
  require(upper > 0.0, "inversion domain upper bound must be positive");
  const bool bounded = std::isfinite(upper);

  auto to_v = [&](double t) {
    return bounded ? upper / (1.0 + std::exp(-t)) : std::exp(t);
  };
  auto to_t = [&](double v) { return bounded ? std::log(v / (upper - v)) : std::log(v); };
  auto g = [&](double t) { return f(to_v(t)) - target; };

  constexpr double kMinT = -745.0;  // exp(-745) is the smallest subnormal
  const double max_t = bounded ? 745.0 : 709.0;

  double t_hi, g_hi;
  if (hint.upper && *hint.upper > 0.0 && (!bounded || *hint.upper < upper)) {
    t_hi = to_t(*hint.upper);
  } else {
    t_hi = 0.0;  // v = 1, or upper / 2 on a bounded domain
  }
  g_hi = g(t_hi);
  double step = 1.0;
  int expansions = 0;
  double t_lo = t_hi, g_lo = g_hi;
  while (g_hi > 0.0) {  // root lies to the right
    t_lo = t_hi;
    g_lo = g_hi;
    t_hi = std::min(t_hi + step, max_t);
    step *= 2.0;
    const double v = to_v(t_hi);
    if (bounded && v >= upper) return std::nextafter(upper, 0.0);
    g_hi = g(t_hi);
    if (++expansions > settings.max_iter || (t_hi >= max_t && g_hi > 0.0)) {
      if (bounded) return std::nextafter(upper, 0.0);
      throw NumericError("inversion: could not bracket the root from above");
    }
  }
  if (t_lo == t_hi) {
    if (hint.lower && *hint.lower > 0.0) {
      t_lo = to_t(*hint.lower);
      g_lo = g(t_lo);
    } else {
      t_lo = t_hi;
      g_lo = g_hi;
    }
    step = 1.0;
    while (g_lo < 0.0) {  // root lies to the left
      t_hi = t_lo;
      g_hi = g_lo;
      t_lo = std::max(t_lo - step, kMinT);
      step *= 2.0;
      const double v = to_v(t_lo);
      if (v <= 0.0) return 0.0;
      g_lo = g(t_lo);
      if (g_lo < 0.0 && t_lo <= kMinT) return 0.0;
      if (++expansions > settings.max_iter) {
        throw NumericError("inversion: could not bracket the root from below");
      }
    }
  }
  if (g_lo == 0.0) return to_v(t_lo);
  if (g_hi == 0.0) return to_v(t_hi);
  const double xtol = 0.01 * settings.rel_tol;
  const double t = detail::brent_zero(g, t_lo, t_hi, g_lo, g_hi, xtol, settings.max_iter);
  return to_v(t);
}

}  // namespace crm
