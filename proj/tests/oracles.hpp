#pragma once

// Slow, independent reference computations used only by the tests. Nothing
// here calls into the library.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

/// Composite Simpson rule with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      std::size_t panels = 20000) {
  if (panels % 2) ++panels;
  const double h = (hi - lo) / static_cast<double>(panels);
  double sum = f(lo) + f(hi);
  for (std::size_t i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(lo + h * static_cast<double>(i));
  return sum * h / 3.0;
}

/// int_x^inf e^{-u} u^{s-1} du via u = x e^t.
inline double upper_gamma(double s, double x) {
  const double t_hi = std::log(std::max(80.0 + 4.0 * std::abs(s), 2.0 * s + 80.0) / x);
  return simpson([&](double t) {
    const double u = x * std::exp(t);
    return std::exp(-u + s * std::log(u));
  }, 0.0, t_hi, 200000);
}

/// Bisection for a decreasing function on [lo, hi].
inline double bisect_decreasing(const std::function<double(double)>& f, double target, double lo,
                                double hi, int iterations = 200) {
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > target) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Unit-scale gamma CDF by Simpson in t = log u.
inline double gamma_cdf(double shape, double x) {
  const double hi = std::log(x);
  const double lo = hi - 60.0 / shape;
  return simpson([&](double t) { return std::exp(shape * t - std::exp(t) - std::lgamma(shape)); },
                 lo, hi, 200000);
}

/// Raw moments by enumerating every (k_1..k_n) with sum i k_i = n:
/// m_n = sum n! prod_i (kappa_i / i!)^{k_i} / k_i!.
inline double partition_moment(const std::vector<double>& kappa, int n) {
  double total = 0.0;
  std::vector<int> k(static_cast<std::size_t>(n) + 1, 0);
  std::function<void(int, int)> rec = [&](int i, int remaining) {
    if (i > n) {
      if (remaining != 0) return;
      double term = std::tgamma(n + 1.0);
      for (int j = 1; j <= n; ++j) {
        term *= std::pow(kappa[static_cast<std::size_t>(j - 1)] / std::tgamma(j + 1.0), k[j]) /
                std::tgamma(k[j] + 1.0);
      }
      total += term;
      return;
    }
    for (int c = 0; c * i <= remaining; ++c) {
      k[static_cast<std::size_t>(i)] = c;
      rec(i + 1, remaining - c * i);
    }
    k[static_cast<std::size_t>(i)] = 0;
  };
  rec(1, n);
  return total;
}

}  // namespace oracle
