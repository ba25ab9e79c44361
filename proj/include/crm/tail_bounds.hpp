#pragma once

// Probability bounds on the stable-beta tail sum T_M = sum_{j>M} J_j.
//
// With xi_j the Poisson arrival times, xi_j ~ gamma(j, 1), and the event
// {xi_j > q_j for all j > M} where q_j is the eps 2^{M-j} quantile has
// probability at least 1 - eps. On it T_M <= sum_{j>M} N^{-1}(q_j). The
// analytic bound replaces N^{-1} by the closed-form majorant of the lemma and
// q_j by a lower bound; the sharp bound evaluates both exactly.

#include <cmath>
#include <limits>
#include <numbers>

#include "crm/errors.hpp"
#include "crm/levy_core.hpp"
#include "crm/special_numerics.hpp"

namespace crm {

struct TailBoundResult {
  std::size_t m = 0;
  double epsilon = 0.0;
  double analytic_bound = 0.0;
  double sharp_bound = 0.0;
  std::size_t terms_used = 0;
};

namespace detail {

inline void check_sbp_params(double c, double sigma, double a) {
  require(a > 0.0, "total mass a must be positive");
  require(sigma >= 0.0 && sigma < 1.0, "sigma must lie in [0, 1)");
  require(c > -sigma, "concentration must satisfy c > -sigma");
}

// alpha = sigma Gamma(1-sigma) Gamma(c+sigma) / (a Gamma(c+1))
inline double lemma_alpha(double c, double sigma, double a) {
  return sigma * std::exp(std::lgamma(1.0 - sigma) + std::lgamma(c + sigma) - std::lgamma(c + 1.0)) / a;
}

// beta = 1 - sigma Gamma(1-sigma) / (c+sigma)
inline double lemma_beta(double c, double sigma) {
  return 1.0 - sigma * std::tgamma(1.0 - sigma) / (c + sigma);
}

}  // namespace detail

/// Upper bound on N^{-1}(xi) for the stable-beta process:
/// exp((1 - xi/a)/c) when sigma = 0, (alpha xi + beta)^{-1/sigma} otherwise.
/// beta turns negative when c + sigma < sigma Gamma(1-sigma); for xi <= -beta/alpha
/// the bound is vacuous and +infinity is returned.
inline double lemma_inverse_bound(double xi, double c, double sigma, double a) {
  detail::check_sbp_params(c, sigma, a);
  require(xi > 0.0, "xi must be positive");
  if (sigma == 0.0) return std::exp((1.0 - xi / a) / c);
  const double alpha = detail::lemma_alpha(c, sigma, a);
  const double beta = detail::lemma_beta(c, sigma);
  const double base = alpha * xi + beta;
  if (base <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(base, -1.0 / sigma);
}

/// t_M^eps with P(T_M <= t) >= 1 - eps.
///   sigma = 0: (C1/eps) exp(1/c - eps M / C1),   C1 = 2 a c e
///   sigma > 0: sigma/(1-sigma) (C2/eps)^{1/sigma} / (M + beta C2/eps)^{1/sigma - 1},  C2 = 2e/alpha
inline double analytic_tail_bound(std::size_t m, double epsilon, double c, double sigma, double a) {
  detail::check_sbp_params(c, sigma, a);
  require(m >= 1, "M must be at least 1");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  const double e = std::numbers::e;
  const double mm = static_cast<double>(m);
  if (sigma == 0.0) {
    const double c1 = 2.0 * a * c * e;
    return c1 / epsilon * std::exp(1.0 / c - epsilon * mm / c1);
  }
  const double alpha = detail::lemma_alpha(c, sigma, a);
  const double beta = detail::lemma_beta(c, sigma);
  const double c2 = 2.0 * e / alpha;
  return sigma / (1.0 - sigma) * std::pow(c2 / epsilon, 1.0 / sigma) /
         std::pow(mm + beta * c2 / epsilon, 1.0 / sigma - 1.0);
}

/// t~_M^eps = sum_{j>M} N^{-1}(q_j), q_j the eps 2^{M-j} quantile of gamma(j, 1).
///
/// The first `exact_terms` terms are added one by one. For sigma > 0 the terms
/// decay only like j^{-1/sigma}, so beyond that point the sum over each block
/// [J, 2J] is evaluated as a smooth function of j (Simpson plus the
/// Euler-Maclaurin endpoint correction). Summation stops once a term, or a
/// block, contributes at most term_tol of the running total.
inline TailBoundResult sharp_tail_bound(std::size_t m, double epsilon, const CrmSpec& spec,
                                        double term_tol = 1e-10, std::size_t exact_terms = 4096) {
  require(spec.is_stable_beta(), "tail bounds are implemented for the stable-beta process");
  require(m >= 1, "M must be at least 1");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  require(term_tol > 0.0, "term tolerance must be positive");
  const TailMass tail(spec);
  TailBoundResult r{m, epsilon, analytic_tail_bound(m, epsilon, spec.c(), spec.sigma(), spec.a()), 0.0, 0};
  const double log_eps = std::log(epsilon);
  const double mm = static_cast<double>(m);
  double prev_jump = 0.0;
  auto term_at = [&](double j) {
    const double q = gamma_quantile_log(j, log_eps - (j - mm) * std::numbers::ln2);
    ++r.terms_used;
    const double v = tail.inverse(q, prev_jump > 0.0 ? std::optional<double>(prev_jump) : std::nullopt);
    if (v > 0.0) prev_jump = v;
    return v;
  };

  double last = 0.0;
  for (std::size_t j = m + 1; j <= m + exact_terms; ++j) {
    last = term_at(static_cast<double>(j));
    r.sharp_bound += last;
    if (last <= 0.0 || last <= term_tol * r.sharp_bound) return r;
  }

  // sum_{j=a+1}^{b} f(j) ~ int_a^b f + (f(b) - f(a)) / 2
  constexpr int kPanels = 64;
  double a = mm + static_cast<double>(exact_terms);
  double fa = last;
  for (int block = 0; block < 200; ++block) {
    const double b = 2.0 * a;
    const double h = (b - a) / kPanels;
    double simpson = fa;
    double fb = 0.0;
    prev_jump = 0.0;  // nodes are visited left to right, so the hint stays valid
    for (int i = 1; i <= kPanels; ++i) {
      const double f = term_at(a + h * i);
      if (i == kPanels) fb = f;
      simpson += (i == kPanels ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f;
    }
    const double block_sum = simpson * h / 3.0 + 0.5 * (fb - fa);
    r.sharp_bound += block_sum;
    if (block_sum <= term_tol * r.sharp_bound) break;
    a = b;
    fa = fb;
  }
  return r;
}

}  // namespace crm
