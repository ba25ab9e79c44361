#include "crm/tail_bounds.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "crm/random.hpp"

using namespace crm;

TEST(LemmaBound, Constants) {
  EXPECT_DOUBLE_EQ(lemma_inverse_bound(1.0, 1.0, 0.0, 1.0), 1.0);
  EXPECT_NEAR(detail::lemma_alpha(1.0, 0.5, 1.0), std::numbers::pi / 4.0, 1e-14);
  EXPECT_NEAR(detail::lemma_beta(1.0, 0.5), 1.0 - std::sqrt(std::numbers::pi) / 3.0, 1e-14);
  EXPECT_NEAR(detail::lemma_beta(1.0, 0.5), 0.409182, 1e-6);
}

TEST(LemmaBound, DominatesTrueInverse) {
  Stream s(10);
  for (double sigma : {0.0, 0.25, 0.5, 0.75}) {
    for (double c : {0.5, 1.0, 5.0}) {
      const auto spec = CrmSpec::stable_beta(1.3, c, sigma);
      const TailMass n(spec);
      for (int r = 0; r < 1000 / 12; ++r) {
        const double xi = std::exp(-3.0 + 12.0 * s.uniform());
        EXPECT_GE(lemma_inverse_bound(xi, c, sigma, 1.3) * (1 + 1e-12), n.inverse(xi))
            << sigma << " " << c << " " << xi;
      }
    }
  }
}

TEST(AnalyticBound, TableValues) {
  const double sigma0[3] = {1411.4, 1229.5, 589.1};
  const double sigma5[3] = {1554.5, 1250.3, 611.8};
  const std::size_t ms[3] = {25, 100, 500};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(analytic_tail_bound(ms[i], 1e-2, 1.0, 0.0, 1.0), sigma0[i], 0.1);
    EXPECT_NEAR(analytic_tail_bound(ms[i], 1e-2, 1.0, 0.5, 1.0), sigma5[i], 0.1);
  }
}

TEST(AnalyticBound, DecreasingInM) {
  for (double sigma : {0.0, 0.5}) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t m : {1u, 10u, 25u, 100u, 500u, 2000u}) {
      const double t = analytic_tail_bound(m, 1e-2, 1.0, sigma, 1.0);
      EXPECT_LT(t, prev);
      prev = t;
    }
  }
  EXPECT_THROW(analytic_tail_bound(10, 1.0, 1.0, 0.5, 1.0), InvalidArgument);
  EXPECT_THROW(analytic_tail_bound(0, 0.1, 1.0, 0.5, 1.0), InvalidArgument);
}

TEST(SharpBound, BetaProcessClosedForm) {
  // N^{-1}(q) = e^{-q} for a = c = 1, sigma = 0.
  const auto r = sharp_tail_bound(25, 1e-2, CrmSpec::beta_process(1.0, 1.0));
  double want = 0.0;
  for (std::size_t j = 26; j < 400; ++j) {
    want += std::exp(-gamma_quantile_log(static_cast<double>(j), std::log(1e-2) - (j - 25.0) * std::numbers::ln2));
  }
  EXPECT_NEAR(r.sharp_bound, want, 1e-9 * want);
}

TEST(SharpBound, BlockSummationMatchesDirectSum) {
  const auto spec = CrmSpec::stable_beta(1.0, 1.0, 0.5);
  const auto fast = sharp_tail_bound(100, 1e-2, spec, 1e-10, 256);
  const auto slow = sharp_tail_bound(100, 1e-2, spec, 1e-10, 4096);
  EXPECT_NEAR(fast.sharp_bound, slow.sharp_bound, 1e-5 * slow.sharp_bound);
}

TEST(SharpBound, BelowAnalyticBound) {
  for (double sigma : {0.0, 0.5}) {
    const auto spec = CrmSpec::stable_beta(1.0, 1.0, sigma);
    for (std::size_t m : {25u, 100u, 500u}) {
      for (double eps : {1e-1, 1e-2, 1e-3}) {
        const auto r = sharp_tail_bound(m, eps, spec);
        EXPECT_LE(r.sharp_bound, r.analytic_bound) << sigma << " " << m << " " << eps;
        EXPECT_GT(r.terms_used, 0u);
      }
    }
  }
}

TEST(SharpBound, HoldsInProbability) {
  // Fraction of simulated tail sums above the bound stays below eps + 3 SE.
  const double eps = 0.1;
  const std::size_t m = 25;
  const int reps = 4000;
  for (double sigma : {0.0, 0.5}) {
    const auto spec = CrmSpec::stable_beta(1.0, 1.0, sigma);
    const TailMass n(spec);
    const double bound = sharp_tail_bound(m, eps, spec).sharp_bound;
    const double alpha = sigma > 0.0 ? detail::lemma_alpha(1.0, sigma, 1.0) : 0.0;
    Stream s(77);
    int exceed = 0;
    for (int r = 0; r < reps; ++r) {
      double xi = 0.0;
      for (std::size_t j = 0; j < m; ++j) xi += s.exponential();
      double tail = 0.0;
      double v = 0.0;
      for (int j = 0; j < 400; ++j) {
        xi += s.exponential();
        v = n.inverse(xi, j > 0 ? std::optional<double>(v) : std::nullopt);
        tail += v;
        if (v < 1e-14) break;
      }
      if (sigma > 0.0) {
        // remaining terms: N^{-1}(x) ~ (alpha x)^{-1/sigma} at unit Poisson rate
        tail += std::pow(alpha, -1.0 / sigma) * std::pow(xi, 1.0 - 1.0 / sigma) / (1.0 / sigma - 1.0);
      }
      if (tail > bound) ++exceed;
    }
    const double frac = exceed / static_cast<double>(reps);
    EXPECT_LE(frac, eps + 3.0 * std::sqrt(eps * (1 - eps) / reps)) << sigma;
  }
}
