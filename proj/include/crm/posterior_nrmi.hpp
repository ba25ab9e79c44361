#pragma once

// Posterior of a normalized generalized gamma process given n observations
// with k distinct values. Conditionally on the latent U = u the CRM part is a
// generalized gamma process tilted to theta + u, and each distinct value
// carries a fixed jump with law gamma(n_j - gamma, rate theta + u).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "crm/errors.hpp"
#include "crm/levy_core.hpp"
#include "crm/random.hpp"
#include "crm/special_numerics.hpp"

namespace crm {

/// Sample size n, number of distinct values k and (optionally) their
/// frequencies. k may be fractional when only the (n, k) formulas are used.
struct DataSummary {
  std::size_t n = 0;
  double k = 0.0;
  std::vector<std::size_t> freqs;

  static DataSummary from_counts(std::size_t n, double k) {
    DataSummary d{n, k, {}};
    d.validate();
    return d;
  }
  static DataSummary from_freqs(std::vector<std::size_t> freqs) {
    DataSummary d{std::accumulate(freqs.begin(), freqs.end(), std::size_t{0}),
                  static_cast<double>(freqs.size()), std::move(freqs)};
    d.validate();
    return d;
  }

  void validate() const {
    require(n >= 1, "sample size must be at least 1");
    require(k >= 1.0 && k <= static_cast<double>(n), "need 1 <= k <= n");
    if (!freqs.empty()) {
      require(static_cast<double>(freqs.size()) == k, "k must equal the number of frequencies");
      require(std::accumulate(freqs.begin(), freqs.end(), std::size_t{0}) == n,
              "frequencies must sum to n");
      for (auto f : freqs) require(f >= 1, "frequencies must be positive");
    }
  }
};

/// A positive random variable known through an unnormalized log density,
/// tabulated on a log-spaced grid and sampled by exact inversion of the
/// piecewise-linear (in log u) density.
class LatentUDistribution {
 public:
  static constexpr std::size_t kNodes = 4096;

  explicit LatentUDistribution(std::function<double(double)> log_density)
      : log_density_(std::move(log_density)) {
    build();
  }

  double log_density(double u) const { return log_density_(u); }

  double lower() const { return std::exp(t_.front()); }
  double upper() const { return std::exp(t_.back()); }

  /// E[g(U)] by adaptive quadrature over the tabulated support.
  template <class G>
  double expectation(G&& g) const {
    auto integrand = [&](double t) {
      const double u = std::exp(t);
      return g(u) * std::exp(log_density_(u) + t - log_peak_);
    };
    const QuadratureSettings settings{1e-11, 1e-300, 2000};
    double num = 0.0;
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
      num += integrate(integrand, pieces_[i], pieces_[i + 1], settings);
    return num / mass_;
  }

  double mean() const { return expectation([](double u) { return u; }); }

  double sample(Stream& stream) const {
    const double target = stream.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const std::size_t i = std::clamp<std::size_t>(
        static_cast<std::size_t>(it - cdf_.begin()), 1, cdf_.size() - 1) - 1;
    // Density linear in t on [t_i, t_{i+1}]: solve the quadratic CDF for t.
    const double h = t_[i + 1] - t_[i];
    const double f0 = w_[i];
    const double f1 = w_[i + 1];
    const double r = target - cdf_[i];
    const double slope = (f1 - f0) / h;
    double x;
    if (std::abs(slope) * h < 1e-12 * std::max(f0, f1)) {
      x = f0 > 0.0 ? r / f0 : 0.5 * h;
    } else {
      const double disc = std::max(0.0, f0 * f0 + 2.0 * slope * r);
      x = 2.0 * r / (f0 + std::sqrt(disc));
    }
    return std::exp(t_[i] + std::clamp(x, 0.0, h));
  }

 private:
  void build() {
    auto h = [&](double t) { return log_density_(std::exp(t)) + t; };
    double lo = -10.0, hi = 10.0;
    const double cutoff = std::log(1e-12);
    for (int attempt = 0;; ++attempt) {
      require(attempt < 60, "latent variable density: mass escapes every grid bound");
      t_.resize(kNodes);
      std::vector<double> logw(kNodes);
      for (std::size_t i = 0; i < kNodes; ++i) {
        t_[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kNodes - 1);
        logw[i] = h(t_[i]);
      }
      log_peak_ = *std::max_element(logw.begin(), logw.end());
      require(std::isfinite(log_peak_), "latent variable density is not finite on the grid");
      const bool lo_ok = logw.front() - log_peak_ < cutoff;
      const bool hi_ok = logw.back() - log_peak_ < cutoff;
      // Also shrink bounds that are far too wide, so the grid resolves the peak.
      if (lo_ok && hi_ok) {
        const auto first = std::find_if(logw.begin(), logw.end(),
                                        [&](double v) { return v - log_peak_ >= 3.0 * cutoff; });
        const auto last = std::find_if(logw.rbegin(), logw.rend(),
                                       [&](double v) { return v - log_peak_ >= 3.0 * cutoff; });
        const std::size_t i0 = static_cast<std::size_t>(first - logw.begin());
        const std::size_t i1 = kNodes - 1 - static_cast<std::size_t>(last - logw.rbegin());
        if (i1 - i0 < kNodes / 8 && attempt < 59) {
          lo = t_[i0 > 0 ? i0 - 1 : 0];
          hi = t_[std::min(i1 + 1, kNodes - 1)];
          continue;
        }
        w_.resize(kNodes);
        for (std::size_t i = 0; i < kNodes; ++i) w_[i] = std::exp(logw[i] - log_peak_);
        break;
      }
      if (!lo_ok) lo -= (hi - lo);
      if (!hi_ok) hi += (hi - lo);
    }
    cdf_.assign(kNodes, 0.0);
    for (std::size_t i = 1; i < kNodes; ++i)
      cdf_[i] = cdf_[i - 1] + 0.5 * (w_[i - 1] + w_[i]) * (t_[i] - t_[i - 1]);
    // Quadrature breakpoints: eight equal pieces of the grid range.
    pieces_.clear();
    for (int j = 0; j <= 8; ++j) pieces_.push_back(t_.front() + (t_.back() - t_.front()) * j / 8.0);
    mass_ = 0.0;
    const QuadratureSettings settings{1e-11, 1e-300, 2000};
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
      mass_ += integrate([&](double t) { return std::exp(h(t) - log_peak_); }, pieces_[i],
                         pieces_[i + 1], settings);
  }

  std::function<double(double)> log_density_;
  std::vector<double> t_;
  std::vector<double> w_;
  std::vector<double> cdf_;
  std::vector<double> pieces_;
  double log_peak_ = 0.0;
  double mass_ = 1.0;
};

namespace nrmi {

inline void check_gamma(double gamma) {
  require(gamma > 0.0 && gamma < 1.0,
          "NGG posterior requires gamma in (0, 1); the Dirichlet limit gamma = 0 is not covered");
}

/// log f(u | Y) up to a constant: (n-1) log u + (k gamma - n) log(u+1) - (a/gamma)(u+1)^gamma.
inline double u_log_density(const DataSummary& data, double a, double gamma, double u) {
  check_gamma(gamma);
  require(u > 0.0, "u must be positive");
  const double n = static_cast<double>(data.n);
  return (n - 1.0) * std::log(u) + (data.k * gamma - n) * std::log1p(u) -
         (a / gamma) * std::pow(1.0 + u, gamma);
}

inline LatentUDistribution latent_u(const DataSummary& data, double a, double gamma) {
  data.validate();
  check_gamma(gamma);
  require(a > 0.0, "total mass a must be positive");
  return LatentUDistribution([=](double u) { return u_log_density(data, a, gamma, u); });
}

inline double sample_u(const DataSummary& data, double a, double gamma, Stream& stream) {
  return latent_u(data, a, gamma).sample(stream);
}

/// E[U | Y] by quadrature.
inline double posterior_mean_u(const DataSummary& data, double a, double gamma) {
  return latent_u(data, a, gamma).mean();
}

/// The CRM part given U = u: same (a, gamma), theta replaced by theta + u.
inline CrmSpec posterior_spec(const CrmSpec& prior, double u) {
  require(prior.is_generalized_gamma(), "NGG posterior needs a generalized gamma prior");
  require(u >= 0.0, "u must be non-negative");
  return prior.with_theta(prior.theta() + u);
}

/// Fixed jumps at the distinct observations: J_j ~ gamma(n_j - gamma, rate theta + u).
inline std::vector<double> sample_fixed_jumps(const DataSummary& data, double gamma, double u,
                                              Stream& stream, double theta = 1.0) {
  require(!data.freqs.empty(), "fixed jumps need the cluster frequencies");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  std::vector<double> out;
  out.reserve(data.freqs.size());
  for (auto nj : data.freqs) out.push_back(stream.gamma(static_cast<double>(nj) - gamma, theta + u));
  return out;
}

/// Everything needed to simulate from the posterior given U = u.
struct NggPosterior {
  CrmSpec prior;
  DataSummary data;
  double u;
  CrmSpec tilted;
  std::vector<double> fixed_jump_shapes;
  double fixed_jump_rate;
};

inline NggPosterior make_posterior(const CrmSpec& prior, const DataSummary& data, double u) {
  data.validate();
  NggPosterior p{prior, data, u, posterior_spec(prior, u), {}, prior.theta() + u};
  for (auto nj : data.freqs) p.fixed_jump_shapes.push_back(static_cast<double>(nj) - prior.gamma());
  return p;
}

/// Expected fixed-jump mass over expected CRM mass given U = u:
/// (n - k gamma) / (a (u + 1)^gamma).
inline double relative_importance_conditional(const DataSummary& data, double a, double gamma,
                                              double u) {
  check_gamma(gamma);
  return (static_cast<double>(data.n) - data.k * gamma) / (a * std::pow(1.0 + u, gamma));
}

/// Numerator E[(n - k gamma)/(U + 1)] and denominator E[a / (U + 1)^{1-gamma}]
/// averaged separately over the given draws of U, then divided.
inline double relative_importance_from_draws(const DataSummary& data, double a, double gamma,
                                             const std::vector<double>& draws) {
  check_gamma(gamma);
  require(!draws.empty(), "need at least one draw of U");
  const double nk = static_cast<double>(data.n) - data.k * gamma;
  double num = 0.0, den = 0.0;
  for (double u : draws) {
    num += nk / (1.0 + u);
    den += a / std::pow(1.0 + u, 1.0 - gamma);
  }
  return num / den;
}

inline double relative_importance_mixed(const DataSummary& data, double a, double gamma,
                                        std::size_t n_draws, Stream& stream) {
  const auto dist = latent_u(data, a, gamma);
  std::vector<double> draws(n_draws);
  for (auto& u : draws) u = dist.sample(stream);
  return relative_importance_from_draws(data, a, gamma, draws);
}

/// The mixed index with both expectations computed by quadrature.
inline double relative_importance_quadrature(const DataSummary& data, double a, double gamma) {
  const auto dist = latent_u(data, a, gamma);
  const double nk = static_cast<double>(data.n) - data.k * gamma;
  const double num = dist.expectation([&](double u) { return nk / (1.0 + u); });
  const double den = dist.expectation([&](double u) { return a / std::pow(1.0 + u, 1.0 - gamma); });
  return num / den;
}

}  // namespace nrmi
}  // namespace crm
