#pragma once

// Stable-beta Indian buffet posterior. After n Bernoulli-process draws the CRM
// part is again stable-beta with c* = c + n and a* = a (c+sigma)_(n) / (c+1)_(n);
// a feature seen n_j times carries a fixed jump ~ beta(n_j - sigma, c + sigma + n - n_j).

#include <cmath>
#include <vector>

#include "crm/errors.hpp"
#include "crm/fk_sampler.hpp"
#include "crm/levy_core.hpp"
#include "crm/random.hpp"
#include "crm/special_numerics.hpp"

namespace crm::ibp {

struct SbpPosterior {
  CrmSpec prior;
  std::size_t n;
  CrmSpec tilted;
  /// (alpha, beta) of each fixed jump, in the order of the supplied counts.
  std::vector<std::pair<double, double>> fixed_jump_params;
};

inline void check_prior(const CrmSpec& prior) {
  require(prior.is_stable_beta(), "IBP posterior needs a beta or stable-beta prior");
}

/// Updated CRM part after n observations.
inline SbpPosterior posterior_spec(const CrmSpec& prior, std::size_t n,
                                   const std::vector<std::size_t>& feature_counts = {}) {
  check_prior(prior);
  const double c = prior.c();
  const double sigma = prior.sigma();
  const double log_ratio = log_ascending_factorial(c + sigma, n) - log_ascending_factorial(c + 1.0, n);
  const CrmSpec tilted =
      prior.with_concentration(c + static_cast<double>(n)).with_total_mass(prior.a() * std::exp(log_ratio));
  SbpPosterior p{prior, n, tilted, {}};
  for (auto nj : feature_counts) {
    require(nj >= 1 && nj <= n, "feature counts must lie in 1..n");
    p.fixed_jump_params.emplace_back(static_cast<double>(nj) - sigma,
                                     c + sigma + static_cast<double>(n - nj));
  }
  return p;
}

/// kappa_i* = a (1-sigma)_(i-1) (c+sigma)_(n) / (1+c)_(n+i-1).
inline double posterior_cumulant(const CrmSpec& prior, std::size_t n, int i) {
  check_prior(prior);
  require(i >= 1, "cumulant index must be >= 1");
  const double c = prior.c();
  const double sigma = prior.sigma();
  const auto k = static_cast<std::size_t>(i - 1);
  return prior.a() * ascending_factorial(1.0 - sigma, k) *
         std::exp(log_ascending_factorial(c + sigma, n) - log_ascending_factorial(1.0 + c, n + k));
}

inline std::vector<double> sample_fixed_jumps(const std::vector<std::size_t>& feature_counts, double c,
                                              double sigma, std::size_t n, Stream& stream) {
  std::vector<double> out;
  out.reserve(feature_counts.size());
  for (auto nj : feature_counts) {
    require(nj >= 1 && nj <= n, "feature counts must lie in 1..n");
    const double alpha = static_cast<double>(nj) - sigma;
    const double beta = c + sigma + static_cast<double>(n - nj);
    require(alpha > 0.0 && beta > 0.0, "beta parameters of a fixed jump must be positive");
    out.push_back(stream.beta(alpha, beta));
  }
  return out;
}

/// (n - k sigma) (c+1)_(n-1) / (a (c+sigma)_(n)); k may be fractional.
inline double relative_importance(std::size_t n, double k, double c, double sigma, double a) {
  require(n >= 1, "n must be at least 1");
  return (static_cast<double>(n) - k * sigma) *
         std::exp(log_ascending_factorial(c + 1.0, n - 1) - log_ascending_factorial(c + sigma, n)) / a;
}

/// Indices of the atoms picked by one Bernoulli process draw: atom i is
/// selected independently with probability J_i.
inline std::vector<std::size_t> sample_bernoulli_process(const Trajectory& measure, Stream& stream) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < measure.jumps.size(); ++i) {
    const double p = measure.jumps[i];
    require(p >= 0.0 && p <= 1.0, "Bernoulli process needs jumps in [0, 1]");
    if (stream.uniform() < p) picked.push_back(i);
  }
  return picked;
}

}  // namespace crm::ibp
