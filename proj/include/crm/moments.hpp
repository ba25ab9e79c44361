#pragma once

// Moments of the total mass: exact values from cumulants, Monte Carlo
// estimates from truncated Ferguson-Klass trajectories, the moment-match
// index ell_M, the relative-error index e_M and the truncation search M(ell).

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crm/errors.hpp"
#include "crm/fk_sampler.hpp"
#include "crm/levy_core.hpp"
#include "crm/parallel.hpp"

namespace crm {

inline constexpr int kDefaultMomentCount = 4;
inline constexpr std::size_t kDefaultEnsembleSize = 10000;

/// First K raw moments m_1..m_K of a positive random variable.
class MomentVector {
 public:
  MomentVector() = default;
  explicit MomentVector(std::vector<double> values) : values_(std::move(values)) {
    require(!values_.empty(), "a moment vector needs at least one moment");
    for (double m : values_) require(m >= 0.0 && std::isfinite(m), "moments must be finite and >= 0");
  }

  int size() const { return static_cast<int>(values_.size()); }
  /// m_n for n = 1..K.
  double operator[](int n) const { return values_.at(static_cast<std::size_t>(n - 1)); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// m_n = sum_{j=0}^{n-1} C(n-1, j) m_j kappa_{n-j}, m_0 = 1.
inline MomentVector moments_from_cumulants(const std::vector<double>& kappa) {
  require(!kappa.empty(), "need at least one cumulant");
  const std::size_t k = kappa.size();
  std::vector<double> m(k + 1, 0.0);
  m[0] = 1.0;
  for (std::size_t n = 1; n <= k; ++n) {
    double binom = 1.0;  // C(n-1, j)
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sum += binom * m[j] * kappa[n - j - 1];
      binom = binom * static_cast<double>(n - 1 - j) / static_cast<double>(j + 1);
    }
    m[n] = sum;
  }
  return MomentVector(std::vector<double>(m.begin() + 1, m.end()));
}

inline std::vector<double> cumulants(const CrmSpec& spec, int k) {
  std::vector<double> out;
  for (int i = 1; i <= k; ++i) out.push_back(cumulant(spec, i));
  return out;
}

inline MomentVector theoretical_moments(const CrmSpec& spec, int k = kDefaultMomentCount) {
  require(k >= 1, "K must be at least 1");
  return moments_from_cumulants(cumulants(spec, k));
}

/// ell = sqrt( (1/K) sum_n (m_n^{1/n} - mhat_n^{1/n})^2 ).
inline double moment_distance(const MomentVector& m, const MomentVector& mhat) {
  require(m.size() == mhat.size(), "moment vectors must have the same length");
  double sum = 0.0;
  for (int n = 1; n <= m.size(); ++n) {
    const double d = std::pow(m[n], 1.0 / n) - std::pow(mhat[n], 1.0 / n);
    sum += d * d;
  }
  return std::sqrt(sum / m.size());
}

/// mhat_n = mean over trajectories of (J_1 + ... + J_M)^n.
inline MomentVector empirical_moments(const Ensemble& e, std::size_t m, int k = kDefaultMomentCount) {
  require(k >= 1, "K must be at least 1");
  require(m >= 1 && m <= e.truncation, "M exceeds the ensemble truncation level");
  require(!e.trajectories.empty(), "empty ensemble");
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  for (const auto& t : e.trajectories) {
    const double s = t.total_mass(m);
    double p = 1.0;
    for (int n = 0; n < k; ++n) {
      p *= s;
      sums[static_cast<std::size_t>(n)] += p;
    }
  }
  for (auto& v : sums) v /= static_cast<double>(e.trajectories.size());
  return MomentVector(sums);
}

/// e_M = mean over trajectories of J_M / (J_1 + ... + J_M).
inline double relative_error_index(const Ensemble& e, std::size_t m) {
  require(m >= 1 && m <= e.truncation, "M exceeds the ensemble truncation level");
  require(!e.trajectories.empty(), "empty ensemble");
  double sum = 0.0;
  for (const auto& t : e.trajectories) {
    const double s = t.total_mass(m);
    sum += s > 0.0 ? t.jumps[m - 1] / s : 0.0;
  }
  return sum / static_cast<double>(e.trajectories.size());
}

// ---------------------------------------------------------------------------
// Truncation curves

struct TruncationReport {
  CrmSpec spec;
  int moment_count = kDefaultMomentCount;
  std::size_t ensemble_size = 0;
  std::uint64_t seed = 0;
  MomentVector theoretical;
  std::vector<std::size_t> m_grid;
  std::vector<double> ell;
  std::vector<double> e;
  std::optional<double> ell_target;
  std::optional<std::size_t> resolved_m;

  /// ell_M at a level on the grid.
  double ell_at(std::size_t m) const {
    for (std::size_t i = 0; i < m_grid.size(); ++i)
      if (m_grid[i] == m) return ell[i];
    throw InvalidArgument("M=" + std::to_string(m) + " is not on the report grid");
  }
};

namespace detail {

// Per-level sums of S_M^n (n = 1..K) and J_M / S_M over a block of trajectories.
struct CurveSums {
  std::vector<double> power;  // [M][n]
  std::vector<double> ratio;  // [M]
};

inline void resolve(TruncationReport& r) {
  if (!r.ell_target) return;
  for (std::size_t i = 0; i < r.m_grid.size(); ++i) {
    if (r.ell[i] <= *r.ell_target) {
      r.resolved_m = r.m_grid[i];
      return;
    }
  }
}

}  // namespace detail

/// ell_M and e_M for every M = 1..M_max from one ensemble of n_fk trajectories
/// of length M_max. FK jumps are prefix-stable, so the ensemble truncated at M
/// is exactly the first M terms of each trajectory: every level is evaluated on
/// common random numbers. Trajectories are streamed rather than stored, and the
/// sums are reduced over a fixed blocking so the result is independent of the
/// thread count.
inline TruncationReport truncation_curve(const CrmSpec& spec, std::size_t m_max, std::size_t n_fk,
                                         std::uint64_t seed, int k = kDefaultMomentCount,
                                         std::optional<double> ell_target = std::nullopt,
                                         std::size_t threads = default_thread_count()) {
  require(m_max >= 1, "M_max must be at least 1");
  require(n_fk >= 1, "ensemble size must be at least 1");
  require(k >= 1 && k <= 10, "K must lie in 1..10");
  require(!ell_target || *ell_target > 0.0, "ell target must be positive");

  const TailMass tail(spec);
  const std::size_t kk = static_cast<std::size_t>(k);
  constexpr std::size_t kBlocks = 64;
  const std::size_t blocks = std::min(kBlocks, n_fk);
  std::vector<detail::CurveSums> partial(blocks);

  parallel_for(blocks, threads, [&](std::size_t b) {
    auto& acc = partial[b];
    acc.power.assign(m_max * kk, 0.0);
    acc.ratio.assign(m_max, 0.0);
    const std::size_t begin = b * n_fk / blocks;
    const std::size_t end = (b + 1) * n_fk / blocks;
    for (std::size_t l = begin; l < end; ++l) {
      Stream stream = Stream::child(seed, l);
      JumpSequence seq(tail, stream);
      double s = 0.0;
      for (std::size_t m = 0; m < m_max; ++m) {
        const double j = seq.next().jump;
        s += j;
        double p = 1.0;
        for (std::size_t n = 0; n < kk; ++n) {
          p *= s;
          acc.power[m * kk + n] += p;
        }
        acc.ratio[m] += s > 0.0 ? j / s : 0.0;
      }
    }
  });

  TruncationReport r{spec, k, n_fk, seed, theoretical_moments(spec, k), {}, {}, {}, ell_target, {}};
  const double inv_n = 1.0 / static_cast<double>(n_fk);
  std::vector<double> mhat(kk);
  for (std::size_t m = 0; m < m_max; ++m) {
    double ratio = 0.0;
    std::fill(mhat.begin(), mhat.end(), 0.0);
    for (const auto& acc : partial) {
      for (std::size_t n = 0; n < kk; ++n) mhat[n] += acc.power[m * kk + n];
      ratio += acc.ratio[m];
    }
    for (auto& v : mhat) v *= inv_n;
    r.m_grid.push_back(m + 1);
    r.ell.push_back(moment_distance(r.theoretical, MomentVector(mhat)));
    r.e.push_back(ratio * inv_n);
  }
  detail::resolve(r);
  return r;
}

/// M(ell): the smallest M <= M_max with ell_M <= ell_target, reported along
/// with the full curve. resolved_m is empty when M_max is not enough.
inline TruncationReport required_truncation(const CrmSpec& spec, double ell_target,
                                            std::size_t m_max, std::size_t n_fk = kDefaultEnsembleSize,
                                            int k = kDefaultMomentCount, std::uint64_t seed = 1,
                                            std::size_t threads = default_thread_count()) {
  return truncation_curve(spec, m_max, n_fk, seed, k, ell_target, threads);
}

/// The same report computed from a stored ensemble.
inline TruncationReport truncation_report(const Ensemble& e, int k = kDefaultMomentCount,
                                          std::optional<double> ell_target = std::nullopt) {
  TruncationReport r{e.spec, k, e.size(), e.master_seed, theoretical_moments(e.spec, k),
                     {}, {}, {}, ell_target, {}};
  for (std::size_t m = 1; m <= e.truncation; ++m) {
    r.m_grid.push_back(m);
    r.ell.push_back(moment_distance(r.theoretical, empirical_moments(e, m, k)));
    r.e.push_back(relative_error_index(e, m));
  }
  detail::resolve(r);
  return r;
}

inline void write_report_csv(const TruncationReport& r, std::ostream& out) {
  out << "M,ell,e\n";
  for (std::size_t i = 0; i < r.m_grid.size(); ++i) {
    out << r.m_grid[i] << ',' << format_double(r.ell[i]) << ',' << format_double(r.e[i]) << '\n';
  }
}

inline nlohmann::json report_to_json(const TruncationReport& r) {
  nlohmann::json j;
  j["spec"] = to_config(r.spec);
  j["K"] = r.moment_count;
  j["n_fk"] = r.ensemble_size;
  j["seed"] = r.seed;
  j["theoretical_moments"] = r.theoretical.values();
  j["M"] = r.m_grid;
  j["ell"] = r.ell;
  j["e"] = r.e;
  j["ell_target"] = r.ell_target ? nlohmann::json(*r.ell_target) : nlohmann::json(nullptr);
  j["resolved_M"] = r.resolved_m ? nlohmann::json(*r.resolved_m) : nlohmann::json(nullptr);
  return j;
}

}  // namespace crm
