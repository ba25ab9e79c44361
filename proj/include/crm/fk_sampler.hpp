#pragma once

// Ferguson-Klass series sampler: jumps in decreasing order, J_i = N^{-1}(xi_i),
// where xi_1 < xi_2 < ... are the arrival times of a unit-rate Poisson process.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crm/errors.hpp"
#include "crm/levy_core.hpp"
#include "crm/parallel.hpp"
#include "crm/random.hpp"

namespace crm {

/// One truncated realization sum_{i<=M} J_i delta_{Z_i}.
struct Trajectory {
  std::vector<double> xi;         ///< Poisson arrival times, increasing
  std::vector<double> jumps;      ///< J_i = N^{-1}(xi_i), decreasing
  std::vector<double> locations;  ///< Z_i drawn i.i.d. from the base measure

  std::size_t size() const { return jumps.size(); }

  double total_mass(std::size_t m) const {
    double s = 0.0;
    for (std::size_t i = 0; i < m && i < jumps.size(); ++i) s += jumps[i];
    return s;
  }
  double total_mass() const { return total_mass(jumps.size()); }
};

/// Generates the series one term at a time from a stream. For each term one
/// exponential gap is drawn, then one location, so any prefix of the output
/// depends only on the stream and not on how many terms are eventually drawn.
class JumpSequence {
 public:
  struct Term {
    double xi;
    double jump;
    double location;
  };

  JumpSequence(const TailMass& tail, Stream& stream) : tail_(tail), stream_(stream) {}

  Term next() {
    xi_ += stream_.exponential();
    // jumps decrease, so once one underflows to 0 the rest do too
    const double jump =
        underflowed_ ? 0.0 : tail_.inverse(xi_, prev_ > 0.0 ? std::optional<double>(prev_) : std::nullopt);
    const double location = tail_.spec().base_measure().sample(stream_);
    if (jump > 0.0) prev_ = jump;
    else underflowed_ = true;
    return {xi_, jump, location};
  }

 private:
  const TailMass& tail_;
  Stream& stream_;
  double xi_ = 0.0;
  double prev_ = 0.0;
  bool underflowed_ = false;
};

inline Trajectory sample_trajectory(const TailMass& tail, std::size_t m, Stream& stream) {
  require(m >= 1, "truncation level M must be at least 1");
  Trajectory t;
  t.xi.reserve(m);
  t.jumps.reserve(m);
  t.locations.reserve(m);
  JumpSequence seq(tail, stream);
  for (std::size_t i = 0; i < m; ++i) {
    const auto term = seq.next();
    t.xi.push_back(term.xi);
    t.jumps.push_back(term.jump);
    t.locations.push_back(term.location);
  }
  return t;
}

inline Trajectory sample_trajectory(const CrmSpec& spec, std::size_t m, Stream& stream) {
  return sample_trajectory(TailMass(spec), m, stream);
}

/// N_FK trajectories at a common truncation level.
struct Ensemble {
  CrmSpec spec;
  std::size_t truncation = 0;
  std::uint64_t master_seed = 0;
  std::vector<Trajectory> trajectories;

  std::size_t size() const { return trajectories.size(); }
};

/// Trajectory l is drawn from Stream::child(master_seed, l), so the ensemble
/// is identical for every thread count.
inline Ensemble sample_ensemble(const CrmSpec& spec, std::size_t m, std::size_t n_fk,
                                std::uint64_t master_seed,
                                std::size_t threads = default_thread_count()) {
  require(m >= 1, "truncation level M must be at least 1");
  require(n_fk >= 1, "ensemble size must be at least 1");
  const TailMass tail(spec);
  Ensemble e{spec, m, master_seed, std::vector<Trajectory>(n_fk)};
  parallel_for(n_fk, threads, [&](std::size_t l) {
    Stream stream = Stream::child(master_seed, l);
    e.trajectories[l] = sample_trajectory(tail, m, stream);
  });
  return e;
}

// ---------------------------------------------------------------------------
// Export

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_ensemble_csv(const Ensemble& e, std::ostream& out) {
  out << "trajectory_id,i,xi,jump,location\n";
  for (std::size_t l = 0; l < e.trajectories.size(); ++l) {
    const auto& t = e.trajectories[l];
    for (std::size_t i = 0; i < t.size(); ++i) {
      out << l << ',' << (i + 1) << ',' << format_double(t.xi[i]) << ','
          << format_double(t.jumps[i]) << ',' << format_double(t.locations[i]) << '\n';
    }
  }
}

namespace detail {

inline constexpr char kCacheMagic[8] = {'C', 'R', 'M', 'F', 'K', 'E', 'N', 'S'};
inline constexpr std::uint32_t kCacheVersion = 1;

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw InvalidArgument("ensemble cache is truncated");
  return v;
}

}  // namespace detail

/// Binary layout (host byte order):
///   "CRMFKENS" | u32 version | u64 seed | u64 M | u64 N_FK |
///   u32 n_keys, then (u32 len, bytes) pairs for the spec config |
///   per trajectory: M xi, M jumps, M locations as f64.
inline void write_ensemble_cache(const Ensemble& e, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open '" + path + "' for writing");
  out.write(detail::kCacheMagic, sizeof detail::kCacheMagic);
  detail::write_pod(out, detail::kCacheVersion);
  detail::write_pod(out, static_cast<std::uint64_t>(e.master_seed));
  detail::write_pod(out, static_cast<std::uint64_t>(e.truncation));
  detail::write_pod(out, static_cast<std::uint64_t>(e.trajectories.size()));
  const auto config = to_config(e.spec);
  detail::write_pod(out, static_cast<std::uint32_t>(config.size()));
  auto put_string = [&](const std::string& s) {
    detail::write_pod(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  };
  for (const auto& [k, v] : config) {
    put_string(k);
    put_string(v);
  }
  for (const auto& t : e.trajectories) {
    for (const auto* vec : {&t.xi, &t.jumps, &t.locations}) {
      out.write(reinterpret_cast<const char*>(vec->data()),
                static_cast<std::streamsize>(vec->size() * sizeof(double)));
    }
  }
  if (!out) throw NumericError("failed writing ensemble cache '" + path + "'");
}

inline Ensemble read_ensemble_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open ensemble cache '" + path + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  require(in && std::memcmp(magic, detail::kCacheMagic, sizeof magic) == 0,
          "'" + path + "' is not an ensemble cache");
  const auto version = detail::read_pod<std::uint32_t>(in);
  require(version == detail::kCacheVersion,
          "unsupported ensemble cache version " + std::to_string(version));
  const auto seed = detail::read_pod<std::uint64_t>(in);
  const auto m = detail::read_pod<std::uint64_t>(in);
  const auto n = detail::read_pod<std::uint64_t>(in);
  const auto n_keys = detail::read_pod<std::uint32_t>(in);
  auto get_string = [&] {
    const auto len = detail::read_pod<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw InvalidArgument("ensemble cache is truncated");
    return s;
  };
  std::map<std::string, std::string> config;
  for (std::uint32_t i = 0; i < n_keys; ++i) {
    auto k = get_string();
    config[k] = get_string();
  }
  Ensemble e{crm_spec_from_config(config), static_cast<std::size_t>(m), seed, {}};
  e.trajectories.resize(n);
  for (auto& t : e.trajectories) {
    for (auto* vec : {&t.xi, &t.jumps, &t.locations}) {
      vec->resize(m);
      in.read(reinterpret_cast<char*>(vec->data()), static_cast<std::streamsize>(m * sizeof(double)));
      if (!in) throw InvalidArgument("ensemble cache is truncated");
    }
  }
  return e;
}

}  // namespace crm
