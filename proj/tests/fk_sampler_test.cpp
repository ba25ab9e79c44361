#include "crm/fk_sampler.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

using namespace crm;

TEST(SampleTrajectory, DeterministicForFixedSeed) {
  const auto spec = CrmSpec::generalized_gamma(1.0, 0.5);
  Stream s1(42), s2(42);
  const auto t1 = sample_trajectory(spec, 50, s1);
  const auto t2 = sample_trajectory(spec, 50, s2);
  EXPECT_EQ(t1.jumps, t2.jumps);
  EXPECT_EQ(t1.xi, t2.xi);
  EXPECT_EQ(t1.locations, t2.locations);
}

TEST(SampleTrajectory, BetaJumpsAreExponentialOfArrivalTimes) {
  const auto spec = CrmSpec::beta_process(1.0, 1.0);
  Stream s(7);
  const auto t = sample_trajectory(spec, 40, s);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(t.jumps[i], std::exp(-t.xi[i]), 1e-10 * std::exp(-t.xi[i]));
  }
}

TEST(SampleTrajectory, ShapeInvariants) {
  for (const auto& spec : {CrmSpec::generalized_gamma(2.0, 0.75), CrmSpec::stable_beta(1.0, 1.0, 0.5),
                           CrmSpec::gamma_process(0.5)}) {
    Stream s(1);
    const auto t = sample_trajectory(spec, 200, s);
    ASSERT_EQ(t.xi.size(), 200u);
    ASSERT_EQ(t.jumps.size(), 200u);
    ASSERT_EQ(t.locations.size(), 200u);
    for (std::size_t i = 1; i < t.size(); ++i) {
      EXPECT_GT(t.xi[i], t.xi[i - 1]);
      EXPECT_LT(t.jumps[i], t.jumps[i - 1]);
    }
    const TailMass n(spec);
    for (std::size_t i = 0; i < t.size(); i += 17) {
      EXPECT_NEAR(n(t.jumps[i]), t.xi[i], 1e-9 * t.xi[i]);
    }
  }
  Stream s(1);
  EXPECT_THROW(sample_trajectory(CrmSpec::gamma_process(1.0), 0, s), InvalidArgument);
}

TEST(SampleTrajectory, PrefixStable) {
  const auto spec = CrmSpec::stable_beta(1.0, 0.5, 0.25);
  Stream s1(99), s2(99);
  const auto long_t = sample_trajectory(spec, 120, s1);
  const auto short_t = sample_trajectory(spec, 30, s2);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(long_t.jumps[i], short_t.jumps[i]);
    EXPECT_EQ(long_t.locations[i], short_t.locations[i]);
  }
}

TEST(SampleEnsemble, SingleTrajectoryUsesChildStreamZero) {
  const auto spec = CrmSpec::generalized_gamma(1.0, 0.25);
  const auto e = sample_ensemble(spec, 25, 1, 123);
  Stream child = Stream::child(123, 0);
  const auto t = sample_trajectory(spec, 25, child);
  EXPECT_EQ(e.trajectories.at(0).jumps, t.jumps);
}

TEST(SampleEnsemble, IdenticalAcrossThreadCounts) {
  const auto spec = CrmSpec::inverse_gaussian(1.0);
  const auto e1 = sample_ensemble(spec, 30, 40, 5, 1);
  const auto e4 = sample_ensemble(spec, 30, 40, 5, 4);
  const auto e8 = sample_ensemble(spec, 30, 40, 5, 8);
  for (std::size_t l = 0; l < 40; ++l) {
    EXPECT_EQ(e1.trajectories[l].jumps, e4.trajectories[l].jumps);
    EXPECT_EQ(e1.trajectories[l].jumps, e8.trajectories[l].jumps);
    EXPECT_EQ(e1.trajectories[l].locations, e8.trajectories[l].locations);
  }
}

TEST(SampleEnsemble, MeanTotalMassMatchesA) {
  // E[mu(X)] = a; the untruncated tail beyond M = 1000 is negligible at gamma = 0.5.
  const auto spec = CrmSpec::generalized_gamma(1.0, 0.5);
  const std::size_t n = 2000;
  const auto e = sample_ensemble(spec, 1000, n, 2024);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& t : e.trajectories) {
    const double s = t.total_mass();
    sum += s;
    sum2 += s * s;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - 1.0), 3.0 * se) << "mean=" << mean << " se=" << se;
}

TEST(EnsembleExport, CsvHeaderAndRows) {
  const auto e = sample_ensemble(CrmSpec::beta_process(1.0, 1.0), 3, 2, 1);
  std::ostringstream out;
  write_ensemble_csv(e, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "trajectory_id,i,xi,jump,location");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(EnsembleExport, BinaryCacheRoundTrip) {
  const auto spec = CrmSpec::stable_beta(1.5, 2.0, 0.3).with_base(BaseMeasure::normal(0.0, 2.0));
  const auto e = sample_ensemble(spec, 12, 5, 77);
  const std::string path = ::testing::TempDir() + "/ensemble.bin";
  write_ensemble_cache(e, path);
  const auto back = read_ensemble_cache(path);
  EXPECT_EQ(back.spec, e.spec);
  EXPECT_EQ(back.truncation, 12u);
  EXPECT_EQ(back.master_seed, 77u);
  ASSERT_EQ(back.size(), 5u);
  for (std::size_t l = 0; l < 5; ++l) {
    EXPECT_EQ(back.trajectories[l].xi, e.trajectories[l].xi);
    EXPECT_EQ(back.trajectories[l].jumps, e.trajectories[l].jumps);
    EXPECT_EQ(back.trajectories[l].locations, e.trajectories[l].locations);
  }
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOTACACHE";
  }
  EXPECT_THROW(read_ensemble_cache(path), InvalidArgument);
  std::remove(path.c_str());
}
