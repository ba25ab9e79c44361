#include "app.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crm/moments.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run crmfk(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = crm::app::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("crmfk_app_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST(Cli, HelpAndUsage) {
  EXPECT_EQ(crmfk({"--help"}).code, crm::app::kExitOk);
  EXPECT_EQ(crmfk({}).code, crm::app::kExitUsage);
  EXPECT_EQ(crmfk({"no-such-command"}).code, crm::app::kExitUsage);
  EXPECT_EQ(crmfk({"sample", "--no-such-flag", "1"}).code, crm::app::kExitUsage);
}

TEST(Cli, SampleHeaderAndShape) {
  const auto r = crmfk({"sample", "--jumps", "4", "--trajectories", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "trajectory_id,i,xi,jump,location");
  EXPECT_EQ(rows[12][0], "2");
  EXPECT_EQ(rows[12][1], "4");
}

TEST(Cli, SampleIsDeterministicInSeed) {
  const std::vector<std::string> base{"sample", "--family", "stable_beta", "--sigma", "0.3", "--jumps", "20",
                                      "--trajectories", "5"};
  auto with_seed = [&](const std::string& s) {
    auto args = base;
    args.insert(args.end(), {"--seed", s});
    return crmfk(args).out;
  };
  EXPECT_EQ(with_seed("7"), with_seed("7"));
  EXPECT_NE(with_seed("7"), with_seed("8"));
}

TEST(Cli, BetaProcessJumpsAreExpOfMinusXi) {
  // N(v) = a c int_v^1 s^{-1} (1-s)^{c-1} ds = -log v when a = c = 1.
  const auto r = crmfk({"sample", "--family", "beta", "--c", "1", "--jumps", "30", "--trajectories", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double xi = std::stod(rows[i][2]);
    const double jump = std::stod(rows[i][3]);
    EXPECT_NEAR(jump, std::exp(-xi), 1e-12 * std::exp(-xi) + 1e-300);
  }
}

TEST_F(CliFiles, UsageErrorsWriteNothing) {
  const std::string out = path("bad.csv");
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"sample", "--jumps", "0", "--out", out},
           {"sample", "--jumps", "abc", "--out", out},
           {"sample", "--family", "poisson", "--out", out},
           {"sample", "--a", "-1", "--out", out},
           {"sample", "--format", "xml", "--out", out},
           {"tail-bounds", "--eps", "1.5", "--out", out},
           {"truncation-grid", "--p1", "2:1:3", "--out", out},
           {"posterior-nrmi", "--report", "plots", "--out", out},
           {"mixture", "--data", path("missing.csv"), "--out", out},
       }) {
    const auto r = crmfk(args);
    EXPECT_EQ(r.code, crm::app::kExitUsage) << args[1] << ' ' << args[2];
    EXPECT_FALSE(r.err.empty());
    EXPECT_TRUE(r.out.empty());
    EXPECT_FALSE(fs::exists(out));
    EXPECT_FALSE(fs::exists(out + ".manifest.json"));
  }
}

TEST(Cli, TruncationCurveColumnsPassThrough) {
  const auto r = crmfk({"truncation-curve", "--family", "inverse_gaussian", "--mmax", "15", "--trajectories",
                        "300", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 16u);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "M,ell,e");
  const auto e = crm::sample_ensemble(crm::CrmSpec::inverse_gaussian(1.0), 15, 300, 3, 1);
  const auto rep = crm::truncation_report(e);
  for (std::size_t m = 1; m <= 15; ++m) {
    EXPECT_NEAR(std::stod(rows[m][2]), crm::relative_error_index(e, m), 1e-12);
    EXPECT_NEAR(std::stod(rows[m][1]), rep.ell[m - 1], 1e-10);
  }
}

TEST(Cli, SingleCellGridMatchesTruncationCurve) {
  const auto grid = crmfk({"truncation-grid", "--p1", "0.5:1.5:1", "--p2", "0.4:0.6:1", "--mmax", "60",
                           "--trajectories", "500", "--ltarget", "0.1"});
  ASSERT_EQ(grid.code, 0) << grid.err;
  const auto rows = parse_csv(grid.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(grid.out.substr(0, grid.out.find('\n')), "param1,param2,M");
  const auto rep = crm::truncation_curve(crm::CrmSpec::generalized_gamma(1.0, 0.5), 60, 500, 1, 4, 0.1, 1);
  ASSERT_TRUE(rep.resolved_m.has_value());
  EXPECT_EQ(rows[1][2], std::to_string(*rep.resolved_m));
}

TEST(Cli, GridShapeAndUnresolvedCells) {
  const auto r = crmfk({"truncation-grid", "--family", "stable_beta", "--p1", "0:2:2", "--p2", "0:30:3",
                        "--mmax", "2", "--trajectories", "100", "--ltarget", "1e-6"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[1][0], "0.5");
  EXPECT_EQ(rows[1][1], "5");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][2], "NA");
}

TEST(Cli, IbpTableValues) {
  const auto r = crmfk({"posterior-ibp"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  const std::vector<double> want{2.57, 4.71, 8.79, 2.28, 4.36, 8.39, 1.35, 2.40, 4.41};
  ASSERT_EQ(rows.size(), want.size() + 1);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(std::stod(rows[i + 1][3]), want[i], 0.005) << i;
}

TEST(Cli, TailBoundsAnalyticColumn) {
  const auto r = crmfk({"tail-bounds"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  const std::vector<double> want{1411, 1230, 589, 1554, 1250, 612};
  ASSERT_EQ(rows.size(), want.size() + 1);
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(std::stod(rows[i + 1][3]), want[i], 0.5 + 0.0005 * want[i]) << i;
  }
}

TEST(Cli, NrmiMeansMatchLibrary) {
  const auto r = crmfk({"posterior-nrmi", "--scenarios", "10;1,3,6"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(std::stod(rows[1][3]), 6.2956, 1e-3);
  EXPECT_NEAR(std::stod(rows[2][3]), 8.9023, 1e-3);
}

TEST(Cli, JsonMirrorParses) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"sample", "--jumps", "3", "--trajectories", "2", "--format", "json"},
           {"truncation-curve", "--mmax", "5", "--trajectories", "50", "--format", "json"},
           {"posterior-ibp", "--format", "json"},
           {"tail-bounds", "--ms", "25", "--format", "json"},
       }) {
    const auto r = crmfk(args);
    ASSERT_EQ(r.code, 0) << r.err;
    nlohmann::json parsed;
    EXPECT_NO_THROW(parsed = nlohmann::json::parse(r.out)) << args[0];
    EXPECT_FALSE(parsed.is_null());
  }
}

TEST_F(CliFiles, ConfigFilePrecedence) {
  const std::string ini = path("run.ini");
  std::ofstream(ini) << "[common]\nseed = 11\n\n[sample]\njumps = 5\ntrajectories = 2\n";
  const auto from_file = crmfk({"sample", "--config", ini});
  const auto explicit_flags = crmfk({"sample", "--seed", "11", "--jumps", "5", "--trajectories", "2"});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(from_file.out, explicit_flags.out);
  const auto overridden = crmfk({"sample", "--config", ini, "--jumps", "2"});
  EXPECT_EQ(overridden.out, crmfk({"sample", "--seed", "11", "--jumps", "2", "--trajectories", "2"}).out);

  std::ofstream(path("bad.ini")) << "[sample]\nnot_an_option = 1\n";
  EXPECT_EQ(crmfk({"sample", "--config", path("bad.ini")}).code, crm::app::kExitUsage);
  EXPECT_EQ(crmfk({"sample", "--config", path("absent.ini")}).code, crm::app::kExitUsage);
}

TEST_F(CliFiles, ManifestRerunIsByteIdentical) {
  const std::string out = path("curve.csv");
  const auto first = crmfk({"truncation-curve", "--family", "generalized_gamma", "--gamma", "0.25", "--mmax", "30",
                            "--trajectories", "700", "--seed", "5", "--threads", "1", "--out", out});
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_TRUE(first.out.empty());
  const auto manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
  EXPECT_EQ(manifest["command"], "truncation-curve");
  EXPECT_EQ(manifest["config"]["gamma"], "0.25");
  EXPECT_EQ(manifest["seed"], "5");
  EXPECT_EQ(manifest["outputs"][0], out);
  EXPECT_TRUE(manifest.contains("version"));
  EXPECT_TRUE(manifest.contains("wall_clock_seconds"));

  for (const std::string threads : {"1", "4", "8"}) {
    const std::string again = path("again_" + threads + ".csv");
    const auto r = crmfk({"rerun", "--manifest", out + ".manifest.json", "--out", again, "--threads", threads});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(again), slurp(out)) << threads;
  }
  EXPECT_EQ(crmfk({"rerun", "--manifest", path("none.json")}).code, crm::app::kExitUsage);
}
