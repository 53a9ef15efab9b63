#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "relqm_cli/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "relqm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = relqm::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string tmp(const std::string& name) {
  fs::create_directories(RELQM_TEST_TMP);
  return (fs::path(RELQM_TEST_TMP) / name).string();
}

json load(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

const json* find_check(const json& report, const std::string& name) {
  for (const auto& c : report.at("checks"))
    if (c.at("name") == name) return &c;
  return nullptr;
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({"verify", "--class", "massive_plus", "--n", "15,32"}).code, 2);
  EXPECT_EQ(run_cli({"verify", "--class", "massless_pm", "--n", "8,10"}).code, 2);
  EXPECT_EQ(run_cli({"verify", "--class", "massive_both"}).code, 2);
  EXPECT_EQ(run_cli({"verify", "--class", "massive_plus", "--suites", "nonsense"}).code, 2);
  EXPECT_EQ(run_cli({"verify", "--class", "massive_plus", "--tol", "bogus=1"}).code, 2);
  EXPECT_EQ(run_cli({"verify", "--class", "massive_plus", "--m", "2"}).code, 2);
  EXPECT_EQ(run_cli({"verify", "--class", "massless_pm", "--m", "2", "--pair", "1"}).code, 2);
  EXPECT_EQ(run_cli({"localizability", "--m", "2", "--n", "16,24"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
}

TEST(Cli, BoundaryViolationIsUsageError) {
  const auto r = run_cli({"evolve", "--class", "massive_plus", "--n", "16", "--center", "5,0,0", "--width", "1",
                          "--out", tmp("never.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("boundary"), std::string::npos) << r.err;
}

TEST(Cli, VerifyWritesReportAndReproducesFromIt) {
  const std::string path = tmp("exact.json");
  const auto r = run_cli({"verify", "--class", "massive_pm_1", "--n", "8,10", "--suites", "exact,spectrum", "--out",
                          path});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = load(path);
  EXPECT_EQ(rep.at("schema"), relqm::cli::kReportSchema);
  EXPECT_EQ(rep.at("config").at("class"), "massive_pm_1");
  EXPECT_EQ(rep.at("config").at("n"), (std::vector<int>{8, 10}));
  EXPECT_TRUE(rep.at("summary").at("all_pass").get<bool>());

  const std::string again = tmp("exact_again.json");
  ASSERT_EQ(run_cli({"verify", "--from-report", path, "--out", again}).code, 0);
  const json rep2 = load(again);
  EXPECT_EQ(rep2.at("checks").dump(), rep.at("checks").dump());
  json c1 = rep.at("config"), c2 = rep2.at("config");
  c1.erase("out");
  c2.erase("out");
  EXPECT_EQ(c1, c2);
}

TEST(Cli, ReadBackRejectsUnknownFields) {
  const std::string path = tmp("spectrum.json");
  ASSERT_EQ(run_cli({"verify", "--class", "massive_plus", "--n", "8,10", "--suites", "spectrum", "--out", path}).code, 0);
  json rep = load(path);
  rep["config"]["surprise"] = 1;
  const std::string bad = tmp("spectrum_bad.json");
  std::ofstream(bad) << rep.dump();
  EXPECT_EQ(run_cli({"verify", "--from-report", bad}).code, 2);
  rep = load(path);
  rep["schema"] = "relqm.report/99";
  std::ofstream(bad, std::ios::trunc) << rep.dump();
  EXPECT_EQ(run_cli({"verify", "--from-report", bad}).code, 2);
}

// The coarsest grids are still dominated by discretization error, so the
// expected-obstruction run uses the finer pair.
TEST(Cli, ObstructedCovarianceFailsUnlessExpected) {
  const std::string plain = tmp("m2_cov.json");
  const auto r = run_cli(
      {"verify", "--class", "massless_pm", "--m", "2", "--n", "12,16", "--suites", "covariance", "--out", plain});
  EXPECT_EQ(r.code, 1);
  const json rep = load(plain);
  EXPECT_FALSE(rep.at("summary").at("all_pass").get<bool>());

  const std::string expected = tmp("m2_cov_expected.json");
  run_cli({"verify", "--class", "massless_pm", "--m", "2", "--n", "24,32", "--suites", "covariance", "--expect",
           "obstructed", "--out", expected});
  const json rep_expected = load(expected);
  const json* jq = find_check(rep_expected, "covariance:[J_j,Q_k]");
  ASSERT_NE(jq, nullptr);
  EXPECT_EQ(jq->at("kind"), "lower_bound");
  EXPECT_TRUE(jq->at("pass").get<bool>());
}

TEST(Cli, EvolveWritesTrajectoryCsv) {
  const std::string path = tmp("traj.csv");
  ASSERT_EQ(run_cli({"evolve", "--class", "massive_plus", "--n", "16", "--steps", "8", "--t-max", "1", "--out", path})
                .code,
            0);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,Q1,Q2,Q3,P1,P2,P3,P0,E_kin,norm");
  std::vector<double> norms;
  while (std::getline(in, line)) norms.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  ASSERT_EQ(norms.size(), 9u);
  for (double v : norms) EXPECT_NEAR(v, norms.front(), 1e-10);
}

TEST(Cli, EvolveKgSlicesAreNonnegative) {
  const std::string dir = tmp("kg_slices");
  fs::remove_all(dir);
  ASSERT_EQ(run_cli({"evolve", "--class", "massive_pm_1", "--n", "16", "--steps", "2", "--t-max", "0.5", "--kg",
                     "--kg-dir", dir, "--out", tmp("kg_traj.csv")})
                .code,
            0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++files;
    std::ifstream in(e.path());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) EXPECT_GE(std::stod(line.substr(line.rfind(',') + 1)), 0.0);
  }
  EXPECT_EQ(files, 3);
  EXPECT_EQ(run_cli({"evolve", "--class", "massive_plus", "--n", "16", "--kg", "--kg-dir", dir}).code, 2);
}
