#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result sh(const std::string& args) {
  const std::string cmd = std::string("'") + ISOTRUSS_CLI + "' " + args + " 2>/dev/null";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  while (const auto n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int st = ::pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("isotruss_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string script(const std::string& name) const {
    return std::string(ISOTRUSS_SCRIPTS_DIR) + "/" + name;
  }
  fs::path dir_;
};

// azimuth of node k about the centroid of nodes a..a+2, from a CSV row
double azimuth(const std::vector<double>& row, int a, int k) {
  double cx = 0, cy = 0;
  for (int n = a; n < a + 3; ++n) {
    cx += row[2 + 3 * n] / 3;
    cy += row[2 + 3 * n + 1] / 3;
  }
  return std::atan2(row[2 + 3 * k + 1] - cy, row[2 + 3 * k] - cx) * 180.0 / M_PI;
}

}  // namespace

TEST_F(Cli, RunTwistWritesTrajectory) {
  const auto out = dir_ / "twist.csv";
  const auto r = sh("run --config solar --script " + script("twist120.yaml") + " --out " + out.string());
  ASSERT_EQ(r.code, 0);
  const auto rows = csv_rows(out);
  ASSERT_GT(rows.size(), 10u);
  double turn = azimuth(rows.back(), 3, 3) - azimuth(rows.front(), 3, 3);
  if (turn < 0) turn += 360;
  EXPECT_NEAR(turn, 120.0, 2.0);
  double top = azimuth(rows.back(), 6, 6) - azimuth(rows.front(), 6, 6);
  EXPECT_LE(std::abs(top), 2.0);
}

TEST_F(Cli, Deterministic) {
  const auto a = dir_ / "a.csv", b = dir_ / "b.csv";
  ASSERT_EQ(sh("run --script " + script("tilt_sweep.yaml") + " --out " + a.string()).code, 0);
  ASSERT_EQ(sh("run --script " + script("tilt_sweep.yaml") + " --out " + b.string()).code, 0);
  const auto ta = slurp(a);
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, slurp(b));
}

TEST_F(Cli, AbortedRunExitsOne) {
  const auto s = dir_ / "squat.yaml";
  std::ofstream(s) << "format_version: 1\nsteps:\n  - squat_extend: {direction: down, speed: 0.1}\n";
  const auto out = dir_ / "squat.csv";
  EXPECT_EQ(sh("run --script " + s.string() + " --out " + out.string()).code, 1);
  EXPECT_TRUE(fs::exists(out));
}

TEST_F(Cli, UsageAndInputErrorsExitTwo) {
  const auto out = dir_ / "x.csv";
  EXPECT_EQ(sh("run --config hexapod --script " + script("twist120.yaml") + " --out " + out.string()).code, 2);
  EXPECT_EQ(sh("run --script " + (dir_ / "missing.yaml").string() + " --out " + out.string()).code, 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(sh("run --out " + out.string()).code, 2);
  EXPECT_EQ(sh("frobnicate").code, 2);
  const auto s = dir_ / "sweep.yaml";
  std::ofstream(s) << "format_version: 1\nsteps:\n  - sweep: {angle_deg: 40}\n";
  EXPECT_EQ(sh("run --script " + s.string() + " --out " + out.string()).code, 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, Metrics) {
  const auto r = sh("metrics --config solar");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("stow_ratio_label: 1:18.3"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("endurance_min: 26.4"), std::string::npos) << r.out;
  EXPECT_EQ(sh("metrics --config nowhere.yaml").code, 2);
}

TEST_F(Cli, ConfigFromEnvironment) {
  const auto r = sh("metrics");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("configuration: solar"), std::string::npos);
  const std::string cmd = std::string("ISOTRUSS_CONFIG=single '") + ISOTRUSS_CLI + "' metrics";
  FILE* p = ::popen(cmd.c_str(), "r");
  ASSERT_TRUE(p);
  std::string out;
  std::array<char, 4096> buf;
  while (const auto n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  EXPECT_EQ(::pclose(p), 0);
  EXPECT_NE(out.find("configuration: single"), std::string::npos) << out;
}
