#include <clocale>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "isotruss/error.hpp"
#include "isotruss/io.hpp"

using namespace isotruss;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Aborted;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("isotruss_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" + name);
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_config("format_version: 1\n");
  EXPECT_EQ(c.configuration, "solar");
  EXPECT_DOUBLE_EQ(c.spec.effective_side, 1.8);
  EXPECT_DOUBLE_EQ(c.telemetry_hz, 20.0);
  EXPECT_DOUBLE_EQ(c.limits.min_length, 0.30);
  EXPECT_DOUBLE_EQ(c.limits.sweep_limit_deg, 35.0);
}

TEST(Config, Overrides) {
  const auto c = parse_config(R"(format_version: 1
configuration: locomotion
limits: {min_length: 0.25, sweep_limit_deg: 30}
power: {capacity_ah: 2.0, radio_current: 0.02}
roller: {time_constant: 0.2, gains: {kp: 4, ki: 1, kd: 0.1}}
telemetry_hz: 50
)");
  EXPECT_EQ(c.configuration, "locomotion");
  EXPECT_DOUBLE_EQ(c.limits.min_length, 0.25);
  EXPECT_DOUBLE_EQ(c.limits.sweep_limit_deg, 30.0);
  EXPECT_DOUBLE_EQ(c.power.capacity_ah, 2.0);
  EXPECT_DOUBLE_EQ(c.roller.charge_ah, 2.0);
  EXPECT_DOUBLE_EQ(c.roller.radio_current, 0.02);
  EXPECT_DOUBLE_EQ(c.roller.time_constant, 0.2);
  EXPECT_DOUBLE_EQ(c.roller.gains.kp, 4.0);
  EXPECT_DOUBLE_EQ(c.telemetry_hz, 50.0);
  EXPECT_EQ(c.build().topology.triangle_count(), 7);
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of([] { parse_config("configuration: solar\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_config("format_version: 2\n"); }), ErrorCode::Version);
  EXPECT_EQ(code_of([] { parse_config("format_version: 1\nrobbot: {}\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_config("format_version: 1\nroller: {time_constant: -1}\n"); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_config("format_version: 1\nconfiguration: hexapod\n"); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_config("format_version: 1\ntelemetry_hz: fast\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { resolve_config("/nonexistent/config.yaml"); }), ErrorCode::Io);
}

TEST(Config, SerializeRoundTrip) {
  auto c = parse_config("format_version: 1\nconfiguration: single\nroller: {time_constant: 0.25}\n");
  c.power.motor.coefficients = {0.9, 0.0181, 1.1e-4};
  const auto back = parse_config(serialize_config(c));
  EXPECT_EQ(back.configuration, "single");
  EXPECT_DOUBLE_EQ(back.roller.time_constant, 0.25);
  EXPECT_EQ(back.power.motor.coefficients, c.power.motor.coefficients);
  EXPECT_DOUBLE_EQ(back.spec.tube_length, c.spec.tube_length);
  EXPECT_DOUBLE_EQ(back.limits.half_margin, c.limits.half_margin);
  EXPECT_EQ(serialize_config(back), serialize_config(c));
}

TEST(Config, FileResolution) {
  const auto p = temp_path("cfg.yaml");
  {
    std::ofstream f(p);
    f << "format_version: 1\nconfiguration: single\n";
  }
  EXPECT_EQ(resolve_config(p.string()).configuration, "single");
  EXPECT_EQ(resolve_config("locomotion").configuration, "locomotion");
  std::filesystem::remove(p);
}

TEST(Limits, File) {
  const auto l = parse_limits("format_version: 1\nmin_length: 0.4\n");
  EXPECT_DOUBLE_EQ(l.min_length, 0.4);
  EXPECT_DOUBLE_EQ(l.half_margin, 0.02);
  EXPECT_EQ(code_of([] { parse_limits("format_version: 1\nmax_length: 1\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_limits("min_length: 0.4\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { load_limits("/nonexistent/limits.yaml"); }), ErrorCode::Io);
}

TEST(Script, AllGenerators) {
  const auto s = parse_script(R"(format_version: 1
name: everything
steps:
  - squat_extend: {direction: down, target_height: 1.5, base: sliding}
  - twist: {plane: top, angle_deg: 30, direction: cw}
  - tilt: {axis: edge, nodes: [0, 1], angle_deg: 20, recenter: false}
  - tilt: {axis: joint, index: 2, angle_deg: 10}
  - sweep: {angle_deg: -20}
  - locomotion_cycle: {step_length: 0.5, repeat: 2}
)");
  EXPECT_EQ(s.name, "everything");
  const auto gait = parse_script("format_version: 1\nsteps:\n  - locomotion_cycle: {step_length: 0.5, repeat: 2}\n");
  EXPECT_EQ(s.segments.size(), 5u + gait.segments.size());
}

TEST(Script, JsonAccepted) {
  const auto s = parse_script(R"({"format_version": 1, "steps": [{"twist": {"angle_deg": 90}}]})");
  EXPECT_EQ(s.segments.size(), 1u);
}

TEST(Script, Errors) {
  EXPECT_EQ(code_of([] { parse_script("steps: []\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_script("format_version: 3\nsteps: []\n"); }), ErrorCode::Version);
  EXPECT_EQ(code_of([] { parse_script("format_version: 1\nsteps:\n  - hop: {}\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_script("format_version: 1\nsteps:\n  - twist: {angle: 3}\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] {
              parse_script("format_version: 1\nsteps:\n  - squat_extend: {direction: sideways}\n");
            }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] {
              parse_script("format_version: 1\nsteps:\n  - twist: {angle_deg: 3}\n    sweep: {}\n");
            }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { load_script("/nonexistent/script.yaml"); }), ErrorCode::Io);
}

TEST(Script, SweepLimit) {
  EXPECT_EQ(code_of([] { parse_script("format_version: 1\nsteps:\n  - sweep: {angle_deg: 40}\n"); }),
            ErrorCode::LimitViolation);
  EXPECT_EQ(code_of([] {
              parse_script(
                  "format_version: 1\nsteps:\n  - sweep: {angle_deg: 30}\n  - sweep: {angle_deg: 10}\n");
            }),
            ErrorCode::LimitViolation);
  EXPECT_NO_THROW(parse_script(
      "format_version: 1\nsteps:\n  - sweep: {angle_deg: 35}\n  - sweep: {angle_deg: -35}\n  - sweep: {angle_deg: -35}\n"));
  FeasibilityLimits wide;
  wide.sweep_limit_deg = 45;
  EXPECT_NO_THROW(parse_script("format_version: 1\nsteps:\n  - sweep: {angle_deg: 40}\n", wide));
}

TEST(Number, Format) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(-2.5), "-2.5");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
}

TEST(Number, LocaleIndependent) {
  if (!std::setlocale(LC_NUMERIC, "de_DE.UTF-8")) GTEST_SKIP() << "de_DE locale unavailable";
  EXPECT_EQ(format_number(0.5), "0.5");
  std::setlocale(LC_NUMERIC, "C");
}

TEST(Trajectory, WriteReadReplay) {
  const auto r = build_solar_array();
  const auto t = run_script(script_twist(TwistPlane::Middle, 30, Rotation::Ccw), r, r.initial);
  ASSERT_TRUE(t.completed());
  std::stringstream ss;
  write_trajectory(ss, r, t);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), trajectory_header(r));
  const auto rows = read_trajectory(ss, r);
  ASSERT_EQ(rows.size(), t.frames.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    EXPECT_EQ(row.tick, t.frames[i].tick);
    EXPECT_LT((row.x - t.frames[i].state.x).cwiseAbs().maxCoeff(), 1e-8);
    TrussState s = r.initial;
    s.x = row.x;
    s.d = row.d;
    const Eigen::VectorXd from_x = edge_lengths(row.x, r.topology);
    const Eigen::VectorXd from_d = implied_lengths(s, r.topology);
    EXPECT_LT((from_x - from_d).cwiseAbs().maxCoeff(), 1e-6) << "row " << i;
  }
}

TEST(Trajectory, ReadErrors) {
  const auto r = build_single_octahedron();
  std::stringstream bad_header("tick,time\n0,0\n");
  EXPECT_EQ(code_of([&] { read_trajectory(bad_header, r); }), ErrorCode::Parse);
  std::stringstream short_row(trajectory_header(r) + "\n0,0,1\n");
  EXPECT_EQ(code_of([&] { read_trajectory(short_row, r); }), ErrorCode::Parse);
  std::stringstream junk(trajectory_header(r) + "\n" + std::string("0,abc") +
                         std::string(static_cast<std::size_t>(3 * 6 + 6 + 2 + 1), ',') + "\n");
  EXPECT_EQ(code_of([&] { read_trajectory(junk, r); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([&] { read_trajectory("/nonexistent/out.csv", r); }), ErrorCode::Io);
}

TEST(Metrics, SolarReport) {
  const auto m = compute_metrics(resolve_config("solar"));
  EXPECT_NEAR(m.geometry.deployed_volume, 5.50, 0.01);
  EXPECT_NEAR(m.geometry.stow_ratio, 18.3, 0.1);
  EXPECT_NEAR(m.endurance_min, 26.4, 0.1);
  EXPECT_EQ(m.triangles, 6);
  const auto text = format_metrics(m);
  EXPECT_NE(text.find("stow_ratio_label: 1:18.3"), std::string::npos) << text;
  EXPECT_NE(text.find("endurance_min: "), std::string::npos);
}
