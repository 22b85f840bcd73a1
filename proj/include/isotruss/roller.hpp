#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace isotruss {

/// Linear speed of a roller whose shaft of the given diameter turns at rpm.
double roller_speed_cap(double motor_rpm = 60.0, double shaft_diameter = 0.0195);

// ---------------------------------------------------------------- frames
//
// Wire layout, big-endian, 11 bytes:
//   [0]     protocol version
//   [1]     unit id
//   [2]     mode (0 velocity um/s, 1 target position um)
//   [3..6]  value, int32
//   [7..8]  sequence number, uint16
//   [9..10] CRC-16/CCITT (poly 0x1021, init 0xFFFF) over bytes 0..8

inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameSize = 11;

enum class CommandMode : std::uint8_t { Velocity = 0, Position = 1 };

struct RollerCommandFrame {
  std::uint8_t version = kFrameVersion;
  std::uint8_t unit = 0;
  CommandMode mode = CommandMode::Velocity;
  std::int32_t value = 0;  // um/s or um
  std::uint16_t sequence = 0;

  bool operator==(const RollerCommandFrame&) const = default;
};

struct FrameLimits {
  int unit_count = 256;                     // active rollers addressed
  double speed_cap = roller_speed_cap();    // m/s
};

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes, std::uint16_t init = 0xFFFF);

/// Throws SpeedCap for velocities above the cap, InvalidArgument for a bad
/// unit id and Version for an unknown protocol version.
FrameBytes encode_frame(const RollerCommandFrame& frame, const FrameLimits& limits = {});

/// Throws Checksum, Version, InvalidArgument (length, mode, unit) or SpeedCap.
RollerCommandFrame decode_frame(std::span<const std::uint8_t> bytes,
                                const FrameLimits& limits = {});

RollerCommandFrame velocity_command(int unit, double velocity, std::uint16_t sequence);
RollerCommandFrame position_command(int unit, double position, std::uint16_t sequence);

/// Value in SI units (m/s or m).
double frame_value(const RollerCommandFrame& frame);

// ---------------------------------------------------------------- power

/// I(p) = c0 + c1 p + c2 p^2, p in kPa, I in A.
struct MotorCurrentModel {
  std::array<double, 3> coefficients{1.0, 0.017926, 1.0e-4};
};

double motor_current(double pressure_kpa, const MotorCurrentModel& model = {});

/// Least-squares quadratic through (pressure kPa, current A) samples.
MotorCurrentModel fit_motor_current(const std::vector<std::pair<double, double>>& samples);

/// Minutes of continuous operation: 60 * capacity / (motor + radio).
double battery_endurance(double capacity_ah, double motor_a, double radio_a);

// ---------------------------------------------------------------- unit

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

/// One active roller unit. Velocity tracking is first order with time
/// constant `time_constant`, the response a well-tuned PID loop presents
/// to the command layer; `gains` are carried for hardware configs.
struct RollerUnitModel {
  double position = 0.0;                  // m, true arc position
  double velocity = 0.0;                  // m/s
  double speed_cap = roller_speed_cap();
  double encoder_resolution = 1e-4;       // m per count
  double time_constant = 0.1;             // s
  PidGains gains;
  double capacity_ah = 1.3;
  double charge_ah = 1.3;
  double pressure_kpa = 76.0;
  MotorCurrentModel motor;
  double radio_current = 0.0113;          // A
  bool depleted = false;

  std::int64_t encoder_count() const;
  double reported_position() const;
};

RollerUnitModel step_unit(RollerUnitModel unit, double commanded_velocity, double dt);

/// Largest position error of the first-order tracker behind a command that
/// steps by at most `max_velocity_change`.
double settling_bound(const RollerUnitModel& unit, double max_velocity_change);

}  // namespace isotruss
