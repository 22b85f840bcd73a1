#include "isotruss/roller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "isotruss/error.hpp"

namespace isotruss {

namespace {

constexpr double kMicro = 1e6;

void check_unit(int unit, const FrameLimits& limits) {
  if (unit < 0 || unit >= limits.unit_count || unit > 255) {
    throw Error(ErrorCode::InvalidArgument, "unit id " + std::to_string(unit) + " out of range");
  }
}

void check_speed(const RollerCommandFrame& f, const FrameLimits& limits) {
  if (f.mode != CommandMode::Velocity) return;
  const double cap = std::floor(limits.speed_cap * kMicro + 1e-9);
  if (std::abs(static_cast<double>(f.value)) > cap) {
    throw Error(ErrorCode::SpeedCap, "velocity " + std::to_string(f.value) +
                                         " um/s exceeds the cap of " + std::to_string(cap) +
                                         " um/s");
  }
}

std::int32_t to_micro(double v) {
  const double m = std::round(v * kMicro);
  if (!std::isfinite(m) || m > std::numeric_limits<std::int32_t>::max() ||
      m < std::numeric_limits<std::int32_t>::min()) {
    throw Error(ErrorCode::InvalidArgument, "command value out of the int32 micrometre range");
  }
  return static_cast<std::int32_t>(m);
}

}  // namespace

double roller_speed_cap(double motor_rpm, double shaft_diameter) {
  return motor_rpm / 60.0 * std::numbers::pi * shaft_diameter;
}

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes, std::uint16_t init) {
  std::uint16_t crc = init;
  for (std::uint8_t b : bytes) {
    crc ^= static_cast<std::uint16_t>(b) << 8;
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
  }
  return crc;
}

FrameBytes encode_frame(const RollerCommandFrame& f, const FrameLimits& limits) {
  if (f.version != kFrameVersion) {
    throw Error(ErrorCode::Version, "unsupported frame version " + std::to_string(f.version));
  }
  if (f.mode != CommandMode::Velocity && f.mode != CommandMode::Position) {
    throw Error(ErrorCode::InvalidArgument, "unknown command mode");
  }
  check_unit(f.unit, limits);
  check_speed(f, limits);
  FrameBytes out{};
  out[0] = f.version;
  out[1] = f.unit;
  out[2] = static_cast<std::uint8_t>(f.mode);
  const auto v = static_cast<std::uint32_t>(f.value);
  out[3] = static_cast<std::uint8_t>(v >> 24);
  out[4] = static_cast<std::uint8_t>(v >> 16);
  out[5] = static_cast<std::uint8_t>(v >> 8);
  out[6] = static_cast<std::uint8_t>(v);
  out[7] = static_cast<std::uint8_t>(f.sequence >> 8);
  out[8] = static_cast<std::uint8_t>(f.sequence);
  const std::uint16_t crc = crc16_ccitt(std::span<const std::uint8_t>(out.data(), 9));
  out[9] = static_cast<std::uint8_t>(crc >> 8);
  out[10] = static_cast<std::uint8_t>(crc);
  return out;
}

RollerCommandFrame decode_frame(std::span<const std::uint8_t> b, const FrameLimits& limits) {
  if (b.size() != kFrameSize) {
    throw Error(ErrorCode::InvalidArgument,
                "frame must be " + std::to_string(kFrameSize) + " bytes, got " +
                    std::to_string(b.size()));
  }
  const std::uint16_t crc = static_cast<std::uint16_t>((b[9] << 8) | b[10]);
  if (crc16_ccitt(b.first(9)) != crc) throw Error(ErrorCode::Checksum, "frame checksum mismatch");
  if (b[0] != kFrameVersion) {
    throw Error(ErrorCode::Version, "unsupported frame version " + std::to_string(b[0]));
  }
  if (b[2] > 1) throw Error(ErrorCode::InvalidArgument, "unknown command mode");
  RollerCommandFrame f;
  f.version = b[0];
  f.unit = b[1];
  f.mode = static_cast<CommandMode>(b[2]);
  const std::uint32_t v = (static_cast<std::uint32_t>(b[3]) << 24) |
                          (static_cast<std::uint32_t>(b[4]) << 16) |
                          (static_cast<std::uint32_t>(b[5]) << 8) | static_cast<std::uint32_t>(b[6]);
  f.value = static_cast<std::int32_t>(v);
  f.sequence = static_cast<std::uint16_t>((b[7] << 8) | b[8]);
  check_unit(f.unit, limits);
  check_speed(f, limits);
  return f;
}

RollerCommandFrame velocity_command(int unit, double velocity, std::uint16_t sequence) {
  if (unit < 0 || unit > 255) throw Error(ErrorCode::InvalidArgument, "unit id out of range");
  return {kFrameVersion, static_cast<std::uint8_t>(unit), CommandMode::Velocity,
          to_micro(velocity), sequence};
}

RollerCommandFrame position_command(int unit, double position, std::uint16_t sequence) {
  if (unit < 0 || unit > 255) throw Error(ErrorCode::InvalidArgument, "unit id out of range");
  return {kFrameVersion, static_cast<std::uint8_t>(unit), CommandMode::Position,
          to_micro(position), sequence};
}

double frame_value(const RollerCommandFrame& f) { return static_cast<double>(f.value) / kMicro; }

double motor_current(double p, const MotorCurrentModel& m) {
  if (!(p >= 0.0)) throw Error(ErrorCode::Domain, "pressure must be non-negative");
  const auto& c = m.coefficients;
  return c[0] + c[1] * p + c[2] * p * p;
}

MotorCurrentModel fit_motor_current(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "a quadratic fit needs at least three samples");
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(samples.size()), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double p = samples[i].first;
    const auto r = static_cast<Eigen::Index>(i);
    A.row(r) << 1.0, p, p * p;
    y(r) = samples[i].second;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 3) throw Error(ErrorCode::InvalidArgument, "samples need three distinct pressures");
  const Eigen::Vector3d c = qr.solve(y);
  return {{c(0), c(1), c(2)}};
}

double battery_endurance(double capacity_ah, double motor_a, double radio_a) {
  if (!(capacity_ah >= 0.0) || !(motor_a >= 0.0) || !(radio_a >= 0.0)) {
    throw Error(ErrorCode::Domain, "capacity and currents must be non-negative");
  }
  const double total = motor_a + radio_a;
  if (!(total > 0.0)) throw Error(ErrorCode::Domain, "endurance undefined at zero current");
  return 60.0 * capacity_ah / total;
}

std::int64_t RollerUnitModel::encoder_count() const {
  return static_cast<std::int64_t>(std::llround(position / encoder_resolution));
}

double RollerUnitModel::reported_position() const {
  return static_cast<double>(encoder_count()) * encoder_resolution;
}

RollerUnitModel step_unit(RollerUnitModel u, double commanded, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
  if (!(u.time_constant > 0.0) || !(u.speed_cap > 0.0) || !(u.encoder_resolution > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "unit parameters must be positive");
  }
  const double target = u.depleted ? 0.0 : std::clamp(commanded, -u.speed_cap, u.speed_cap);
  const double decay = std::exp(-dt / u.time_constant);
  const double v0 = u.velocity;
  // exact solution of v' = (target - v) / tau over the step
  u.position += target * dt + (v0 - target) * u.time_constant * (1.0 - decay);
  u.velocity = target + (v0 - target) * decay;
  u.velocity = std::clamp(u.velocity, -u.speed_cap, u.speed_cap);

  const bool driving = target != 0.0 || v0 != 0.0;
  const double current = (driving ? motor_current(u.pressure_kpa, u.motor) : 0.0) + u.radio_current;
  u.charge_ah -= current * dt / 3600.0;
  if (u.charge_ah <= 0.0) {
    u.charge_ah = 0.0;
    u.depleted = true;
  }
  return u;
}

double settling_bound(const RollerUnitModel& unit, double max_velocity_change) {
  return unit.time_constant * std::abs(max_velocity_change);
}

}  // namespace isotruss
