#include "isotruss/isotruss.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "isotruss/error.hpp"
#include "isotruss/io.hpp"
#include "isotruss/session.hpp"

struct isotruss_session {
  isotruss::Session session;
};

struct isotruss_server {
  isotruss::Server server;
};

namespace {

thread_local std::string g_last_error;

int fail(int status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
int guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const isotruss::Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ISOTRUSS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ISOTRUSS_ERR_INTERNAL, e.what());
  }
}

int copy_out(const std::string& text, char* buf, size_t len, size_t* needed) {
  const size_t n = text.size() + 1;
  if (needed) *needed = n;
  if (!buf || len < n) {
    return fail(ISOTRUSS_ERR_BUFFER_TOO_SMALL, "buffer of " + std::to_string(len) +
                                                   " bytes, " + std::to_string(n) + " needed");
  }
  std::memcpy(buf, text.c_str(), n);
  return ISOTRUSS_OK;
}

void require(const void* p, const char* what) {
  if (!p) throw isotruss::Error(isotruss::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

std::string messages(const std::vector<std::string>& a, const std::vector<std::string>& b,
                     const std::string* first = nullptr) {
  nlohmann::json arr = nlohmann::json::array();
  if (first) arr.push_back(nlohmann::json::parse(*first));
  for (const auto& m : a) arr.push_back(nlohmann::json::parse(m));
  for (const auto& m : b) arr.push_back(nlohmann::json::parse(m));
  return arr.dump();
}

}  // namespace

extern "C" {

const char* isotruss_version(void) { return "0.1.0"; }

const char* isotruss_status_name(int status) {
  switch (status) {
    case ISOTRUSS_OK: return "ok";
    case ISOTRUSS_ERR_BUFFER_TOO_SMALL: return "buffer_too_small";
    case ISOTRUSS_ERR_INTERNAL: return "internal";
    default:
      if (status >= 1 && status <= 17) {
        return isotruss::to_string(static_cast<isotruss::ErrorCode>(status));
      }
      return "unknown";
  }
}

const char* isotruss_last_error(void) { return g_last_error.c_str(); }

int isotruss_run(const char* config, const char* script_path, double dt, const char* out_path,
                 const char* limits_path, int* aborted) {
  return guarded([&]() -> int {
    require(config, "config");
    require(script_path, "script path");
    require(out_path, "output path");
    isotruss::SimulationConfig cfg = isotruss::resolve_config(config);
    if (limits_path) cfg.limits = isotruss::load_limits(limits_path, cfg.limits);
    if (dt > 0.0) cfg.tol.dt = dt;
    const isotruss::MotionScript script = isotruss::load_script(script_path, cfg.limits);
    const isotruss::RobotModel robot = cfg.build();
    const isotruss::Trajectory traj =
        isotruss::run_script(script, robot, robot.initial, cfg.run_options());
    const std::string tmp = std::string(out_path) + ".partial";
    try {
      isotruss::write_trajectory(tmp, robot, traj);
      std::filesystem::rename(tmp, out_path);
    } catch (const std::filesystem::filesystem_error& e) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw isotruss::Error(isotruss::ErrorCode::Io, e.what());
    } catch (...) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw;
    }
    if (aborted) *aborted = traj.completed() ? 0 : 1;
    if (!traj.completed()) {
      const auto& r = *traj.abort;
      g_last_error = std::string(isotruss::to_string(r.code)) + " in phase '" + r.phase +
                     "' at tick " + std::to_string(r.tick) + ": " + r.message;
    }
    return ISOTRUSS_OK;
  });
}

int isotruss_metrics(const char* config, char* buf, size_t len, size_t* needed) {
  return guarded([&]() -> int {
    require(config, "config");
    const auto report = isotruss::compute_metrics(isotruss::resolve_config(config));
    return copy_out(isotruss::format_metrics(report), buf, len, needed);
  });
}

int isotruss_endurance(double capacity_ah, double motor_a, double radio_a, double* minutes) {
  return guarded([&]() -> int {
    require(minutes, "minutes");
    *minutes = isotruss::battery_endurance(capacity_ah, motor_a, radio_a);
    return ISOTRUSS_OK;
  });
}

int isotruss_frame_encode(int unit, int mode, double value, uint16_t sequence, uint8_t out[11]) {
  return guarded([&]() -> int {
    require(out, "output");
    isotruss::RollerCommandFrame f;
    if (mode == ISOTRUSS_MODE_VELOCITY) {
      f = isotruss::velocity_command(unit, value, sequence);
    } else if (mode == ISOTRUSS_MODE_POSITION) {
      f = isotruss::position_command(unit, value, sequence);
    } else {
      throw isotruss::Error(isotruss::ErrorCode::InvalidArgument, "unknown frame mode");
    }
    const auto bytes = isotruss::encode_frame(f);
    std::memcpy(out, bytes.data(), bytes.size());
    return ISOTRUSS_OK;
  });
}

int isotruss_frame_decode(const uint8_t* bytes, size_t len, int* unit, int* mode, double* value,
                          uint16_t* sequence) {
  return guarded([&]() -> int {
    require(bytes, "bytes");
    const auto f = isotruss::decode_frame(std::span<const std::uint8_t>(bytes, len));
    if (unit) *unit = f.unit;
    if (mode) *mode = static_cast<int>(f.mode);
    if (value) *value = isotruss::frame_value(f);
    if (sequence) *sequence = f.sequence;
    return ISOTRUSS_OK;
  });
}

int isotruss_session_create(const char* config, isotruss_session** out) {
  return guarded([&]() -> int {
    require(config, "config");
    require(out, "output");
    *out = new isotruss_session{isotruss::Session(isotruss::resolve_config(config))};
    return ISOTRUSS_OK;
  });
}

void isotruss_session_destroy(isotruss_session* session) { delete session; }

int isotruss_session_handle(isotruss_session* session, const char* message, char* buf,
                            size_t len, size_t* needed) {
  return guarded([&]() -> int {
    require(session, "session");
    require(message, "message");
    const auto o = session->session.handle(message, isotruss::ClientRole::Writer);
    std::vector<std::string> extra = o.broadcasts;
    if (o.reloaded) extra.push_back(session->session.hello(isotruss::ClientRole::Writer));
    return copy_out(messages(o.replies, extra), buf, len, needed);
  });
}

int isotruss_session_tick(isotruss_session* session, char* buf, size_t len, size_t* needed) {
  return guarded([&]() -> int {
    require(session, "session");
    const auto o = session->session.tick();
    const std::string frame = isotruss::encode_state_frame(*o.frame);
    return copy_out(messages({}, o.broadcasts, &frame), buf, len, needed);
  });
}

int isotruss_session_node_count(const isotruss_session* session, int* count) {
  return guarded([&]() -> int {
    require(session, "session");
    require(count, "count");
    *count = session->session.robot().topology.node_count();
    return ISOTRUSS_OK;
  });
}

int isotruss_session_positions(const isotruss_session* session, double* out, size_t len) {
  return guarded([&]() -> int {
    require(session, "session");
    require(out, "output");
    const auto& x = session->session.state().x;
    const auto n = static_cast<size_t>(x.size());
    if (len < n) {
      return fail(ISOTRUSS_ERR_BUFFER_TOO_SMALL, std::to_string(n) + " doubles needed");
    }
    std::memcpy(out, x.data(), n * sizeof(double));
    return ISOTRUSS_OK;
  });
}

int isotruss_server_create(const char* config, const char* host, int port,
                           isotruss_server** out) {
  return guarded([&]() -> int {
    require(config, "config");
    require(out, "output");
    if (port < 0 || port > 65535) {
      throw isotruss::Error(isotruss::ErrorCode::InvalidArgument, "port out of range");
    }
    isotruss::ServerOptions o;
    if (host) o.host = host;
    o.port = port;
    *out = new isotruss_server{isotruss::Server(isotruss::resolve_config(config), o)};
    return ISOTRUSS_OK;
  });
}

int isotruss_server_start(isotruss_server* server) {
  return guarded([&]() -> int {
    require(server, "server");
    server->server.start();
    return ISOTRUSS_OK;
  });
}

int isotruss_server_port(const isotruss_server* server, int* port) {
  return guarded([&]() -> int {
    require(server, "server");
    require(port, "port");
    *port = server->server.port();
    return ISOTRUSS_OK;
  });
}

int isotruss_server_stop(isotruss_server* server) {
  return guarded([&]() -> int {
    require(server, "server");
    server->server.stop();
    return ISOTRUSS_OK;
  });
}

void isotruss_server_destroy(isotruss_server* server) { delete server; }

}  // extern "C"
