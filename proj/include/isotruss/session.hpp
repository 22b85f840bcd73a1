#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isotruss/io.hpp"

namespace isotruss {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxMessageBytes = 1u << 20;

/// Immutable view of the session state at a tick boundary.
struct StateSnapshot {
  std::uint64_t tick = 0;
  double time = 0.0;
  std::string phase;
  bool running = false;
  bool paused = false;
  TrussState state;
  Eigen::VectorXd lengths;           // tube edge lengths from x
  Eigen::VectorXd triangle_margins;  // smallest feasibility margin per triangle
  Eigen::VectorXd drift;             // per-triangle |sum L - C| / C
  StabilityReport stability;
  std::vector<int> fixed_nodes;
};

enum class ClientRole { Writer, ReadOnly };

/// Messages produced while handling input or ticking. Replies go to the
/// sender only, broadcasts to every client.
struct SessionOutput {
  std::vector<std::string> replies;
  std::vector<std::string> broadcasts;
  std::shared_ptr<const StateSnapshot> frame;  // set by tick()
  bool reloaded = false;                       // a new config replaced the robot
};

/// The simulation side of a session: owns the single mutable TrussState and
/// applies protocol messages to it. Not thread safe; the server drives it from
/// one loop thread.
class Session {
 public:
  explicit Session(SimulationConfig config = {});

  /// Parses and applies one client message. Malformed input yields an error
  /// event and leaves the session unchanged.
  SessionOutput handle(const std::string& message, ClientRole role);

  /// Advances a running script by one step and emits a state frame.
  SessionOutput tick();

  std::string hello(ClientRole role) const;
  std::shared_ptr<const StateSnapshot> snapshot() const;

  const SimulationConfig& config() const { return config_; }
  const RobotModel& robot() const { return *robot_; }
  const TrussState& state() const { return state_; }
  bool running() const { return runner_ != nullptr; }

 private:
  void reset(SimulationConfig config);
  std::shared_ptr<const StateSnapshot> make_snapshot() const;

  SimulationConfig config_;
  std::unique_ptr<RobotModel> robot_;
  TrussState state_;
  std::vector<int> fixed_;
  std::unique_ptr<ScriptRunner> runner_;
  std::string phase_ = "idle";
  bool paused_ = false;
  std::uint64_t tick_ = 0;
  double time_ = 0.0;
};

/// JSON text of a state frame.
std::string encode_state_frame(const StateSnapshot& snapshot);

/// Wire framing: 4-byte big-endian length followed by the UTF-8 message.
std::string frame_message(const std::string& message);

// ---------------------------------------------------------------- server

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
};

/// TCP endpoint around a Session. A loop thread ticks at the configured
/// telemetry rate, drains queued commands once per tick and publishes
/// snapshots; each client has its own reader and writer thread. The first
/// client to connect while no writer is attached becomes the writer, the
/// others are read-only.
class Server {
 public:
  Server(SimulationConfig config, ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  int port() const;
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Minimal blocking client used by tests and tools.
class Client {
 public:
  Client(const std::string& host, int port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void send(const std::string& message);
  void send_raw(const std::string& bytes);
  /// Next message, or nothing after `timeout_ms` without one.
  std::optional<std::string> receive(int timeout_ms = 2000);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace isotruss
