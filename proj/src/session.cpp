#include "isotruss/session.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <limits>
#include <list>
#include <mutex>
#include <thread>
#include <variant>

#include <nlohmann/json.hpp>

#include "isotruss/error.hpp"

namespace isotruss {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json envelope(const char* type) { return json{{"v", kProtocolVersion}, {"type", type}}; }

std::string ack(std::int64_t seq, bool ok, const std::string& error = {}) {
  json m = envelope("ack");
  m["seq"] = seq;
  m["ok"] = ok;
  if (!ok) m["error"] = error;
  return m.dump();
}

std::string event(const std::string& kind, const std::string& message,
                  std::optional<ErrorCode> code = std::nullopt) {
  json m = envelope("event");
  m["kind"] = kind;
  m["message"] = message;
  if (code) m["code"] = to_string(*code);
  return m.dump();
}

std::string event_kind(ErrorCode code) {
  switch (code) {
    case ErrorCode::LimitViolation:
    case ErrorCode::SpeedCap:
    case ErrorCode::Stability:
      return "limit";
    case ErrorCode::Infeasible:
    case ErrorCode::RankDeficient:
    case ErrorCode::Consistency:
      return "infeasible";
    default:
      return "error";
  }
}

// A one-step script for a jog command.
MotionScript jog_script(int node, const Eigen::Vector3d& v, std::vector<int> fixed, double dt) {
  MotionScript s;
  s.name = "jog";
  s.segments.push_back({"jog", [=](const RobotModel&, const TrussState&) {
                          Phase p;
                          p.name = "jog";
                          p.duration = dt;
                          p.generate = [=](const PhaseContext&) {
                            return jog_constraints(node, v, fixed);
                          };
                          p.abort.stability = true;
                          return std::vector<Phase>{p};
                        }});
  return s;
}

}  // namespace

// ---------------------------------------------------------------- session

Session::Session(SimulationConfig config) { reset(std::move(config)); }

void Session::reset(SimulationConfig config) {
  auto robot = std::make_unique<RobotModel>(config.build());
  runner_.reset();
  config_ = std::move(config);
  robot_ = std::move(robot);
  state_ = robot_->initial;
  fixed_ = robot_->roles.ground;
  phase_ = "idle";
  paused_ = false;
}

std::shared_ptr<const StateSnapshot> Session::make_snapshot() const {
  auto s = std::make_shared<StateSnapshot>();
  const auto& topo = robot_->topology;
  s->tick = tick_;
  s->time = time_;
  s->phase = phase_;
  s->running = runner_ != nullptr;
  s->paused = paused_;
  s->state = state_;
  s->lengths = edge_lengths(state_.x, topo, config_.tol);
  const FeasibilityReport feas = check_feasibility(state_, topo, config_.limits);
  s->triangle_margins = Eigen::VectorXd::Constant(topo.triangle_count(),
                                                  std::numeric_limits<double>::infinity());
  for (const auto& e : feas.edges) {
    double& m = s->triangle_margins(e.triangle);
    m = std::min({m, e.lower, e.upper});
  }
  s->drift.resize(topo.triangle_count());
  for (int t = 0; t < topo.triangle_count(); ++t) {
    const double c = state_.perimeter(t);
    s->drift(t) = std::abs(s->lengths.segment<3>(3 * t).sum() - c) / c;
  }
  s->stability = stability(state_, robot_->node_masses, config_.stability);
  s->fixed_nodes = fixed_;
  return s;
}

std::shared_ptr<const StateSnapshot> Session::snapshot() const { return make_snapshot(); }

std::string Session::hello(ClientRole role) const {
  const auto& topo = robot_->topology;
  json m = envelope("hello");
  m["role"] = role == ClientRole::Writer ? "writer" : "read_only";
  m["configuration"] = config_.configuration;
  m["nodes"] = topo.node_count();
  json edges = json::array();
  for (const auto& e : topo.edges()) edges.push_back({e.tail, e.head});
  m["edges"] = edges;
  json virt = json::array();
  for (const auto& e : topo.virtual_edges()) virt.push_back({e.a, e.b});
  m["virtual_edges"] = virt;
  json tris = json::array();
  for (const auto& t : topo.triangles()) tris.push_back(t.cycle);
  m["triangles"] = tris;
  m["telemetry_hz"] = config_.telemetry_hz;
  m["dt"] = config_.tol.dt;
  m["sweep_limit_deg"] = config_.limits.sweep_limit_deg;
  return m.dump();
}

SessionOutput Session::handle(const std::string& text, ClientRole role) {
  SessionOutput out;
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::exception& e) {
    out.replies.push_back(event("error", std::string("malformed message: ") + e.what(),
                                ErrorCode::Parse));
    return out;
  }
  if (!msg.is_object() || !msg.contains("seq") || !msg["seq"].is_number_integer() ||
      !msg.contains("type") || !msg["type"].is_string()) {
    out.replies.push_back(event("error", "message needs integer 'seq' and string 'type'",
                                ErrorCode::Parse));
    return out;
  }
  const std::int64_t seq = msg["seq"].get<std::int64_t>();
  auto reject = [&](const std::string& kind, const std::string& why, ErrorCode code) {
    out.replies.push_back(ack(seq, false, why));
    out.replies.push_back(event(kind, why, code));
  };
  if (!msg.contains("v") || !msg["v"].is_number_integer() ||
      msg["v"].get<int>() != kProtocolVersion) {
    reject("error", "missing or unsupported protocol version 'v'", ErrorCode::Version);
    return out;
  }
  const std::string type = msg["type"].get<std::string>();
  if (role == ClientRole::ReadOnly) {
    reject("read_only", "this client is read-only; '" + type + "' ignored",
           ErrorCode::InvalidArgument);
    return out;
  }
  try {
    if (type == "load_config") {
      if (!msg.contains("config")) throw Error(ErrorCode::Parse, "load_config needs 'config'");
      const json& c = msg["config"];
      SimulationConfig cfg = c.is_string() ? resolve_config(c.get<std::string>())
                                           : parse_config(c.dump());
      reset(std::move(cfg));
      out.replies.push_back(ack(seq, true));
      out.reloaded = true;
    } else if (type == "start_script") {
      if (runner_) throw Error(ErrorCode::InvalidArgument, "a script is already running");
      MotionScript script;
      if (msg.contains("script")) {
        const json& s = msg["script"];
        script = parse_script(s.is_string() ? s.get<std::string>() : s.dump(), config_.limits);
      } else if (msg.contains("script_file")) {
        script = load_script(msg["script_file"].get<std::string>(), config_.limits);
      } else {
        throw Error(ErrorCode::Parse, "start_script needs 'script' or 'script_file'");
      }
      runner_ = std::make_unique<ScriptRunner>(std::move(script), *robot_, state_,
                                               config_.run_options());
      paused_ = false;
      phase_ = "start";
      out.replies.push_back(ack(seq, true));
    } else if (type == "jog") {
      if (runner_) throw Error(ErrorCode::InvalidArgument, "jog rejected while a script runs");
      const int node = msg.at("node").get<int>();
      const auto v = msg.at("velocity").get<std::vector<double>>();
      if (v.size() != 3) throw Error(ErrorCode::Parse, "velocity needs three components");
      if (node < 0 || node >= robot_->topology.node_count()) {
        throw Error(ErrorCode::NodeOutOfRange, "node " + std::to_string(node) + " out of range");
      }
      if (std::find(fixed_.begin(), fixed_.end(), node) != fixed_.end()) {
        throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(node) + " is fixed");
      }
      RunOptions o = config_.run_options();
      o.land_on_limit = false;
      ScriptRunner jog(jog_script(node, {v[0], v[1], v[2]}, fixed_, o.dt), *robot_, state_, o);
      const auto f = jog.step();
      if (!f || jog.abort()) {
        const AbortReason r = jog.abort().value_or(AbortReason{ErrorCode::Aborted, "jog produced no step", "jog", 0});
        reject(event_kind(r.code), r.message, r.code);
        return out;
      }
      state_ = f->state;
      time_ += f->dt;
      phase_ = "jog";
      out.replies.push_back(ack(seq, true));
    } else if (type == "set_fixed_nodes") {
      const auto nodes = msg.at("nodes").get<std::vector<int>>();
      for (int n : nodes) {
        if (n < 0 || n >= robot_->topology.node_count()) {
          throw Error(ErrorCode::NodeOutOfRange, "node " + std::to_string(n) + " out of range");
        }
      }
      fixed_ = nodes;
      out.replies.push_back(ack(seq, true));
    } else if (type == "pause" || type == "resume") {
      if (!runner_) throw Error(ErrorCode::InvalidArgument, "no script is running");
      paused_ = type == "pause";
      out.replies.push_back(ack(seq, true));
    } else if (type == "abort") {
      if (!runner_) throw Error(ErrorCode::InvalidArgument, "no script is running");
      runner_.reset();
      paused_ = false;
      phase_ = "idle";
      out.replies.push_back(ack(seq, true));
      out.broadcasts.push_back(event("abort", "script aborted by client", ErrorCode::Aborted));
    } else {
      throw Error(ErrorCode::Parse, "unknown message type '" + type + "'");
    }
  } catch (const Error& e) {
    reject(event_kind(e.code()), e.what(), e.code());
  } catch (const json::exception& e) {
    reject("error", std::string("malformed message: ") + e.what(), ErrorCode::Parse);
  }
  return out;
}

SessionOutput Session::tick() {
  SessionOutput out;
  std::optional<std::string> after;
  if (runner_ && !paused_) {
    if (auto f = runner_->step()) {
      state_ = f->state;
      time_ += f->dt;
      phase_ = f->phase;
    }
    if (runner_->abort()) {
      const AbortReason& r = *runner_->abort();
      after = event(r.code == ErrorCode::LimitViolation ? "limit" : "abort",
                    r.message + " (phase " + r.phase + ")", r.code);
      runner_.reset();
      phase_ = "idle";
    } else if (runner_->done()) {
      after = event("finished", "script completed");
      runner_.reset();
      phase_ = "idle";
    }
  }
  ++tick_;
  out.frame = make_snapshot();
  if (after) out.broadcasts.push_back(*after);
  return out;
}

std::string encode_state_frame(const StateSnapshot& s) {
  json m = envelope("state_frame");
  m["tick"] = s.tick;
  m["time"] = s.time;
  m["phase"] = s.phase;
  m["running"] = s.running;
  m["paused"] = s.paused;
  m["x"] = vec(s.state.x);
  m["d"] = vec(s.state.d);
  m["lengths"] = vec(s.lengths);
  m["triangle_margins"] = vec(s.triangle_margins);
  m["drift"] = vec(s.drift);
  m["fixed_nodes"] = s.fixed_nodes;
  json hull = json::array();
  for (const auto& p : s.stability.hull) hull.push_back({p.x(), p.y()});
  m["stability"] = {{"margin", s.stability.margin},
                    {"com", {s.stability.com.x(), s.stability.com.y(), s.stability.com.z()}},
                    {"contacts", s.stability.contacts},
                    {"hull", hull}};
  return m.dump();
}

std::string frame_message(const std::string& message) {
  if (message.size() > kMaxMessageBytes) {
    throw Error(ErrorCode::InvalidArgument, "message exceeds the size limit");
  }
  const auto n = static_cast<std::uint32_t>(message.size());
  std::string out;
  out.reserve(4 + message.size());
  out.push_back(static_cast<char>(n >> 24));
  out.push_back(static_cast<char>(n >> 16));
  out.push_back(static_cast<char>(n >> 8));
  out.push_back(static_cast<char>(n));
  out += message;
  return out;
}

namespace {

// Pops one complete message from buf, if any. Throws on an oversized prefix.
std::optional<std::string> unframe(std::string& buf) {
  if (buf.size() < 4) return std::nullopt;
  const auto b = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint32_t n = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
                          (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  if (n > kMaxMessageBytes) throw Error(ErrorCode::Parse, "message length prefix too large");
  if (buf.size() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::string msg = buf.substr(4, n);
  buf.erase(0, 4 + static_cast<std::size_t>(n));
  return msg;
}

bool send_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

[[noreturn]] void sys_fail(const std::string& what) {
  throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

}  // namespace

// ---------------------------------------------------------------- server

struct Server::Impl {
  using Item = std::variant<std::string, std::shared_ptr<const StateSnapshot>>;

  struct Conn {
    int fd = -1;
    ClientRole role = ClientRole::ReadOnly;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Item> out;
    std::atomic<bool> closed{false};
    std::thread reader;
    std::thread writer;
  };

  struct Command {
    std::shared_ptr<Conn> from;
    std::string text;
    bool connected = false;  // new connection, send hello
  };

  Session session;
  ServerOptions options;
  double telemetry_hz;
  int listen_fd = -1;
  int bound_port = 0;
  std::atomic<bool> stopping{false};
  std::thread acceptor;
  std::thread loop;

  std::mutex mu;  // guards conns, commands, writer_attached
  std::list<std::shared_ptr<Conn>> conns;
  std::deque<Command> commands;
  bool writer_attached = false;

  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopped = false;

  Impl(SimulationConfig c, ServerOptions o)
      : session(std::move(c)), options(std::move(o)), telemetry_hz(session.config().telemetry_hz) {}

  static void push(const std::shared_ptr<Conn>& c, Item item) {
    {
      std::lock_guard lk(c->mu);
      c->out.push_back(std::move(item));
    }
    c->cv.notify_one();
  }

  void broadcast(const Item& item) {
    std::lock_guard lk(mu);
    for (auto& c : conns) {
      if (!c->closed) push(c, item);
    }
  }

  void write_loop(std::shared_ptr<Conn> c) {
    for (;;) {
      Item item;
      {
        std::unique_lock lk(c->mu);
        c->cv.wait(lk, [&] { return !c->out.empty() || c->closed; });
        if (c->closed && c->out.empty()) {
          ::shutdown(c->fd, SHUT_RDWR);
          return;
        }
        item = std::move(c->out.front());
        c->out.pop_front();
      }
      const std::string text = std::holds_alternative<std::string>(item)
                                   ? std::get<std::string>(item)
                                   : encode_state_frame(*std::get<1>(item));
      if (!send_all(c->fd, frame_message(text))) {
        close_conn(c);
        ::shutdown(c->fd, SHUT_RDWR);
        return;
      }
    }
  }

  void read_loop(std::shared_ptr<Conn> c) {
    std::string buf;
    char chunk[4096];
    while (!c->closed && !stopping) {
      pollfd p{c->fd, POLLIN, 0};
      const int r = ::poll(&p, 1, 100);
      if (r < 0 && errno != EINTR) break;
      if (r <= 0) continue;
      const ssize_t n = ::recv(c->fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      try {
        while (auto msg = unframe(buf)) {
          std::lock_guard lk(mu);
          commands.push_back({c, std::move(*msg), false});
        }
      } catch (const Error& e) {
        push(c, event("error", e.what(), e.code()));
        break;
      }
    }
    close_conn(c);
  }

  // The writer drains what is queued, then shuts the socket down.
  void close_conn(const std::shared_ptr<Conn>& c) {
    bool expected = false;
    if (!c->closed.compare_exchange_strong(expected, true)) return;
    ::shutdown(c->fd, SHUT_RD);
    c->cv.notify_all();
    std::lock_guard lk(mu);
    if (c->role == ClientRole::Writer) writer_attached = false;
  }

  void accept_loop() {
    while (!stopping) {
      pollfd p{listen_fd, POLLIN, 0};
      const int r = ::poll(&p, 1, 100);
      if (r <= 0) continue;
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      timeval send_timeout{2, 0};  // a client that stops reading is dropped
      ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &send_timeout, sizeof send_timeout);
      reap();
      auto c = std::make_shared<Conn>();
      c->fd = fd;
      std::lock_guard lk(mu);
      if (!writer_attached) {
        writer_attached = true;
        c->role = ClientRole::Writer;
      }
      conns.push_back(c);
      // hello is produced on the loop thread so it sees a consistent session
      commands.push_back({c, {}, true});
      c->writer = std::thread([this, c] { write_loop(c); });
      c->reader = std::thread([this, c] { read_loop(c); });
    }
  }

  void reap() {
    std::list<std::shared_ptr<Conn>> dead;
    {
      std::lock_guard lk(mu);
      for (auto it = conns.begin(); it != conns.end();) {
        if ((*it)->closed) {
          dead.push_back(*it);
          it = conns.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& c : dead) {
      c->reader.join();
      c->writer.join();
      ::close(c->fd);
    }
  }

  void run_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / telemetry_hz));
    auto next = clock::now();
    while (!stopping) {
      std::deque<Command> batch;
      {
        std::lock_guard lk(mu);
        batch.swap(commands);
      }
      for (auto& cmd : batch) {
        if (cmd.connected) {
          push(cmd.from, session.hello(cmd.from->role));
          push(cmd.from, session.snapshot());
          continue;
        }
        SessionOutput o = session.handle(cmd.text, cmd.from->role);
        for (auto& r : o.replies) push(cmd.from, std::move(r));
        for (auto& b : o.broadcasts) broadcast(b);
        if (o.reloaded) {
          std::lock_guard lk(mu);
          for (auto& c : conns) push(c, session.hello(c->role));
        }
      }
      SessionOutput o = session.tick();
      broadcast(o.frame);
      for (auto& b : o.broadcasts) broadcast(b);
      next += period;
      std::this_thread::sleep_until(next);
      if (clock::now() > next + 10 * period) next = clock::now();
    }
  }
};

Server::Server(SimulationConfig config, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  auto& s = *impl_;
  if (s.listen_fd >= 0) return;
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) sys_fail("socket");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(s.options.port));
  if (::inet_pton(AF_INET, s.options.host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw Error(ErrorCode::InvalidArgument, "bad listen address " + s.options.host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 16) < 0) {
    const int err = errno;
    ::close(fd);
    errno = err;
    sys_fail("bind/listen on port " + std::to_string(s.options.port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  s.listen_fd = fd;
  s.bound_port = ntohs(addr.sin_port);
  s.loop = std::thread([&s] { s.run_loop(); });
  s.acceptor = std::thread([&s] { s.accept_loop(); });
}

int Server::port() const { return impl_->bound_port; }

void Server::stop() {
  auto& s = *impl_;
  if (s.listen_fd < 0) return;
  s.stopping = true;
  if (s.acceptor.joinable()) s.acceptor.join();
  if (s.loop.joinable()) s.loop.join();
  std::list<std::shared_ptr<Impl::Conn>> conns;
  {
    std::lock_guard lk(s.mu);
    conns = s.conns;
  }
  for (auto& c : conns) s.close_conn(c);
  for (auto& c : conns) {
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
    ::close(c->fd);
  }
  {
    std::lock_guard lk(s.mu);
    s.conns.clear();
  }
  ::close(s.listen_fd);
  s.listen_fd = -1;
  {
    std::lock_guard lk(s.stop_mu);
    s.stopped = true;
  }
  s.stop_cv.notify_all();
}

void Server::wait() {
  auto& s = *impl_;
  std::unique_lock lk(s.stop_mu);
  s.stop_cv.wait(lk, [&] { return s.stopped; });
}

// ---------------------------------------------------------------- client

Client::Client(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) sys_fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw Error(ErrorCode::InvalidArgument, "bad address " + host);
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const int err = errno;
    ::close(fd_);
    errno = err;
    sys_fail("connect to " + host + ":" + std::to_string(port));
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

void Client::send(const std::string& message) { send_raw(frame_message(message)); }

void Client::send_raw(const std::string& bytes) {
  if (!send_all(fd_, bytes)) sys_fail("send");
}

std::optional<std::string> Client::receive(int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    if (auto m = unframe(buffer_)) return m;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - std::chrono::steady_clock::now())
                          .count();
    if (left <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(left));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return std::nullopt;
    char chunk[65536];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace isotruss
