#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "isotruss/isotruss.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAborted = 1;
constexpr int kExitUsage = 2;

std::string default_config() {
  const char* env = std::getenv("ISOTRUSS_CONFIG");
  return env && *env ? env : "solar";
}

int report(int status, const char* what) {
  std::fprintf(stderr, "isotruss %s: %s: %s\n", what, isotruss_status_name(status),
               isotruss_last_error());
  return kExitUsage;
}

int cmd_run(const std::string& config, const std::string& script, double dt,
            const std::string& out, const std::string& limits) {
  int aborted = 0;
  const int st = isotruss_run(config.c_str(), script.c_str(), dt, out.c_str(),
                              limits.empty() ? nullptr : limits.c_str(), &aborted);
  if (st != ISOTRUSS_OK) return report(st, "run");
  if (aborted) {
    std::fprintf(stderr, "isotruss run: aborted: %s\n", isotruss_last_error());
    return kExitAborted;
  }
  return kExitOk;
}

int cmd_metrics(const std::string& config) {
  size_t needed = 0;
  int st = isotruss_metrics(config.c_str(), nullptr, 0, &needed);
  if (st != ISOTRUSS_ERR_BUFFER_TOO_SMALL) return report(st, "metrics");
  std::vector<char> buf(needed);
  st = isotruss_metrics(config.c_str(), buf.data(), buf.size(), &needed);
  if (st != ISOTRUSS_OK) return report(st, "metrics");
  std::fputs(buf.data(), stdout);
  return kExitOk;
}

int cmd_serve(const std::string& config, const std::string& host, int port) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  isotruss_server* server = nullptr;
  int st = isotruss_server_create(config.c_str(), host.c_str(), port, &server);
  if (st != ISOTRUSS_OK) return report(st, "serve");
  st = isotruss_server_start(server);
  if (st != ISOTRUSS_OK) {
    isotruss_server_destroy(server);
    return report(st, "serve");
  }
  int bound = 0;
  isotruss_server_port(server, &bound);
  std::printf("listening on %s:%d\n", host.c_str(), bound);
  std::fflush(stdout);
  int sig = 0;
  sigwait(&set, &sig);
  isotruss_server_stop(server);
  isotruss_server_destroy(server);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and session server for isoperimetric truss robots"};
  app.require_subcommand(1);
  std::string config = default_config();
  app.add_option("--config", config, "single, solar, locomotion or a config file (env ISOTRUSS_CONFIG)");

  std::string script, out, limits;
  double dt = 0.0;
  auto* run = app.add_subcommand("run", "run a motion script and write its trajectory");
  run->add_option("--config", config, "configuration name or file");
  run->add_option("--script", script, "script file")->required();
  run->add_option("--out", out, "trajectory CSV path")->required();
  run->add_option("--dt", dt, "integration step, s (default from config)")
      ->check(CLI::PositiveNumber);
  run->add_option("--limits", limits, "feasibility limits file");

  auto* metrics = app.add_subcommand("metrics", "print geometry, power and mass figures");
  metrics->add_option("--config", config, "configuration name or file");

  std::string host = "127.0.0.1";
  int port = 7878;
  auto* serve = app.add_subcommand("serve", "serve the session protocol over TCP");
  serve->add_option("--config", config, "configuration name or file");
  serve->add_option("--port", port, "TCP port, 0 picks a free one")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "listen address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*run) return cmd_run(config, script, dt, out, limits);
  if (*metrics) return cmd_metrics(config);
  if (*serve) return cmd_serve(config, host, port);
  return kExitUsage;
}
