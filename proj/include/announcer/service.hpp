#pragma once

#include "announcer/config.hpp"

#include <atomic>
#include <memory>
#include <optional>
#include <string>

namespace announcer {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8765;                 // 0 picks an ephemeral port
  int wait_clients = 0;            // hold the simulation until this many viewers connect
  double time_scale = 1.0;         // simulated seconds per wall second; 0 runs unthrottled
  std::optional<double> duration;  // simulated seconds; none runs until stop()
  std::size_t outbox_limit = 256;  // queued messages per viewer before snapshots are dropped
};

/// Streams the live announcer to viewers over length-prefixed JSON frames and
/// feeds their feedback back into the engine between ticks.
class Service {
 public:
  Service(EngineConfig config, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts accepting; returns the bound port.
  int start();
  /// Runs the simulation loop on the calling thread until the duration elapses or stop().
  void run();
  void stop();

  int clients() const;
  std::int64_t ticks() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace announcer
