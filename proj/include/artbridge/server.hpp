#pragma once

#include <cstdint>
#include <memory>

#include "artbridge/config.hpp"
#include "artbridge/pipeline.hpp"

namespace artbridge {

// WebSocket front end for an Engine. Each text frame carries one wire
// message; replies and session events go back on the connection that
// currently owns the session (the last one to address it). Sessions whose
// owner disconnects are closed after the configured grace period unless
// another connection claims them first.
class Server {
public:
  explicit Server(ServerConfig cfg, EngineOptions engine_opts = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts serving on background threads. Port 0 picks a free port.
  void start();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

  std::uint16_t port() const;
  Engine& engine();
  std::size_t connection_count() const;

  struct Impl;

private:
  std::shared_ptr<Impl> impl_;
};

} // namespace artbridge
