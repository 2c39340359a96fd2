#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "artbridge/pipeline.hpp"

namespace artbridge {

struct ServerConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 8765;
  double session_grace_seconds = 30.0; // sessions outlive their connection this long
  std::size_t worker_threads = 4;      // stylize job pool
  std::size_t io_threads = 1;
  SessionConfig session;               // defaults for create_session
};

// JSON file:
//   {"bind": "...", "port": N, "session_grace_seconds": S, "worker_threads": N,
//    "io_threads": N, "session": {SessionConfig fields, "backend": {...}}}
// Keys absent from the file keep their defaults. API keys are never read
// from here; only the name of the environment variable holding one.
ServerConfig server_config_from_json(const nlohmann::json& j, ServerConfig base = {});
ServerConfig load_server_config(const std::filesystem::path& path);
nlohmann::json to_json(const ServerConfig& cfg);

} // namespace artbridge
