#include "artbridge/config.hpp"

#include <fstream>

#include "artbridge/error.hpp"

namespace artbridge {

ServerConfig server_config_from_json(const nlohmann::json& j, ServerConfig cfg) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "server config must be an object");
  for (const char* forbidden : {"api_key", "key", "token"})
    if (j.contains(forbidden) ||
        (j.contains("session") && j["session"].contains("backend") &&
         j["session"]["backend"].contains(forbidden)))
      throw Error(ErrorCode::InvalidConfig,
                  "secrets do not belong in config files; set api_key_env instead");
  try {
    if (j.contains("bind")) cfg.bind_address = j["bind"].get<std::string>();
    if (j.contains("port")) cfg.port = j["port"].get<std::uint16_t>();
    if (j.contains("session_grace_seconds"))
      cfg.session_grace_seconds = j["session_grace_seconds"].get<double>();
    if (j.contains("worker_threads")) cfg.worker_threads = j["worker_threads"].get<std::size_t>();
    if (j.contains("io_threads")) cfg.io_threads = j["io_threads"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed server config: ") + e.what());
  }
  if (j.contains("session")) cfg.session = session_config_from_json(j["session"], cfg.session);
  if (cfg.session_grace_seconds < 0)
    throw Error(ErrorCode::InvalidConfig, "session_grace_seconds must be non-negative");
  if (cfg.worker_threads == 0 || cfg.io_threads == 0)
    throw Error(ErrorCode::InvalidConfig, "thread counts must be positive");
  validate(cfg.session);
  return cfg;
}

ServerConfig load_server_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not JSON: ") + e.what());
  }
  return server_config_from_json(j);
}

nlohmann::json to_json(const ServerConfig& cfg) {
  return {{"bind", cfg.bind_address},
          {"port", cfg.port},
          {"session_grace_seconds", cfg.session_grace_seconds},
          {"worker_threads", cfg.worker_threads},
          {"io_threads", cfg.io_threads},
          {"session", to_json(cfg.session)}};
}

} // namespace artbridge
