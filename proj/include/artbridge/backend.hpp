#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "artbridge/image.hpp"
#include "artbridge/noise.hpp"

namespace artbridge {

inline constexpr std::size_t kMaxPromptBytes = 2000;

struct StyleRequest {
  RasterImage image;
  std::string prompt;
  double strength = 0.5; // 0 keeps the input, 1 departs from it fully
  Seed seed = 0;
};

struct StyleLearnRequest {
  RasterImage reference;
  std::string prompt;
  Seed seed = 0;
};

enum class BackendKind { Mock, Remote };

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::string endpoint;                        // remote only, e.g. http://host:port/prefix
  std::string api_key_env = "ARTBRIDGE_API_KEY"; // name of the variable, never the key
  double timeout_seconds = 30.0;
  std::uint32_t max_retries = 2;
  std::uint32_t retry_backoff_ms = 250;        // doubles after every failed attempt
  std::uint32_t max_concurrency = 4;
  std::uint32_t output_size = 256;             // style_learn output is output_size^2

  friend bool operator==(const BackendConfig&, const BackendConfig&) = default;
};

// Throws InvalidConfig.
void validate(const BackendConfig& cfg);
void validate(const StyleRequest& req);
void validate(const StyleLearnRequest& req);

nlohmann::json to_json(const BackendConfig& cfg);
// Missing keys keep their defaults; `base` supplies them.
BackendConfig backend_config_from_json(const nlohmann::json& j, BackendConfig base = {});
std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

struct HealthReport {
  bool healthy = false;
  double latency_ms = 0.0;
  std::string error_class; // "", "config", "connection", "timeout", "http_status", "protocol"
  std::string message;
};

// Thread-safe: concurrent calls are allowed on one instance.
class Backend {
public:
  virtual ~Backend() = default;
  virtual RasterImage stylize(const StyleRequest& req) = 0;
  virtual RasterImage style_learn(const StyleLearnRequest& req) = 0;
  virtual HealthReport health() = 0;
  virtual std::uint32_t concurrency() const = 0;
};

class MockBackend final : public Backend {
public:
  explicit MockBackend(std::uint32_t output_size = 256, std::uint32_t concurrency = 4)
      : output_size_(output_size), concurrency_(concurrency) {}

  RasterImage stylize(const StyleRequest& req) override;
  RasterImage style_learn(const StyleLearnRequest& req) override;
  HealthReport health() override { return {true, 0.0, "", ""}; }
  std::uint32_t concurrency() const override { return concurrency_; }

private:
  std::uint32_t output_size_;
  std::uint32_t concurrency_;
};

// Rounded mean RGB of the opaque pixels; throws InvalidReference if none.
ColorRGBA mean_opaque_color(const RasterImage& img);

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

// Never throws; configuration problems are reported with error_class "config".
HealthReport health_check(const BackendConfig& cfg);

} // namespace artbridge
