#include "artbridge/backend.hpp"

#include "artbridge/error.hpp"
#include "artbridge/image_ops.hpp"
#include "artbridge/remote_backend.hpp"

namespace artbridge {

void validate(const BackendConfig& cfg) {
  if (cfg.kind == BackendKind::Remote && cfg.endpoint.empty())
    throw Error(ErrorCode::InvalidConfig, "remote backend requires an endpoint");
  if (!(cfg.timeout_seconds > 0))
    throw Error(ErrorCode::InvalidConfig, "backend timeout must be positive");
  if (cfg.max_concurrency == 0)
    throw Error(ErrorCode::InvalidConfig, "backend concurrency cap must be positive");
  if (cfg.output_size == 0)
    throw Error(ErrorCode::InvalidConfig, "backend output size must be positive");
}

void validate(const StyleRequest& req) {
  if (req.image.empty()) throw Error(ErrorCode::InvalidInput, "stylize: empty image");
  if (!(req.strength >= 0.0 && req.strength <= 1.0))
    throw Error(ErrorCode::InvalidInput, "stylize: strength must lie in [0, 1]",
                {{"strength", req.strength}});
  if (req.prompt.size() > kMaxPromptBytes)
    throw Error(ErrorCode::InvalidInput, "prompt exceeds 2000 bytes",
                {{"bytes", req.prompt.size()}});
}

void validate(const StyleLearnRequest& req) {
  if (req.reference.empty())
    throw Error(ErrorCode::InvalidReference, "style_learn: empty reference image");
  if (req.prompt.size() > kMaxPromptBytes)
    throw Error(ErrorCode::InvalidInput, "prompt exceeds 2000 bytes",
                {{"bytes", req.prompt.size()}});
}

std::string to_string(BackendKind kind) {
  return kind == BackendKind::Mock ? "mock" : "remote";
}

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "mock") return BackendKind::Mock;
  if (s == "remote") return BackendKind::Remote;
  throw Error(ErrorCode::InvalidConfig, "unknown backend kind '" + s + "'");
}

nlohmann::json to_json(const BackendConfig& cfg) {
  return {{"kind", to_string(cfg.kind)},
          {"endpoint", cfg.endpoint},
          {"api_key_env", cfg.api_key_env},
          {"timeout_seconds", cfg.timeout_seconds},
          {"max_retries", cfg.max_retries},
          {"retry_backoff_ms", cfg.retry_backoff_ms},
          {"max_concurrency", cfg.max_concurrency},
          {"output_size", cfg.output_size}};
}

BackendConfig backend_config_from_json(const nlohmann::json& j, BackendConfig cfg) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "backend config must be an object");
  try {
    if (j.contains("kind")) cfg.kind = backend_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("endpoint")) cfg.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("api_key_env")) cfg.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("timeout_seconds")) cfg.timeout_seconds = j["timeout_seconds"].get<double>();
    if (j.contains("max_retries")) cfg.max_retries = j["max_retries"].get<std::uint32_t>();
    if (j.contains("retry_backoff_ms")) cfg.retry_backoff_ms = j["retry_backoff_ms"].get<std::uint32_t>();
    if (j.contains("max_concurrency")) cfg.max_concurrency = j["max_concurrency"].get<std::uint32_t>();
    if (j.contains("output_size")) cfg.output_size = j["output_size"].get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed backend config: ") + e.what());
  }
  return cfg;
}

ColorRGBA mean_opaque_color(const RasterImage& img) {
  std::uint64_t sum[3] = {0, 0, 0};
  std::uint64_t count = 0;
  const auto s = img.samples();
  for (std::size_t i = 0; i < s.size(); i += 4) {
    if (s[i + 3] == 0) continue;
    sum[0] += s[i];
    sum[1] += s[i + 1];
    sum[2] += s[i + 2];
    ++count;
  }
  if (count == 0)
    throw Error(ErrorCode::InvalidReference, "reference image has no opaque pixels");
  auto mean = [&](int c) {
    return static_cast<std::uint8_t>((2 * sum[c] + count) / (2 * count));
  };
  return {mean(0), mean(1), mean(2), 255};
}

RasterImage MockBackend::stylize(const StyleRequest& req) {
  validate(req);
  return mock_stylize(req.image, req.strength, req.seed, hash64(req.prompt));
}

RasterImage MockBackend::style_learn(const StyleLearnRequest& req) {
  validate(req);
  const auto tint = mean_opaque_color(req.reference);
  return mock_style_field(output_size_, output_size_, req.seed, hash64(req.prompt), tint);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
  validate(cfg);
  if (cfg.kind == BackendKind::Mock)
    return std::make_unique<MockBackend>(cfg.output_size, cfg.max_concurrency);
  return std::make_unique<RemoteBackend>(cfg);
}

HealthReport health_check(const BackendConfig& cfg) {
  try {
    return make_backend(cfg)->health();
  } catch (const Error& e) {
    return {false, 0.0, "config", e.what()};
  }
}

} // namespace artbridge
