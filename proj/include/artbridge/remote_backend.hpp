#pragma once

#include <atomic>
#include <semaphore>
#include <string>

#include "artbridge/backend.hpp"

namespace artbridge {

// HTTP client for a hosted diffusion service.
//
//   POST {endpoint}/stylize      {"prompt","image_b64","strength","seed"} -> {"image_b64"}
//   POST {endpoint}/style_learn  {"prompt","image_b64","seed"}            -> {"image_b64"}
//   GET  {endpoint}/health       any 2xx
//
// Images travel as base64 PNG. Transport failures and non-2xx replies are
// retried with exponential backoff; an undecodable 2xx reply is a
// ProtocolError and is not retried.
class RemoteBackend final : public Backend {
public:
  explicit RemoteBackend(BackendConfig cfg);

  RasterImage stylize(const StyleRequest& req) override;
  RasterImage style_learn(const StyleLearnRequest& req) override;
  HealthReport health() override;
  std::uint32_t concurrency() const override { return cfg_.max_concurrency; }

  // Requests issued so far, counting retries.
  std::uint64_t attempts() const { return attempts_.load(); }

private:
  RasterImage post_image(const std::string& route, const nlohmann::json& body);

  BackendConfig cfg_;
  std::string host_;   // scheme://host:port
  std::string prefix_; // path prefix without trailing slash
  std::counting_semaphore<> slots_;
  std::atomic<std::uint64_t> attempts_{0};
};

} // namespace artbridge
