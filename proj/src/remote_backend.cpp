#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "artbridge/remote_backend.hpp"

#include <cstdlib>
#include <thread>

#include "artbridge/error.hpp"
#include "artbridge/image_ops.hpp"
#include "artbridge/png_io.hpp"

namespace artbridge {

namespace {

std::string classify(httplib::Error err) {
  switch (err) {
    case httplib::Error::Connection:
    case httplib::Error::SSLConnection:
    case httplib::Error::ProxyConnection:
      return "connection";
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
      return "timeout";
    default:
      return "transport";
  }
}

struct Failure {
  std::string error_class;
  std::string message;
};

class SlotGuard {
public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

private:
  std::counting_semaphore<>& sem_;
};

} // namespace

RemoteBackend::RemoteBackend(BackendConfig cfg)
    : cfg_(std::move(cfg)), slots_(static_cast<std::ptrdiff_t>(cfg_.max_concurrency)) {
  validate(cfg_);
  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "endpoint must be an absolute http(s) URL",
                {{"endpoint", cfg_.endpoint}});
  const auto scheme = cfg_.endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw Error(ErrorCode::InvalidConfig, "unsupported endpoint scheme '" + scheme + "'");
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  host_ = cfg_.endpoint.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : cfg_.endpoint.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

RasterImage RemoteBackend::post_image(const std::string& route, const nlohmann::json& body) {
  SlotGuard slot(slots_);

  httplib::Headers headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Key ") + key);
  const auto payload = body.dump();
  const auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);

  Failure last;
  const std::uint32_t total = cfg_.max_retries + 1;
  auto backoff = std::chrono::milliseconds(cfg_.retry_backoff_ms);
  for (std::uint32_t attempt = 1; attempt <= total; ++attempt) {
    ++attempts_;
    httplib::Client client(host_);
    client.set_connection_timeout(timeout_us);
    client.set_read_timeout(timeout_us);
    client.set_write_timeout(timeout_us);
    auto res = client.Post(prefix_ + route, headers, payload, "application/json");
    if (!res) {
      last = {classify(res.error()), httplib::to_string(res.error())};
    } else if (res->status < 200 || res->status >= 300) {
      last = {"http_status", "HTTP " + std::to_string(res->status)};
    } else {
      try {
        const auto reply = nlohmann::json::parse(res->body);
        const auto bytes = base64::decode(reply.at("image_b64").get<std::string>());
        return png::decode(bytes);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProtocolError, std::string("malformed backend reply: ") + e.what());
      } catch (const Error& e) {
        throw Error(ErrorCode::ProtocolError, std::string("undecodable backend image: ") + e.what());
      }
    }
    if (attempt < total) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorCode::BackendUnavailable,
              "backend unavailable after " + std::to_string(total) + " attempts: " + last.message,
              {{"attempts", total}, {"error_class", last.error_class}, {"detail", last.message}});
}

RasterImage RemoteBackend::stylize(const StyleRequest& req) {
  validate(req);
  const nlohmann::json body = {{"prompt", req.prompt},
                               {"image_b64", base64::encode(png::encode(req.image))},
                               {"strength", req.strength},
                               {"seed", req.seed}};
  auto out = post_image("/stylize", body);
  return resize_nearest(out, req.image.width(), req.image.height());
}

RasterImage RemoteBackend::style_learn(const StyleLearnRequest& req) {
  validate(req);
  mean_opaque_color(req.reference); // rejects fully transparent references
  const nlohmann::json body = {{"prompt", req.prompt},
                               {"image_b64", base64::encode(png::encode(req.reference))},
                               {"seed", req.seed}};
  return post_image("/style_learn", body);
}

HealthReport RemoteBackend::health() {
  httplib::Client client(host_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(cfg_.timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  const auto start = std::chrono::steady_clock::now();
  auto res = client.Get(prefix_ + "/health");
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!res) return {false, ms, classify(res.error()), httplib::to_string(res.error())};
  if (res->status < 200 || res->status >= 300)
    return {false, ms, "http_status", "HTTP " + std::to_string(res->status)};
  return {true, ms, "", ""};
}

} // namespace artbridge
