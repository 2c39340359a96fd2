#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace artbridge {

enum class ErrorCode {
  InvalidInput,
  InvalidConfig,
  DimensionMismatch,
  OutOfBounds,
  EmptyMap,
  Io,
  BackendUnavailable,
  ProtocolError,
  InvalidReference,
  UnknownSession,
  UnknownBuffer,
  DuplicateBuffer,
  DuplicateZOrder,
  DuplicateBackground,
  DuplicateLayer,
  StaleFrame,
  NotFound,
  NotReady,
  BadMessage,
  FrameDropped,
};

// Wire spelling, e.g. "UNKNOWN_BUFFER".
std::string_view to_string(ErrorCode code);

// All library failures are reported with this type. `context` is a JSON
// object carrying machine-readable detail (offending index, suggested
// rect, attempt count, ...), forwarded verbatim in wire error messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json context = nlohmann::json::object())
      : std::runtime_error(message), code_(code), context_(std::move(context)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& context() const noexcept { return context_; }

private:
  ErrorCode code_;
  nlohmann::json context_;
};

} // namespace artbridge
