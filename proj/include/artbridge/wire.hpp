#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "artbridge/image.hpp"
#include "artbridge/pipeline.hpp"

// WebSocket message envelope: one JSON object per text frame, discriminated
// by "type". Images travel as base64-encoded PNG. docs/protocol.md has the
// field-by-field schema.
namespace artbridge::wire {

// client -> server
struct CreateSession {
  nlohmann::json config = nlohmann::json::object(); // SessionConfig overrides
};
struct RegisterBuffer {
  std::string session_id;
  BufferSpec spec;
};
struct FrameLayerMsg {
  std::string session_id;
  std::uint64_t frame_index = 0;
  std::string buffer_id;
  std::string png_b64;
};
struct FrameComplete {
  std::string session_id;
  std::uint64_t frame_index = 0;
};
struct GetFrame {
  std::string session_id;
  std::uint64_t frame_index = 0;
};
struct StyleCapture {
  std::string session_id;
  std::uint64_t frame_index = 0;
  Rect rect;
  std::string prompt;
  Seed seed = 0;
};

// server -> client
struct SessionCreated {
  std::string session_id;
};
struct FrameReadyMsg {
  std::string session_id;
  std::uint64_t frame_index = 0;
  std::string png_b64;
};
struct StoreProgressMsg {
  std::string session_id;
  std::uint64_t stored = 0;
  std::uint64_t capacity = 0;
};
struct FrameData {
  std::string session_id;
  std::uint64_t frame_index = 0;
  std::string png_b64;
};
struct StyleResult {
  std::string session_id;
  std::string png_b64;
};
struct ErrorMsg {
  std::optional<std::string> session_id; // absent when the request had none
  std::string code;
  std::string message;
  nlohmann::json context = nlohmann::json::object();
};

using Message = std::variant<CreateSession, RegisterBuffer, FrameLayerMsg, FrameComplete,
                             GetFrame, StyleCapture, SessionCreated, FrameReadyMsg,
                             StoreProgressMsg, FrameData, StyleResult, ErrorMsg>;

std::string_view type_name(const Message& m);

nlohmann::json to_json(const Message& m);
std::string encode(const Message& m);

// Throws Error{BadMessage} with a "field" or "type" entry in the context.
Message from_json(const nlohmann::json& j);
Message decode(std::string_view text);

} // namespace artbridge::wire
