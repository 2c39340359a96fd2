#include "artbridge/wire.hpp"

#include <algorithm>
#include <cctype>

#include "artbridge/error.hpp"

namespace artbridge::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw Error(ErrorCode::BadMessage, std::string("missing field '") + name + "'",
                {{"field", name}});
  return *it;
}

template <class T>
T get(const nlohmann::json& j, const char* name) {
  const auto& v = field(j, name);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::BadMessage, std::string("field '") + name + "' has the wrong type",
                {{"field", name}});
  }
}

std::uint64_t get_index(const nlohmann::json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw Error(ErrorCode::BadMessage,
                std::string("field '") + name + "' must be a non-negative integer",
                {{"field", name}});
  return v.get<std::uint64_t>();
}

std::uint32_t get_u32(const nlohmann::json& j, const char* name) {
  const auto v = get_index(j, name);
  if (v > UINT32_MAX)
    throw Error(ErrorCode::BadMessage, std::string("field '") + name + "' is out of range",
                {{"field", name}});
  return static_cast<std::uint32_t>(v);
}

nlohmann::json rect_json(Rect r) {
  return {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

} // namespace

std::string_view type_name(const Message& m) {
  return std::visit(overloaded{
                        [](const CreateSession&) { return "create_session"; },
                        [](const RegisterBuffer&) { return "register_buffer"; },
                        [](const FrameLayerMsg&) { return "frame_layer"; },
                        [](const FrameComplete&) { return "frame_complete"; },
                        [](const GetFrame&) { return "get_frame"; },
                        [](const StyleCapture&) { return "style_capture"; },
                        [](const SessionCreated&) { return "session_created"; },
                        [](const FrameReadyMsg&) { return "frame_ready"; },
                        [](const StoreProgressMsg&) { return "store_progress"; },
                        [](const FrameData&) { return "frame_data"; },
                        [](const StyleResult&) { return "style_result"; },
                        [](const ErrorMsg&) { return "error"; },
                    },
                    m);
}

nlohmann::json to_json(const Message& m) {
  nlohmann::json j = std::visit(
      overloaded{
          [](const CreateSession& v) -> nlohmann::json { return {{"config", v.config}}; },
          [](const RegisterBuffer& v) -> nlohmann::json {
            return {{"session_id", v.session_id}, {"spec", to_json(v.spec)}};
          },
          [](const FrameLayerMsg& v) -> nlohmann::json {
            return {{"session_id", v.session_id},
                    {"frame_index", v.frame_index},
                    {"buffer_id", v.buffer_id},
                    {"png_b64", v.png_b64}};
          },
          [](const FrameComplete& v) -> nlohmann::json {
            return {{"session_id", v.session_id}, {"frame_index", v.frame_index}};
          },
          [](const GetFrame& v) -> nlohmann::json {
            return {{"session_id", v.session_id}, {"frame_index", v.frame_index}};
          },
          [](const StyleCapture& v) -> nlohmann::json {
            return {{"session_id", v.session_id},
                    {"frame_index", v.frame_index},
                    {"rect", rect_json(v.rect)},
                    {"prompt", v.prompt},
                    {"seed", v.seed}};
          },
          [](const SessionCreated& v) -> nlohmann::json { return {{"session_id", v.session_id}}; },
          [](const FrameReadyMsg& v) -> nlohmann::json {
            return {{"session_id", v.session_id},
                    {"frame_index", v.frame_index},
                    {"png_b64", v.png_b64}};
          },
          [](const StoreProgressMsg& v) -> nlohmann::json {
            return {{"session_id", v.session_id}, {"stored", v.stored}, {"capacity", v.capacity}};
          },
          [](const FrameData& v) -> nlohmann::json {
            return {{"session_id", v.session_id},
                    {"frame_index", v.frame_index},
                    {"png_b64", v.png_b64}};
          },
          [](const StyleResult& v) -> nlohmann::json {
            return {{"session_id", v.session_id}, {"png_b64", v.png_b64}};
          },
          [](const ErrorMsg& v) -> nlohmann::json {
            nlohmann::json e = {{"code", v.code}, {"message", v.message}, {"context", v.context}};
            e["session_id"] = v.session_id ? nlohmann::json(*v.session_id) : nlohmann::json(nullptr);
            return e;
          },
      },
      m);
  j["type"] = type_name(m);
  return j;
}

namespace {

std::string dump(const nlohmann::json& j) {
  // error messages may quote client input; never let that make encoding fail
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

const std::string* image_payload(const Message& m) {
  if (auto* v = std::get_if<FrameReadyMsg>(&m)) return &v->png_b64;
  if (auto* v = std::get_if<FrameData>(&m)) return &v->png_b64;
  if (auto* v = std::get_if<StyleResult>(&m)) return &v->png_b64;
  if (auto* v = std::get_if<FrameLayerMsg>(&m)) return &v->png_b64;
  return nullptr;
}

bool is_base64_text(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '+' || c == '/' || c == '=';
  });
}

} // namespace

// Frames are megabytes of base64, which never needs escaping: the envelope
// is dumped with an empty payload and the payload spliced in, giving the
// same bytes as a full dump without scanning the payload.
std::string encode(const Message& m) {
  auto j = to_json(m);
  const auto* payload = image_payload(m);
  if (!payload || !is_base64_text(*payload)) return dump(j);
  j["png_b64"] = "";
  auto text = dump(j);
  static constexpr std::string_view marker = R"("png_b64":"")";
  const auto at = text.find(marker);
  text.insert(at + marker.size() - 1, *payload);
  return text;
}

Message from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw Error(ErrorCode::BadMessage, "message must be a JSON object");
  const auto type = get<std::string>(j, "type");

  if (type == "create_session") {
    CreateSession m;
    if (j.contains("config")) {
      m.config = j["config"];
      if (!m.config.is_object())
        throw Error(ErrorCode::BadMessage, "field 'config' must be an object", {{"field", "config"}});
    }
    return m;
  }
  if (type == "register_buffer") {
    const auto& spec = field(j, "spec");
    try {
      return RegisterBuffer{get<std::string>(j, "session_id"), buffer_spec_from_json(spec)};
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BadMessage) throw;
      throw Error(ErrorCode::BadMessage, e.what(), {{"field", "spec"}});
    }
  }
  if (type == "frame_layer")
    return FrameLayerMsg{get<std::string>(j, "session_id"), get_index(j, "frame_index"),
                         get<std::string>(j, "buffer_id"), get<std::string>(j, "png_b64")};
  if (type == "frame_complete")
    return FrameComplete{get<std::string>(j, "session_id"), get_index(j, "frame_index")};
  if (type == "get_frame")
    return GetFrame{get<std::string>(j, "session_id"), get_index(j, "frame_index")};
  if (type == "style_capture") {
    const auto& r = field(j, "rect");
    if (!r.is_object())
      throw Error(ErrorCode::BadMessage, "field 'rect' must be an object", {{"field", "rect"}});
    Rect rect{get_u32(r, "x"), get_u32(r, "y"), get_u32(r, "w"), get_u32(r, "h")};
    return StyleCapture{get<std::string>(j, "session_id"), get_index(j, "frame_index"), rect,
                        get<std::string>(j, "prompt"), get_index(j, "seed")};
  }
  if (type == "session_created") return SessionCreated{get<std::string>(j, "session_id")};
  if (type == "frame_ready")
    return FrameReadyMsg{get<std::string>(j, "session_id"), get_index(j, "frame_index"),
                         get<std::string>(j, "png_b64")};
  if (type == "store_progress")
    return StoreProgressMsg{get<std::string>(j, "session_id"), get_index(j, "stored"),
                            get_index(j, "capacity")};
  if (type == "frame_data")
    return FrameData{get<std::string>(j, "session_id"), get_index(j, "frame_index"),
                     get<std::string>(j, "png_b64")};
  if (type == "style_result")
    return StyleResult{get<std::string>(j, "session_id"), get<std::string>(j, "png_b64")};
  if (type == "error") {
    ErrorMsg m;
    if (j.contains("session_id") && !j["session_id"].is_null())
      m.session_id = get<std::string>(j, "session_id");
    m.code = get<std::string>(j, "code");
    m.message = get<std::string>(j, "message");
    if (j.contains("context")) m.context = j["context"];
    return m;
  }
  throw Error(ErrorCode::BadMessage, "unknown message type '" + type + "'", {{"type", type}});
}

Message decode(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::BadMessage, std::string("malformed JSON: ") + e.what(),
                {{"byte", e.byte}});
  }
  return from_json(j);
}

} // namespace artbridge::wire
