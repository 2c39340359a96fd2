#include "artbridge/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "artbridge/error.hpp"

namespace artbridge::manifest {

namespace fs = std::filesystem;

std::string frame_file(std::uint64_t frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu.png", static_cast<unsigned long long>(frame_index));
  return buf;
}

std::string input_file(std::uint64_t frame_index, const std::string& buffer_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu_", static_cast<unsigned long long>(frame_index));
  return "inputs/" + std::string(buf) + buffer_id + ".png";
}

std::string style_file(std::uint64_t capture_number) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "style_%04llu.png",
                static_cast<unsigned long long>(capture_number));
  return buf;
}

nlohmann::json to_json(const Manifest& m) {
  auto buffers = nlohmann::json::array();
  for (const auto& b : m.buffers) buffers.push_back(artbridge::to_json(b));
  auto dropped = nlohmann::json::array();
  for (const auto& d : m.dropped)
    dropped.push_back({{"frame_index", d.frame_index}, {"reason", d.reason}});
  return {{"format", kFormat},
          {"session_id", m.session_id},
          {"config", artbridge::to_json(m.config, false)},
          {"buffers", std::move(buffers)},
          {"dropped", std::move(dropped)},
          {"events", "events.jsonl"}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat)
      throw Error(ErrorCode::InvalidInput, "unsupported manifest format");
    Manifest m;
    m.session_id = j.at("session_id").get<std::string>();
    m.config = session_config_from_json(j.at("config"));
    for (const auto& b : j.at("buffers")) m.buffers.push_back(buffer_spec_from_json(b));
    for (const auto& d : j.at("dropped"))
      m.dropped.push_back({d.at("frame_index").get<std::uint64_t>(), d.at("reason").get<std::string>()});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed manifest: ") + e.what());
  }
}

void write(const fs::path& session_dir, const Manifest& m) {
  const auto tmp = session_dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << to_json(m).dump(2) << '\n';
  }
  std::error_code ec;
  fs::rename(tmp, session_dir / "manifest.json", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot replace manifest: " + ec.message());
}

Manifest read(const fs::path& session_dir) {
  std::ifstream in(session_dir / "manifest.json");
  if (!in) throw Error(ErrorCode::Io, "no manifest.json in " + session_dir.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, std::string("manifest is not JSON: ") + e.what());
  }
}

void append_event(const fs::path& session_dir, const nlohmann::json& event) {
  std::ofstream out(session_dir / "events.jsonl", std::ios::app);
  if (!out) throw Error(ErrorCode::Io, "cannot append to events.jsonl");
  out << event.dump() << '\n';
}

std::vector<nlohmann::json> read_events(const fs::path& session_dir) {
  std::vector<nlohmann::json> events;
  std::ifstream in(session_dir / "events.jsonl");
  if (!in) return events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      events.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidInput, std::string("malformed event line: ") + e.what());
    }
  }
  return events;
}

} // namespace artbridge::manifest
