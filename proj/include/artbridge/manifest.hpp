#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artbridge/pipeline.hpp"

// On-disk layout of one session (see docs/frames_dir.md):
//
//   {frames_dir}/{session_id}/manifest.json
//   {frames_dir}/{session_id}/events.jsonl        (record_inputs only)
//   {frames_dir}/{session_id}/inputs/NNNNNN_{buffer}.png
//   {frames_dir}/{session_id}/NNNNNN.png          final frames
//   {frames_dir}/{session_id}/style_NNNN.png      capture results
namespace artbridge::manifest {

inline constexpr const char* kFormat = "artbridge-session/1";

std::string frame_file(std::uint64_t frame_index);
std::string input_file(std::uint64_t frame_index, const std::string& buffer_id);
std::string style_file(std::uint64_t capture_number);

struct DropRecord {
  std::uint64_t frame_index = 0;
  std::string reason;

  friend bool operator==(const DropRecord&, const DropRecord&) = default;
};

struct Manifest {
  std::string session_id;
  SessionConfig config; // frames_dir is not persisted
  std::vector<BufferSpec> buffers;
  std::vector<DropRecord> dropped;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

void write(const std::filesystem::path& session_dir, const Manifest& m);
Manifest read(const std::filesystem::path& session_dir);

void append_event(const std::filesystem::path& session_dir, const nlohmann::json& event);
std::vector<nlohmann::json> read_events(const std::filesystem::path& session_dir);

} // namespace artbridge::manifest
