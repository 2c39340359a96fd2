#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

namespace artbridge {

struct ReplayResult {
  std::string session_id;
  std::filesystem::path session_dir; // inside out_dir
  std::size_t frames_assembled = 0;
  std::size_t layers_submitted = 0;
  std::size_t captures = 0;
};

// Re-runs a recorded session (manifest.json + events.jsonl + inputs/)
// through a fresh engine with the mock backend, writing into
// `out_dir/{recorded session id}` (which must not exist yet).
// Frames the recording dropped are skipped. Events are applied one at a
// time and every stylize job is awaited, so the output tree is a pure
// function of the recording.
ReplayResult replay_session(const std::filesystem::path& session_dir,
                            const std::filesystem::path& out_dir);

} // namespace artbridge
