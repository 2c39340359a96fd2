#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "artbridge/backend.hpp"
#include "artbridge/error.hpp"
#include "artbridge/image.hpp"

namespace boost::asio {
class thread_pool;
}

namespace artbridge {

enum class BufferKind { Background, Stylized, Nonstylized };

std::string to_string(BufferKind kind);
BufferKind buffer_kind_from_string(const std::string& s);

struct BufferSpec {
  std::string buffer_id; // [A-Za-z0-9_-]{1,64}; also used in file names
  BufferKind kind = BufferKind::Nonstylized;
  std::optional<std::string> prompt; // stylized only
  std::optional<double> strength;    // stylized only
  int z_order = 0;

  friend bool operator==(const BufferSpec&, const BufferSpec&) = default;
};

nlohmann::json to_json(const BufferSpec& spec);
BufferSpec buffer_spec_from_json(const nlohmann::json& j);

struct SessionConfig {
  std::uint32_t width = 512;
  std::uint32_t height = 512;
  double framerate = 30.0;
  std::uint32_t frame_store_capacity = 30;
  std::uint32_t max_pending_frames = 8;
  double bg_removal_threshold = 30.0;
  std::filesystem::path frames_dir = "frames";
  bool record_inputs = true; // keep submitted layers + event log for replay
  BackendConfig backend;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

// Throws InvalidConfig.
void validate(const SessionConfig& cfg);
// `include_frames_dir` is false for manifests so that output trees do not
// depend on where they were written.
nlohmann::json to_json(const SessionConfig& cfg, bool include_frames_dir = true);
// Missing keys keep the values of `base`.
SessionConfig session_config_from_json(const nlohmann::json& j, SessionConfig base = {});

struct FrameLayer {
  std::string session_id;
  std::uint64_t frame_index = 0;
  std::string buffer_id;
  RasterImage image;
};

using ImagePtr = std::shared_ptr<const RasterImage>;
using Bytes = std::vector<std::uint8_t>;
using BytesPtr = std::shared_ptr<const Bytes>;

struct FrameRecord {
  std::uint64_t frame_index = 0;
  RasterImage final;
  BytesPtr final_png;                            // exactly the bytes written to disk
  std::map<std::string, ImagePtr> originals;     // every submitted layer, as received
  std::map<std::string, ImagePtr> stylized_results; // after background removal
  std::chrono::system_clock::time_point first_layer_at;
  std::chrono::system_clock::time_point assembled_at;
};

struct StoreRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  std::size_t count = 0;
};

// Asynchronous notifications produced while frames move through a session.
struct FrameReady {
  std::uint64_t frame_index = 0;
  BytesPtr png;
};
struct StoreProgress {
  std::size_t stored = 0;
  std::size_t capacity = 0;
};
struct FrameDropped {
  std::uint64_t frame_index = 0;
  std::string reason; // "backpressure" or "backend_error"
};
struct JobFailed {
  std::uint64_t frame_index = 0;
  std::string buffer_id;
  ErrorCode code = ErrorCode::BackendUnavailable;
  std::string message;
  nlohmann::json context;
};
using SessionEvent = std::variant<FrameReady, StoreProgress, FrameDropped, JobFailed>;

// Called from whichever thread finished the work; must be thread-safe.
using EventSink = std::function<void(const std::string& session_id, const SessionEvent&)>;

using BackendFactory = std::function<std::shared_ptr<Backend>(const BackendConfig&)>;

struct EngineOptions {
  std::size_t worker_threads = 4;
  BackendFactory backend_factory; // default: make_backend
};

// Session engine. Each session's state is guarded by its own mutex; stylize
// jobs run on a shared worker pool and re-enter the session when done.
// Frames are assembled automatically once every registered buffer has a
// processed layer, or once frame_complete was received and no job for the
// frame is still running.
class Engine {
public:
  explicit Engine(EngineOptions opts = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  std::string create_session(const SessionConfig& cfg, EventSink sink = {});
  // Uses `session_id` verbatim (replay keeps recorded ids so job seeds
  // match). Throws InvalidInput if it is taken or its directory exists.
  std::string create_session(const SessionConfig& cfg, EventSink sink,
                             const std::string& session_id);
  void set_sink(const std::string& session_id, EventSink sink);
  SessionConfig get_config(const std::string& session_id) const;
  bool has_session(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  // Forgets in-memory state; files on disk stay.
  void close_session(const std::string& session_id);

  void register_buffer(const std::string& session_id, const BufferSpec& spec);
  std::vector<BufferSpec> buffers(const std::string& session_id) const;

  // `png_bytes`, when given, must encode `layer.image`; it is recorded
  // verbatim instead of re-encoding.
  void submit_layer(const FrameLayer& layer, BytesPtr png_bytes = nullptr);
  void frame_complete(const std::string& session_id, std::uint64_t frame_index);

  // Assembles `frame_index` now if it is ready, or returns the stored record
  // if it was already assembled. Throws NotReady otherwise.
  FrameRecord assemble_frame(const std::string& session_id, std::uint64_t frame_index);

  FrameRecord get_frame(const std::string& session_id, std::uint64_t frame_index) const;
  StoreRange store_range(const std::string& session_id) const;
  std::size_t pending_frames(const std::string& session_id) const;

  // Crops the stored final frame and runs style learning on the patch. The
  // result is written to frames_dir/{session}/style_NNNN.png.
  RasterImage style_capture(const std::string& session_id, std::uint64_t frame_index,
                            Rect rect, const std::string& prompt, Seed seed);

  // Blocks until no stylize job of the session is running.
  void drain(const std::string& session_id);
  void drain_all();

  struct Session;

private:
  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::string open_session(const SessionConfig& cfg, EventSink sink,
                           const std::string* requested_id);
  void run_job(std::shared_ptr<Session> session, std::uint64_t frame_index,
               std::string buffer_id, StyleRequest req);

  EngineOptions opts_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;
  std::unique_ptr<boost::asio::thread_pool> pool_;
};

} // namespace artbridge
