#include "artbridge/replay.hpp"

#include <atomic>
#include <set>

#include "artbridge/error.hpp"
#include "artbridge/manifest.hpp"
#include "artbridge/pipeline.hpp"
#include "artbridge/png_io.hpp"

namespace artbridge {

ReplayResult replay_session(const std::filesystem::path& session_dir,
                            const std::filesystem::path& out_dir) {
  const auto recorded = manifest::read(session_dir);
  const auto events = manifest::read_events(session_dir);
  std::set<std::uint64_t> dropped;
  for (const auto& d : recorded.dropped) dropped.insert(d.frame_index);

  auto cfg = recorded.config;
  cfg.backend.kind = BackendKind::Mock;
  cfg.frames_dir = out_dir;
  cfg.record_inputs = true;

  std::atomic<std::size_t> assembled{0};
  Engine engine({1, {}});
  ReplayResult result;
  result.session_id = engine.create_session(
      cfg,
      [&](const std::string&, const SessionEvent& e) {
        if (std::holds_alternative<FrameReady>(e)) ++assembled;
      },
      recorded.session_id);
  result.session_dir = out_dir / result.session_id;
  for (const auto& spec : recorded.buffers) engine.register_buffer(result.session_id, spec);

  for (const auto& ev : events) {
    try {
      const auto op = ev.at("op").get<std::string>();
      const auto frame = ev.at("frame_index").get<std::uint64_t>();
      if (op == "layer") {
        if (dropped.count(frame)) continue;
        auto bytes = std::make_shared<const Bytes>(
            png::read_file(session_dir / ev.at("file").get<std::string>()));
        engine.submit_layer({result.session_id, frame, ev.at("buffer_id").get<std::string>(),
                             png::decode(*bytes)},
                            bytes);
        ++result.layers_submitted;
      } else if (op == "frame_complete") {
        if (dropped.count(frame)) continue;
        engine.frame_complete(result.session_id, frame);
      } else if (op == "style_capture") {
        const auto& r = ev.at("rect");
        engine.style_capture(result.session_id, frame,
                             {r.at("x").get<std::uint32_t>(), r.at("y").get<std::uint32_t>(),
                              r.at("w").get<std::uint32_t>(), r.at("h").get<std::uint32_t>()},
                             ev.at("prompt").get<std::string>(), ev.at("seed").get<Seed>());
        ++result.captures;
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, std::string("malformed recorded event: ") + e.what());
    } catch (const Error& e) {
      // Requests that failed when recorded fail the same way here.
      if (e.code() == ErrorCode::Io) throw;
    }
    engine.drain(result.session_id);
  }
  engine.drain(result.session_id);
  result.frames_assembled = assembled.load();
  return result;
}

} // namespace artbridge
