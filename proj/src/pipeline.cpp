#include "artbridge/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <boost/asio/post.hpp>
#include <boost/asio/thread_pool.hpp>

#include "artbridge/image_ops.hpp"
#include "artbridge/manifest.hpp"
#include "artbridge/noise.hpp"
#include "artbridge/png_io.hpp"

namespace artbridge {

namespace fs = std::filesystem;

std::string to_string(BufferKind kind) {
  switch (kind) {
    case BufferKind::Background: return "background";
    case BufferKind::Stylized: return "stylized";
    case BufferKind::Nonstylized: return "nonstylized";
  }
  return "unknown";
}

BufferKind buffer_kind_from_string(const std::string& s) {
  if (s == "background") return BufferKind::Background;
  if (s == "stylized") return BufferKind::Stylized;
  if (s == "nonstylized") return BufferKind::Nonstylized;
  throw Error(ErrorCode::InvalidInput, "unknown buffer kind '" + s + "'");
}

nlohmann::json to_json(const BufferSpec& spec) {
  nlohmann::json j = {{"buffer_id", spec.buffer_id},
                      {"kind", to_string(spec.kind)},
                      {"z_order", spec.z_order}};
  if (spec.prompt) j["prompt"] = *spec.prompt;
  if (spec.strength) j["strength"] = *spec.strength;
  return j;
}

BufferSpec buffer_spec_from_json(const nlohmann::json& j) {
  try {
    BufferSpec spec;
    spec.buffer_id = j.at("buffer_id").get<std::string>();
    spec.kind = buffer_kind_from_string(j.at("kind").get<std::string>());
    spec.z_order = j.at("z_order").get<int>();
    if (j.contains("prompt") && !j["prompt"].is_null()) spec.prompt = j["prompt"].get<std::string>();
    if (j.contains("strength") && !j["strength"].is_null()) spec.strength = j["strength"].get<double>();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed buffer spec: ") + e.what());
  }
}

void validate(const SessionConfig& cfg) {
  if (cfg.width == 0 || cfg.height == 0)
    throw Error(ErrorCode::InvalidConfig, "canvas dimensions must be positive");
  if (!(cfg.framerate > 0)) throw Error(ErrorCode::InvalidConfig, "framerate must be positive");
  if (cfg.frame_store_capacity == 0)
    throw Error(ErrorCode::InvalidConfig, "frame store capacity must be positive");
  if (cfg.max_pending_frames == 0)
    throw Error(ErrorCode::InvalidConfig, "pending-frame window must be positive");
  if (!(cfg.bg_removal_threshold >= 0))
    throw Error(ErrorCode::InvalidConfig, "background threshold must be non-negative");
  validate(cfg.backend);
}

nlohmann::json to_json(const SessionConfig& cfg, bool include_frames_dir) {
  nlohmann::json j = {{"width", cfg.width},
                      {"height", cfg.height},
                      {"framerate", cfg.framerate},
                      {"frame_store_capacity", cfg.frame_store_capacity},
                      {"max_pending_frames", cfg.max_pending_frames},
                      {"bg_removal_threshold", cfg.bg_removal_threshold},
                      {"record_inputs", cfg.record_inputs},
                      {"backend", to_json(cfg.backend)}};
  if (include_frames_dir) j["frames_dir"] = cfg.frames_dir.string();
  return j;
}

SessionConfig session_config_from_json(const nlohmann::json& j, SessionConfig cfg) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "session config must be an object");
  try {
    if (j.contains("width")) cfg.width = j["width"].get<std::uint32_t>();
    if (j.contains("height")) cfg.height = j["height"].get<std::uint32_t>();
    if (j.contains("framerate")) cfg.framerate = j["framerate"].get<double>();
    if (j.contains("frame_store_capacity"))
      cfg.frame_store_capacity = j["frame_store_capacity"].get<std::uint32_t>();
    if (j.contains("max_pending_frames"))
      cfg.max_pending_frames = j["max_pending_frames"].get<std::uint32_t>();
    if (j.contains("bg_removal_threshold"))
      cfg.bg_removal_threshold = j["bg_removal_threshold"].get<double>();
    if (j.contains("frames_dir")) cfg.frames_dir = j["frames_dir"].get<std::string>();
    if (j.contains("record_inputs")) cfg.record_inputs = j["record_inputs"].get<bool>();
    if (j.contains("backend")) cfg.backend = backend_config_from_json(j["backend"], cfg.backend);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed session config: ") + e.what());
  }
  return cfg;
}

namespace {

struct PendingFrame {
  std::map<std::string, ImagePtr> originals;
  std::map<std::string, ImagePtr> processed; // ready to stack
  std::map<std::string, ImagePtr> stylized;
  std::set<std::string> in_flight;
  bool complete_requested = false;
  std::chrono::system_clock::time_point first_layer_at = std::chrono::system_clock::now();
};

bool valid_buffer_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

nlohmann::json range_json(const std::map<std::uint64_t, FrameRecord>& store) {
  if (store.empty()) return nullptr;
  return {{"first", store.begin()->first}, {"last", store.rbegin()->first}};
}

} // namespace

struct Engine::Session {
  std::string id;
  SessionConfig cfg;
  fs::path dir;
  std::shared_ptr<Backend> backend;

  std::mutex mutex;
  std::condition_variable idle;
  EventSink sink;
  std::vector<BufferSpec> buffers;
  std::map<std::uint64_t, PendingFrame> pending;
  std::set<std::uint64_t> finished; // assembled or dropped
  std::map<std::uint64_t, FrameRecord> store;
  std::vector<manifest::DropRecord> dropped;
  std::size_t jobs_in_flight = 0;
  std::uint64_t captures = 0;
  bool closed = false;

  using Events = std::vector<SessionEvent>;

  const BufferSpec* buffer(const std::string& id_) const {
    for (const auto& b : buffers)
      if (b.buffer_id == id_) return &b;
    return nullptr;
  }

  void write_manifest() const {
    manifest::write(dir, {id, cfg, buffers, dropped});
  }

  void drop(std::uint64_t frame_index, const std::string& reason, Events& events) {
    pending.erase(frame_index);
    finished.insert(frame_index);
    dropped.push_back({frame_index, reason});
    write_manifest();
    events.emplace_back(FrameDropped{frame_index, reason});
  }

  PendingFrame& open_frame(std::uint64_t frame_index, Events& events) {
    auto it = pending.find(frame_index);
    if (it != pending.end()) return it->second;
    if (pending.size() >= cfg.max_pending_frames) drop(pending.begin()->first, "backpressure", events);
    return pending[frame_index];
  }

  bool ready(const PendingFrame& f) const {
    if (!f.in_flight.empty()) return false;
    if (f.complete_requested) return true;
    return std::all_of(buffers.begin(), buffers.end(),
                       [&](const BufferSpec& b) { return f.processed.count(b.buffer_id) > 0; });
  }

  void try_assemble(std::uint64_t frame_index, Events& events) {
    auto it = pending.find(frame_index);
    if (it != pending.end() && ready(it->second)) assemble(frame_index, events);
  }

  // Background first, then every other layer by ascending z-order.
  void assemble(std::uint64_t frame_index, Events& events) {
    auto node = pending.extract(frame_index);
    PendingFrame& frame = node.mapped();

    std::vector<const BufferSpec*> order;
    for (const auto& b : buffers)
      if (frame.processed.count(b.buffer_id)) order.push_back(&b);
    std::stable_sort(order.begin(), order.end(), [](const BufferSpec* a, const BufferSpec* b) {
      const bool abg = a->kind == BufferKind::Background;
      const bool bbg = b->kind == BufferKind::Background;
      if (abg != bbg) return abg;
      return a->z_order < b->z_order;
    });

    FrameRecord rec;
    rec.frame_index = frame_index;
    if (order.empty()) {
      rec.final = RasterImage(cfg.width, cfg.height);
    } else {
      std::vector<const RasterImage*> layers;
      for (const auto* b : order) layers.push_back(frame.processed.at(b->buffer_id).get());
      rec.final = composite(std::span<const RasterImage* const>(layers));
    }
    rec.final_png = std::make_shared<const Bytes>(png::encode(rec.final));
    try {
      png::write_file(dir / manifest::frame_file(frame_index), *rec.final_png);
    } catch (const Error& e) {
      events.emplace_back(JobFailed{frame_index, "", e.code(), e.what(), e.context()});
    }
    rec.originals = std::move(frame.originals);
    rec.stylized_results = std::move(frame.stylized);
    rec.first_layer_at = frame.first_layer_at;
    rec.assembled_at = std::chrono::system_clock::now();

    const auto png = rec.final_png;
    store[frame_index] = std::move(rec);
    while (store.size() > cfg.frame_store_capacity) store.erase(store.begin());
    finished.insert(frame_index);

    events.emplace_back(FrameReady{frame_index, png});
    events.emplace_back(StoreProgress{store.size(), cfg.frame_store_capacity});
  }

  void emit(const Events& events) {
    if (events.empty()) return;
    EventSink s;
    {
      std::lock_guard lock(mutex);
      if (closed) return;
      s = sink;
    }
    if (!s) return;
    for (const auto& e : events) s(id, e);
  }
};

Engine::Engine(EngineOptions opts)
    : opts_(std::move(opts)),
      pool_(std::make_unique<boost::asio::thread_pool>(std::max<std::size_t>(1, opts_.worker_threads))) {
  if (!opts_.backend_factory)
    opts_.backend_factory = [](const BackendConfig& cfg) -> std::shared_ptr<Backend> {
      return make_backend(cfg);
    };
}

Engine::~Engine() { pool_->join(); }

std::shared_ptr<Engine::Session> Engine::find(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end())
    throw Error(ErrorCode::UnknownSession, "unknown session '" + session_id + "'",
                {{"session_id", session_id}});
  return it->second;
}

std::string Engine::create_session(const SessionConfig& cfg, EventSink sink) {
  return open_session(cfg, std::move(sink), nullptr);
}

std::string Engine::create_session(const SessionConfig& cfg, EventSink sink,
                                   const std::string& session_id) {
  return open_session(cfg, std::move(sink), &session_id);
}

std::string Engine::open_session(const SessionConfig& cfg, EventSink sink,
                                 const std::string* requested_id) {
  validate(cfg);
  auto session = std::make_shared<Session>();
  session->cfg = cfg;
  session->backend = opts_.backend_factory(cfg.backend);
  session->sink = std::move(sink);

  {
    std::lock_guard lock(mutex_);
    std::error_code ec;
    if (requested_id) {
      if (!valid_buffer_id(*requested_id) || sessions_.count(*requested_id) ||
          fs::exists(cfg.frames_dir / *requested_id, ec))
        throw Error(ErrorCode::InvalidInput, "session id '" + *requested_id + "' is unavailable",
                    {{"session_id", *requested_id}});
      session->id = *requested_id;
    }
    while (session->id.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "session-%04llu",
                    static_cast<unsigned long long>(next_session_++));
      if (sessions_.count(buf) || fs::exists(cfg.frames_dir / buf, ec)) continue;
      session->id = buf;
    }
    session->dir = cfg.frames_dir / session->id;
    fs::create_directories(session->dir, ec);
    if (!ec && cfg.record_inputs) fs::create_directories(session->dir / "inputs", ec);
    if (ec)
      throw Error(ErrorCode::Io, "cannot create " + session->dir.string() + ": " + ec.message(),
                  {{"frames_dir", cfg.frames_dir.string()}});
    session->write_manifest();
    sessions_[session->id] = session;
  }
  return session->id;
}

void Engine::set_sink(const std::string& session_id, EventSink sink) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  s->sink = std::move(sink);
}

SessionConfig Engine::get_config(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->cfg;
}

bool Engine::has_session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return sessions_.count(session_id) > 0;
}

std::vector<std::string> Engine::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

void Engine::close_session(const std::string& session_id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return;
    s = it->second;
    sessions_.erase(it);
  }
  std::lock_guard lock(s->mutex);
  s->closed = true;
  s->sink = nullptr;
}

void Engine::register_buffer(const std::string& session_id, const BufferSpec& spec) {
  auto s = find(session_id);
  if (!valid_buffer_id(spec.buffer_id))
    throw Error(ErrorCode::InvalidInput, "buffer_id must match [A-Za-z0-9_-]{1,64}",
                {{"buffer_id", spec.buffer_id}});
  if (spec.kind == BufferKind::Stylized) {
    if (!spec.prompt || !spec.strength)
      throw Error(ErrorCode::InvalidInput, "stylized buffers need a prompt and a strength",
                  {{"buffer_id", spec.buffer_id}});
    if (!(*spec.strength >= 0.0 && *spec.strength <= 1.0))
      throw Error(ErrorCode::InvalidInput, "strength must lie in [0, 1]",
                  {{"buffer_id", spec.buffer_id}, {"strength", *spec.strength}});
    if (spec.prompt->size() > kMaxPromptBytes)
      throw Error(ErrorCode::InvalidInput, "prompt exceeds 2000 bytes",
                  {{"buffer_id", spec.buffer_id}});
  } else if (spec.prompt || spec.strength) {
    throw Error(ErrorCode::InvalidInput, "only stylized buffers take a prompt or strength",
                {{"buffer_id", spec.buffer_id}});
  }

  std::lock_guard lock(s->mutex);
  for (const auto& b : s->buffers) {
    if (b.buffer_id == spec.buffer_id)
      throw Error(ErrorCode::DuplicateBuffer, "buffer '" + spec.buffer_id + "' already registered",
                  {{"buffer_id", spec.buffer_id}});
    if (b.z_order == spec.z_order)
      throw Error(ErrorCode::DuplicateZOrder,
                  "z_order " + std::to_string(spec.z_order) + " is taken by '" + b.buffer_id + "'",
                  {{"buffer_id", spec.buffer_id}, {"z_order", spec.z_order}});
    if (b.kind == BufferKind::Background && spec.kind == BufferKind::Background)
      throw Error(ErrorCode::DuplicateBackground, "session already has a background buffer",
                  {{"buffer_id", spec.buffer_id}, {"existing", b.buffer_id}});
  }
  s->buffers.push_back(spec);
  s->write_manifest();
}

std::vector<BufferSpec> Engine::buffers(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->buffers;
}

void Engine::submit_layer(const FrameLayer& layer, BytesPtr png_bytes) {
  auto s = find(layer.session_id);
  Session::Events events;
  {
    std::lock_guard lock(s->mutex);
    const auto* spec = s->buffer(layer.buffer_id);
    if (!spec)
      throw Error(ErrorCode::UnknownBuffer, "buffer '" + layer.buffer_id + "' is not registered",
                  {{"buffer_id", layer.buffer_id}, {"frame_index", layer.frame_index}});
    if (layer.image.width() != s->cfg.width || layer.image.height() != s->cfg.height)
      throw Error(ErrorCode::DimensionMismatch, "layer size differs from the canvas",
                  {{"buffer_id", layer.buffer_id},
                   {"expected", {s->cfg.width, s->cfg.height}},
                   {"actual", {layer.image.width(), layer.image.height()}}});
    if (s->finished.count(layer.frame_index))
      throw Error(ErrorCode::StaleFrame,
                  "frame " + std::to_string(layer.frame_index) + " was already assembled or dropped",
                  {{"frame_index", layer.frame_index}});
    if (auto it = s->pending.find(layer.frame_index);
        it != s->pending.end() && it->second.originals.count(layer.buffer_id))
      throw Error(ErrorCode::DuplicateLayer, "layer already submitted for this frame",
                  {{"buffer_id", layer.buffer_id}, {"frame_index", layer.frame_index}});

    if (s->cfg.record_inputs) {
      const auto rel = manifest::input_file(layer.frame_index, layer.buffer_id);
      if (png_bytes)
        png::write_file(s->dir / rel, *png_bytes);
      else
        png::write_file(s->dir / rel, png::encode(layer.image));
      manifest::append_event(s->dir, {{"op", "layer"},
                                      {"frame_index", layer.frame_index},
                                      {"buffer_id", layer.buffer_id},
                                      {"file", rel}});
    }

    auto& frame = s->open_frame(layer.frame_index, events);
    auto image = std::make_shared<const RasterImage>(layer.image);
    frame.originals[layer.buffer_id] = image;
    if (spec->kind == BufferKind::Stylized) {
      frame.in_flight.insert(layer.buffer_id);
      ++s->jobs_in_flight;
      StyleRequest req{layer.image, *spec->prompt, *spec->strength,
                       job_seed(s->id, layer.frame_index, layer.buffer_id)};
      boost::asio::post(*pool_, [this, s, idx = layer.frame_index, buf = layer.buffer_id,
                                 req = std::move(req)]() mutable {
        run_job(std::move(s), idx, std::move(buf), std::move(req));
      });
    } else {
      frame.processed[layer.buffer_id] = image;
      s->try_assemble(layer.frame_index, events);
    }
  }
  s->emit(events);
}

void Engine::run_job(std::shared_ptr<Session> s, std::uint64_t frame_index,
                     std::string buffer_id, StyleRequest req) {
  ImagePtr result;
  std::optional<JobFailed> failure;
  try {
    auto out = s->backend->stylize(req);
    result = std::make_shared<const RasterImage>(
        remove_background(out, s->cfg.bg_removal_threshold).image);
  } catch (const Error& e) {
    failure = JobFailed{frame_index, buffer_id, e.code(), e.what(), e.context()};
  } catch (const std::exception& e) {
    failure = JobFailed{frame_index, buffer_id, ErrorCode::BackendUnavailable, e.what(), {}};
  }

  Session::Events events;
  {
    std::lock_guard lock(s->mutex);
    auto it = s->pending.find(frame_index);
    if (it != s->pending.end() && !s->closed) {
      try {
        if (failure) {
          events.emplace_back(*failure);
          s->drop(frame_index, "backend_error", events);
        } else {
          auto& frame = it->second;
          frame.in_flight.erase(buffer_id);
          frame.processed[buffer_id] = result;
          frame.stylized[buffer_id] = result;
          s->try_assemble(frame_index, events);
        }
      } catch (const Error& e) {
        events.emplace_back(JobFailed{frame_index, buffer_id, e.code(), e.what(), e.context()});
      }
    }
  }
  s->emit(events);
  {
    std::lock_guard lock(s->mutex);
    --s->jobs_in_flight;
  }
  s->idle.notify_all();
}

void Engine::frame_complete(const std::string& session_id, std::uint64_t frame_index) {
  auto s = find(session_id);
  Session::Events events;
  {
    std::lock_guard lock(s->mutex);
    if (s->finished.count(frame_index)) return;
    if (s->cfg.record_inputs)
      manifest::append_event(s->dir, {{"op", "frame_complete"}, {"frame_index", frame_index}});
    auto& frame = s->open_frame(frame_index, events);
    frame.complete_requested = true;
    s->try_assemble(frame_index, events);
  }
  s->emit(events);
}

FrameRecord Engine::assemble_frame(const std::string& session_id, std::uint64_t frame_index) {
  auto s = find(session_id);
  Session::Events events;
  FrameRecord rec;
  {
    std::lock_guard lock(s->mutex);
    auto pit = s->pending.find(frame_index);
    if (pit != s->pending.end()) {
      if (!s->ready(pit->second))
        throw Error(ErrorCode::NotReady,
                    "frame " + std::to_string(frame_index) + " is still missing layers",
                    {{"frame_index", frame_index}});
      s->assemble(frame_index, events);
    }
    auto it = s->store.find(frame_index);
    if (it == s->store.end()) {
      if (s->finished.count(frame_index))
        throw Error(ErrorCode::NotFound, "frame is no longer stored",
                    {{"frame_index", frame_index}, {"range", range_json(s->store)}});
      throw Error(ErrorCode::NotReady, "frame has no layers yet", {{"frame_index", frame_index}});
    }
    rec = it->second;
  }
  s->emit(events);
  return rec;
}

FrameRecord Engine::get_frame(const std::string& session_id, std::uint64_t frame_index) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  auto it = s->store.find(frame_index);
  if (it == s->store.end()) {
    std::string where = "store is empty";
    if (!s->store.empty())
      where = "store holds " + std::to_string(s->store.begin()->first) + "-" +
              std::to_string(s->store.rbegin()->first);
    throw Error(ErrorCode::NotFound,
                "frame " + std::to_string(frame_index) + " not in store (" + where + ")",
                {{"frame_index", frame_index}, {"range", range_json(s->store)}});
  }
  return it->second;
}

StoreRange Engine::store_range(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (s->store.empty()) return {};
  return {s->store.begin()->first, s->store.rbegin()->first, s->store.size()};
}

std::size_t Engine::pending_frames(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->pending.size();
}

RasterImage Engine::style_capture(const std::string& session_id, std::uint64_t frame_index,
                                  Rect rect, const std::string& prompt, Seed seed) {
  auto s = find(session_id);
  RasterImage frame;
  {
    std::lock_guard lock(s->mutex);
    auto it = s->store.find(frame_index);
    if (it == s->store.end())
      throw Error(ErrorCode::NotFound,
                  "frame " + std::to_string(frame_index) + " not in store",
                  {{"frame_index", frame_index}, {"range", range_json(s->store)}});
    frame = it->second.final;
  }
  auto reference = crop(frame, rect);
  auto result = s->backend->style_learn({std::move(reference), prompt, seed});

  std::lock_guard lock(s->mutex);
  const auto file = manifest::style_file(++s->captures);
  png::save(result, s->dir / file);
  if (s->cfg.record_inputs)
    manifest::append_event(s->dir, {{"op", "style_capture"},
                                    {"frame_index", frame_index},
                                    {"rect", {{"x", rect.x}, {"y", rect.y}, {"w", rect.w}, {"h", rect.h}}},
                                    {"prompt", prompt},
                                    {"seed", seed},
                                    {"file", file}});
  return result;
}

void Engine::drain(const std::string& session_id) {
  auto s = find(session_id);
  std::unique_lock lock(s->mutex);
  s->idle.wait(lock, [&] { return s->jobs_in_flight == 0; });
}

void Engine::drain_all() {
  for (const auto& id : session_ids()) {
    try {
      drain(id);
    } catch (const Error&) {
      // closed concurrently
    }
  }
}

} // namespace artbridge
