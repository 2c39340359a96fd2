#include "artbridge/server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/asio/thread_pool.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "artbridge/error.hpp"
#include "artbridge/png_io.hpp"
#include "artbridge/wire.hpp"

namespace artbridge {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {
constexpr std::size_t kMaxMessageBytes = 64u << 20;
}

class Connection;

struct Server::Impl : std::enable_shared_from_this<Server::Impl> {
  ServerConfig cfg;
  std::mutex mutex;
  std::map<std::string, std::weak_ptr<Connection>> owners;
  std::atomic<std::size_t> connections{0};
  std::uint16_t bound_port = 0;
  bool started = false;
  bool stopped = false;
  std::condition_variable stopped_cv;

  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> io_threads;
  std::map<std::string, std::shared_ptr<net::steady_timer>> gc_timers;
  net::thread_pool blocking{2};

  Engine engine; // destroyed first: joins the job pool before the rest goes

  Impl(ServerConfig c, EngineOptions opts)
      : cfg(std::move(c)), engine([&] {
          opts.worker_threads = cfg.worker_threads;
          return opts;
        }()) {}

  ~Impl() {
    stop();
    blocking.join();
  }

  void start();
  void stop();
  void do_accept();
  void handle(const std::shared_ptr<Connection>& conn, const std::string& text);
  void claim(const std::string& session_id, const std::shared_ptr<Connection>& conn);
  void on_disconnect(const Connection* conn);
  void route(const std::string& session_id, const SessionEvent& event);
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
  Connection(tcp::socket&& socket, Server::Impl& server)
      : ws_(std::move(socket)), server_(server) {
    ++server_.connections;
  }
  ~Connection() { --server_.connections; }

  void run() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->on_run(); });
  }

  // Safe from any thread; messages go out in the order they were queued.
  void send(std::string text) {
    auto payload = std::make_shared<const std::string>(std::move(text));
    net::post(ws_.get_executor(), [self = shared_from_this(), payload] {
      if (self->closed_) return;
      self->queue_.push_back(payload);
      if (self->queue_.size() == 1) self->do_write();
    });
  }

private:
  void on_run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kMaxMessageBytes);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->on_closed();
      self->do_read();
    });
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) return on_closed();
    auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (!ws_.got_text())
      send(wire::encode(wire::ErrorMsg{std::nullopt, "BAD_MESSAGE",
                                       "binary frames are not accepted", {}}));
    else
      server_.handle(shared_from_this(), text);
    do_read();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->on_closed();
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->do_write();
                    });
  }

  void on_closed() {
    if (closed_) return;
    closed_ = true;
    queue_.clear();
    server_.on_disconnect(this);
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closed_ = false;
};

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

wire::ErrorMsg error_message(std::optional<std::string> session_id, const Error& e,
                             std::string_view request) {
  auto ctx = e.context().is_object() ? e.context() : nlohmann::json::object();
  if (!request.empty()) ctx["request"] = request;
  return {std::move(session_id), std::string(to_string(e.code())), e.what(), std::move(ctx)};
}

std::optional<std::string> session_of(const wire::Message& m) {
  return std::visit(
      [](const auto& v) -> std::optional<std::string> {
        if constexpr (requires { v.session_id; })
          return v.session_id;
        else
          return std::nullopt;
      },
      m);
}

bool is_request(const wire::Message& m) {
  return std::holds_alternative<wire::CreateSession>(m) ||
         std::holds_alternative<wire::RegisterBuffer>(m) ||
         std::holds_alternative<wire::FrameLayerMsg>(m) ||
         std::holds_alternative<wire::FrameComplete>(m) ||
         std::holds_alternative<wire::GetFrame>(m) ||
         std::holds_alternative<wire::StyleCapture>(m);
}

} // namespace

void Server::Impl::start() {
  {
    std::lock_guard lock(mutex);
    if (started) return;
    started = true;
  }
  const auto address = net::ip::make_address(cfg.bind_address);
  tcp::endpoint endpoint(address, cfg.port);
  acceptor.open(endpoint.protocol());
  acceptor.set_option(net::socket_base::reuse_address(true));
  acceptor.bind(endpoint);
  acceptor.listen(net::socket_base::max_listen_connections);
  bound_port = acceptor.local_endpoint().port();
  do_accept();
  for (std::size_t i = 0; i < cfg.io_threads; ++i)
    io_threads.emplace_back([this] { ioc.run(); });
}

void Server::Impl::stop() {
  {
    std::lock_guard lock(mutex);
    if (stopped) return;
    stopped = true;
  }
  ioc.stop();
  for (auto& t : io_threads)
    if (t.joinable()) t.join();
  beast::error_code ec;
  acceptor.close(ec);
  stopped_cv.notify_all();
}

void Server::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted) return;
    } else {
      std::make_shared<Connection>(std::move(socket), *this)->run();
    }
    do_accept();
  });
}

void Server::Impl::claim(const std::string& session_id, const std::shared_ptr<Connection>& conn) {
  std::lock_guard lock(mutex);
  owners[session_id] = conn;
  if (auto it = gc_timers.find(session_id); it != gc_timers.end()) {
    it->second->cancel();
    gc_timers.erase(it);
  }
}

void Server::Impl::on_disconnect(const Connection* conn) {
  std::vector<std::string> orphaned;
  {
    std::lock_guard lock(mutex);
    for (auto it = owners.begin(); it != owners.end();) {
      auto owner = it->second.lock();
      if (!owner || owner.get() == conn) {
        orphaned.push_back(it->first);
        it = owners.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (const auto& id : orphaned) {
    if (cfg.session_grace_seconds <= 0) {
      engine.close_session(id);
      continue;
    }
    auto timer = std::make_shared<net::steady_timer>(
        ioc, std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                 std::chrono::duration<double>(cfg.session_grace_seconds)));
    {
      std::lock_guard lock(mutex);
      gc_timers[id] = timer;
    }
    timer->async_wait([this, id, timer](beast::error_code ec) {
      if (ec) return;
      {
        std::lock_guard lock(mutex);
        if (owners.count(id)) return;
        auto it = gc_timers.find(id);
        if (it == gc_timers.end() || it->second != timer) return;
        gc_timers.erase(it);
      }
      engine.close_session(id);
    });
  }
}

void Server::Impl::route(const std::string& session_id, const SessionEvent& event) {
  std::shared_ptr<Connection> conn;
  {
    std::lock_guard lock(mutex);
    auto it = owners.find(session_id);
    if (it != owners.end()) conn = it->second.lock();
  }
  if (!conn) return;

  wire::Message msg = std::visit(
      overloaded{
          [&](const FrameReady& e) -> wire::Message {
            return wire::FrameReadyMsg{session_id, e.frame_index, base64::encode(*e.png)};
          },
          [&](const StoreProgress& e) -> wire::Message {
            return wire::StoreProgressMsg{session_id, e.stored, e.capacity};
          },
          [&](const FrameDropped& e) -> wire::Message {
            return wire::ErrorMsg{session_id, std::string(to_string(ErrorCode::FrameDropped)),
                                  "frame " + std::to_string(e.frame_index) + " dropped (" +
                                      e.reason + ")",
                                  {{"frame_index", e.frame_index}, {"reason", e.reason}}};
          },
          [&](const JobFailed& e) -> wire::Message {
            auto ctx = e.context.is_object() ? e.context : nlohmann::json::object();
            ctx["frame_index"] = e.frame_index;
            ctx["buffer_id"] = e.buffer_id;
            return wire::ErrorMsg{session_id, std::string(to_string(e.code)), e.message, ctx};
          },
      },
      event);
  conn->send(wire::encode(msg));
}

void Server::Impl::handle(const std::shared_ptr<Connection>& conn, const std::string& text) {
  std::optional<std::string> sid;
  std::string_view request;
  try {
    auto msg = wire::decode(text);
    request = wire::type_name(msg);
    sid = session_of(msg);
    // only requests move ownership; echoed server messages are rejected below
    if (sid && is_request(msg) && engine.has_session(*sid)) claim(*sid, conn);

    std::visit(
        overloaded{
            [&](const wire::CreateSession& m) {
              auto overrides = m.config;
              overrides.erase("frames_dir"); // server-side decisions
              overrides.erase("backend");
              auto scfg = session_config_from_json(overrides, cfg.session);
              std::weak_ptr<Impl> weak = shared_from_this();
              auto id = engine.create_session(scfg, [weak](const std::string& s, const SessionEvent& e) {
                if (auto self = weak.lock()) self->route(s, e);
              });
              claim(id, conn);
              conn->send(wire::encode(wire::SessionCreated{id}));
            },
            [&](const wire::RegisterBuffer& m) { engine.register_buffer(m.session_id, m.spec); },
            [&](const wire::FrameLayerMsg& m) {
              if (!engine.has_session(m.session_id))
                throw Error(ErrorCode::UnknownSession, "unknown session '" + m.session_id + "'");
              auto bytes = std::make_shared<const Bytes>(base64::decode(m.png_b64));
              engine.submit_layer({m.session_id, m.frame_index, m.buffer_id, png::decode(*bytes)},
                                  bytes);
            },
            [&](const wire::FrameComplete& m) { engine.frame_complete(m.session_id, m.frame_index); },
            [&](const wire::GetFrame& m) {
              auto rec = engine.get_frame(m.session_id, m.frame_index);
              conn->send(wire::encode(
                  wire::FrameData{m.session_id, m.frame_index, base64::encode(*rec.final_png)}));
            },
            [&](const wire::StyleCapture& m) {
              if (!engine.has_session(m.session_id))
                throw Error(ErrorCode::UnknownSession, "unknown session '" + m.session_id + "'");
              net::post(blocking, [this, conn, m] {
                try {
                  auto img = engine.style_capture(m.session_id, m.frame_index, m.rect, m.prompt, m.seed);
                  conn->send(wire::encode(
                      wire::StyleResult{m.session_id, base64::encode(png::encode(img))}));
                } catch (const Error& e) {
                  conn->send(wire::encode(error_message(m.session_id, e, "style_capture")));
                } catch (const std::exception& e) {
                  conn->send(wire::encode(
                      wire::ErrorMsg{m.session_id, "INTERNAL", e.what(), {{"request", "style_capture"}}}));
                }
              });
            },
            [&](const auto& m) {
              throw Error(ErrorCode::BadMessage,
                          "'" + std::string(wire::type_name(m)) + "' is a server-to-client message",
                          {{"type", wire::type_name(m)}});
            },
        },
        msg);
  } catch (const Error& e) {
    conn->send(wire::encode(error_message(sid, e, request)));
  } catch (const std::exception& e) {
    conn->send(wire::encode(wire::ErrorMsg{sid, "INTERNAL", e.what(), {{"request", request}}}));
  }
}

Server::Server(ServerConfig cfg, EngineOptions engine_opts)
    : impl_(std::make_shared<Impl>(std::move(cfg), std::move(engine_opts))) {}

Server::~Server() { impl_->stop(); }

void Server::start() { impl_->start(); }

void Server::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [&] { return impl_->stopped; });
}

void Server::stop() { impl_->stop(); }

std::uint16_t Server::port() const { return impl_->bound_port; }

Engine& Server::engine() { return impl_->engine; }

std::size_t Server::connection_count() const { return impl_->connections.load(); }

} // namespace artbridge
