#include "artbridge/cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>

#include "artbridge/backend.hpp"
#include "artbridge/conditioning.hpp"
#include "artbridge/config.hpp"
#include "artbridge/error.hpp"
#include "artbridge/image_ops.hpp"
#include "artbridge/png_io.hpp"
#include "artbridge/replay.hpp"
#include "artbridge/server.hpp"

namespace artbridge::cli {

namespace {

void write_json(const nlohmann::json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump() << '\n';
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
  f << j.dump() << '\n';
}

int serve(ServerConfig cfg, bool quiet, std::ostream& err) {
  const auto address = cfg.bind_address;
  Server server(std::move(cfg));
  server.start();
  if (!quiet) err << "artbridge: listening on ws://" << address << ':' << server.port() << '\n';

  boost::asio::io_context signals_ctx;
  boost::asio::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) { server.stop(); });
  std::thread signal_thread([&] { signals_ctx.run(); });
  server.wait();
  signals_ctx.stop();
  signal_thread.join();
  return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"artbridge: stylize, condition and stream algorithmic art frames", "artbridge"};
  app.require_subcommand(1);
  app.fallthrough(); // global flags may follow the subcommand
  bool quiet = false;
  app.add_flag("--quiet,-q", quiet, "Suppress informational messages");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the WebSocket session server");
  std::optional<std::uint16_t> port;
  std::string config_path;
  std::string serve_backend;
  std::string bind;
  std::string frames_dir;
  std::string api_key_env;
  std::string endpoint;
  serve_cmd->add_option("--port", port, "TCP port");
  serve_cmd->add_option("--config", config_path, "Server config JSON")->check(CLI::ExistingFile);
  serve_cmd->add_option("--backend", serve_backend, "Diffusion backend")
      ->check(CLI::IsMember({"mock", "remote"}));
  serve_cmd->add_option("--bind", bind, "Bind address");
  serve_cmd->add_option("--frames-dir", frames_dir, "Output directory for session frames");
  serve_cmd->add_option("--endpoint", endpoint, "Remote backend URL");
  serve_cmd->add_option("--api-key-env", api_key_env,
                        "Environment variable holding the remote API key");

  // contours
  auto* contours_cmd = app.add_subcommand("contours", "Extract a contour map from a PNG");
  std::string contours_in;
  int threshold = kDefaultForegroundThreshold;
  bool invert = false;
  std::string contours_out;
  contours_cmd->add_option("input", contours_in, "Input PNG")->required()->check(CLI::ExistingFile);
  contours_cmd->add_option("--threshold", threshold, "Foreground luminance threshold")
      ->check(CLI::Range(0, 255));
  contours_cmd->add_flag("--invert", invert, "Treat dark pixels as foreground");
  contours_cmd->add_option("--out", contours_out, "Output JSON (stdout if omitted)");

  // colors
  auto* colors_cmd = app.add_subcommand("colors", "Extract a ranked color palette from a PNG");
  std::string colors_in;
  std::size_t count = 5;
  std::string colors_out;
  colors_cmd->add_option("input", colors_in, "Input PNG")->required()->check(CLI::ExistingFile);
  colors_cmd->add_option("-n", count, "Palette size");
  colors_cmd->add_option("--out", colors_out, "Output JSON (stdout if omitted)");

  // composite
  auto* composite_cmd = app.add_subcommand("composite", "Stack PNG layers bottom to top");
  std::vector<std::string> layer_paths;
  std::string composite_out;
  composite_cmd->add_option("layers", layer_paths, "Background PNG, then layers")
      ->required()
      ->check(CLI::ExistingFile);
  composite_cmd->add_option("--out", composite_out, "Output PNG")->required();

  // stylize
  auto* stylize_cmd = app.add_subcommand("stylize", "Stylize a single PNG through a backend");
  std::string stylize_in;
  std::string prompt;
  double strength = 0.5;
  Seed seed = 0;
  std::string stylize_backend = "mock";
  std::string stylize_out;
  std::string stylize_endpoint;
  std::string stylize_key_env;
  stylize_cmd->add_option("input", stylize_in, "Input PNG")->required()->check(CLI::ExistingFile);
  stylize_cmd->add_option("--prompt", prompt, "Text prompt");
  stylize_cmd->add_option("--strength", strength, "0 keeps the input, 1 departs fully")
      ->check(CLI::Range(0.0, 1.0));
  stylize_cmd->add_option("--seed", seed, "Backend seed");
  stylize_cmd->add_option("--backend", stylize_backend, "Diffusion backend")
      ->check(CLI::IsMember({"mock", "remote"}));
  stylize_cmd->add_option("--endpoint", stylize_endpoint, "Remote backend URL");
  stylize_cmd->add_option("--api-key-env", stylize_key_env,
                          "Environment variable holding the remote API key");
  stylize_cmd->add_option("--out", stylize_out, "Output PNG")->required();

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a recorded session with the mock backend");
  std::string session_dir;
  std::string out_dir;
  replay_cmd->add_option("session_dir", session_dir, "Recorded session directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  replay_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "artbridge: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto info = [&](const std::string& msg) {
    if (!quiet) err << "artbridge: " << msg << '\n';
  };

  try {
    if (*serve_cmd) {
      ServerConfig cfg = config_path.empty() ? ServerConfig{} : load_server_config(config_path);
      if (port) cfg.port = *port;
      if (!bind.empty()) cfg.bind_address = bind;
      if (!frames_dir.empty()) cfg.session.frames_dir = frames_dir;
      if (!serve_backend.empty()) cfg.session.backend.kind = backend_kind_from_string(serve_backend);
      if (!endpoint.empty()) cfg.session.backend.endpoint = endpoint;
      if (!api_key_env.empty()) cfg.session.backend.api_key_env = api_key_env;
      validate(cfg.session);
      return serve(std::move(cfg), quiet, err);
    }
    if (*contours_cmd) {
      const auto map = extract_contours(png::load(contours_in), {threshold, invert});
      write_json(to_json(map), contours_out, out);
      info(std::to_string(map.size()) + " contour points");
      return kExitOk;
    }
    if (*colors_cmd) {
      const auto palette = sample_colors(png::load(colors_in), count);
      write_json(to_json(palette), colors_out, out);
      info(std::to_string(palette.colors.size()) + " colors");
      return kExitOk;
    }
    if (*composite_cmd) {
      std::vector<RasterImage> layers;
      for (const auto& p : layer_paths) layers.push_back(png::load(p));
      png::save(composite(layers), composite_out);
      info("composited " + std::to_string(layers.size()) + " layers");
      return kExitOk;
    }
    if (*stylize_cmd) {
      BackendConfig bc;
      bc.kind = backend_kind_from_string(stylize_backend);
      bc.endpoint = stylize_endpoint;
      if (!stylize_key_env.empty()) bc.api_key_env = stylize_key_env;
      auto backend = make_backend(bc);
      png::save(backend->stylize({png::load(stylize_in), prompt, strength, seed}), stylize_out);
      info("wrote " + stylize_out);
      return kExitOk;
    }
    if (*replay_cmd) {
      const auto r = replay_session(session_dir, out_dir);
      info("replayed " + std::to_string(r.frames_assembled) + " frames into " +
           r.session_dir.string());
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "artbridge: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "artbridge: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

} // namespace artbridge::cli
