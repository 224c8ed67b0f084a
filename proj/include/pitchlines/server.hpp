#pragma once

// HTTP API for the annotation UI.
//
//   GET  /api/images               JSON array of image paths in the session
//   GET  /api/records?image=<p>    records (all when `image` is absent), each with its "index"
//   POST /api/label                {"index": int, "label": string}
//   GET  /api/image/<p>            raw bytes of a session image
//   GET  /                         UI bundle (index.html) or a placeholder page

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>

#include "httplib.h"
#include "json.hpp"

#include "pitchlines/dataset.hpp"
#include "pitchlines/errors.hpp"

namespace pitchlines {

class AnnotationServer {
 public:
  AnnotationServer(AnnotationSession session, std::filesystem::path session_path, std::filesystem::path ui_dir = {})
      : session_(std::move(session)), session_path_(std::move(session_path)), ui_dir_(std::move(ui_dir)) {
    base_dir_ = session_path_.parent_path();
    if (base_dir_.empty()) base_dir_ = ".";
    // httplib also sets SO_REUSEPORT, which would let a second server share a busy port.
    svr_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
  }

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Returns false when the port cannot be bound.
  bool bind(const std::string& host, int port) { return svr_.bind_to_port(host, port); }
  /// Binds an ephemeral port and returns it, or -1.
  int bind_any(const std::string& host) { return svr_.bind_to_any_port(host); }
  /// Blocks until stop() is called.
  bool serve() { return svr_.listen_after_bind(); }
  void stop() { svr_.stop(); }
  bool running() const { return svr_.is_running(); }
  void wait_until_ready() const { svr_.wait_until_ready(); }

  /// Persists the current session.
  void flush() {
    std::unique_lock lock(mu_);
    write_session(session_, session_path_);
  }

  AnnotationSession snapshot() const {
    std::shared_lock lock(mu_);
    return session_;
  }

 private:
  static void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json; charset=utf-8");
  }
  static void send_error(httplib::Response& res, int status, const std::string& msg) {
    send_json(res, {{"error", msg}}, status);
  }

  static const char* mime_for(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".png" || ext == ".PNG") return "image/png";
    if (ext == ".ppm" || ext == ".PPM") return "image/x-portable-pixmap";
    return "application/octet-stream";
  }

  static bool read_file(const std::filesystem::path& p, std::string& out) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
  }

  void routes() {
    svr_.Get("/api/images", [this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(mu_);
      send_json(res, session_.images);
    });

    svr_.Get("/api/records", [this](const httplib::Request& req, httplib::Response& res) {
      const bool filter = req.has_param("image");
      const std::string image = filter ? req.get_param_value("image") : std::string();
      nlohmann::json out = nlohmann::json::array();
      std::shared_lock lock(mu_);
      for (std::size_t i = 0; i < session_.records.size(); ++i) {
        const auto& r = session_.records[i];
        if (filter && r.image != image) continue;
        auto j = to_json(r);
        j["index"] = i;
        if (!r.human_label) j["human_label"] = nullptr;
        out.push_back(std::move(j));
      }
      send_json(res, out);
    });

    svr_.Post("/api/label", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::parse_error&) {
        return send_error(res, 400, "body must be JSON");
      }
      if (!body.is_object() || body.size() != 2 || !body.contains("index") || !body.contains("label"))
        return send_error(res, 400, "body must be {\"index\": int, \"label\": string}");
      if (!body["index"].is_number_integer() || !body["label"].is_string())
        return send_error(res, 400, "index must be an integer and label a string");
      const auto raw = body["index"].get<long long>();
      const std::string label = body["label"].get<std::string>();
      std::unique_lock lock(mu_);
      if (raw < 0) return send_error(res, 400, "record index out of range");
      const auto index = static_cast<std::size_t>(raw);
      try {
        set_label(session_, index, label, session_path_);
      } catch (const IndexError& e) {
        return send_error(res, 400, e.what());
      } catch (const InvalidParam& e) {
        return send_error(res, 400, e.what());
      } catch (const Error& e) {
        return send_error(res, 500, e.what());
      }
      auto j = to_json(session_.records[index]);
      j["index"] = index;
      send_json(res, j);
    });

    svr_.Get(R"(/api/image/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string rel = req.matches[1];
      {
        // Only paths listed in the session are served, which also rules out traversal.
        std::shared_lock lock(mu_);
        if (!std::binary_search(session_.images.begin(), session_.images.end(), rel))
          return send_error(res, 404, "image not in session");
      }
      std::string bytes;
      const auto path = base_dir_ / rel;
      if (!read_file(path, bytes)) return send_error(res, 404, "cannot read image");
      res.set_content(std::move(bytes), mime_for(path));
    });

    svr_.Get("/", [this](const httplib::Request&, httplib::Response& res) {
      std::string html;
      if (!ui_dir_.empty() && read_file(ui_dir_ / "index.html", html)) {
        res.set_content(std::move(html), "text/html; charset=utf-8");
        return;
      }
      res.set_content(
          "<!doctype html><meta charset=\"utf-8\"><title>pitchlines</title>"
          "<p>Annotation UI bundle not found. Set PITCHLINES_UI_DIR to the built UI directory. "
          "The JSON API is available under /api/.</p>",
          "text/html; charset=utf-8");
    });

    if (!ui_dir_.empty() && std::filesystem::is_directory(ui_dir_)) svr_.set_mount_point("/ui", ui_dir_.string());
  }

  AnnotationSession session_;
  std::filesystem::path session_path_;
  std::filesystem::path base_dir_;
  std::filesystem::path ui_dir_;
  mutable std::shared_mutex mu_;
  httplib::Server svr_;
};

}  // namespace pitchlines
