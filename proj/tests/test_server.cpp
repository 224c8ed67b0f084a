#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "pitchlines/server.hpp"

using namespace pitchlines;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

SegmentRecord rec(const std::string& image, double x) {
  SegmentRecord r;
  r.image = image;
  r.x1 = x;
  r.x2 = x + 30;
  r.length = 30;
  r.grad_h = {200, 100, 200};
  r.predicted = "field_line";
  return r;
}

// Session with two images on disk next to the records file.
struct Fixture {
  fs::path dir;
  fs::path session_path;

  explicit Fixture(const std::string& name) {
    dir = fs::temp_directory_path() / "pitchlines_test_server" / name;
    fs::remove_all(dir);
    fs::create_directories(dir / "frames");
    session_path = dir / "session.jsonl";
    std::ofstream(dir / "frames" / "a.png", std::ios::binary) << "PNGA";
    std::ofstream(dir / "frames" / "b.png", std::ios::binary) << "PNGB";
    std::ofstream(dir / "secret.txt") << "secret";
    write_session(make_session({rec("frames/a.png", 1), rec("frames/b.png", 2), rec("frames/a.png", 3)}),
                  session_path);
  }
};

// Runs a server on an ephemeral port for the lifetime of the object.
struct Running {
  AnnotationServer server;
  std::thread thread;
  int port = -1;

  Running(const Fixture& f, fs::path ui = {}) : server(read_records(f.session_path), f.session_path, std::move(ui)) {
    port = server.bind_any("127.0.0.1");
    thread = std::thread([this] { server.serve(); });
    server.wait_until_ready();
  }
  ~Running() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

httplib::Result post_label(httplib::Client& c, const json& body) {
  return c.Post("/api/label", body.dump(), "application/json");
}

}  // namespace

TEST(Server, ListsImages) {
  Fixture f("images");
  Running r(f);
  ASSERT_GT(r.port, 0);
  auto c = r.client();
  auto res = c.Get("/api/images");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body), json::parse(R"(["frames/a.png","frames/b.png"])"));
}

TEST(Server, RecordsCarryIndexAndFilterByImage) {
  Fixture f("records");
  Running r(f);
  auto c = r.client();
  auto all = c.Get("/api/records");
  ASSERT_TRUE(all);
  const auto arr = json::parse(all->body);
  ASSERT_EQ(arr.size(), 3u);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    EXPECT_EQ(arr[i]["index"], i);
    EXPECT_TRUE(arr[i]["human_label"].is_null());
  }
  auto only_a = c.Get("/api/records?image=frames%2Fa.png");
  ASSERT_TRUE(only_a);
  const auto a = json::parse(only_a->body);
  ASSERT_EQ(a.size(), 2u);
  for (const auto& j : a) EXPECT_EQ(j["image"], "frames/a.png");
  EXPECT_EQ(a[0]["index"], 0);
  EXPECT_EQ(a[1]["index"], 1);
  auto none = c.Get("/api/records?image=nope.png");
  ASSERT_TRUE(none);
  EXPECT_EQ(json::parse(none->body).size(), 0u);
}

TEST(Server, LabelIsPersistedAndReadBack) {
  Fixture f("label");
  {
    Running r(f);
    auto c = r.client();
    auto res = post_label(c, {{"index", 2}, {"label", "field_boundary"}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["human_label"], "field_boundary");
    EXPECT_EQ(read_records(f.session_path).records[2].human_label, "field_boundary");
    auto back = c.Get("/api/records");
    EXPECT_EQ(json::parse(back->body)[2]["human_label"], "field_boundary");
    ASSERT_TRUE(post_label(c, {{"index", 2}, {"label", "none"}}));
  }
  // A new server over the same file sees the last label.
  Running r(f);
  auto c = r.client();
  auto res = c.Get("/api/records");
  EXPECT_EQ(json::parse(res->body)[2]["human_label"], "none");
}

TEST(Server, BadLabelRequestsAre400) {
  Fixture f("bad");
  Running r(f);
  auto c = r.client();
  const std::string before = [&] {
    std::ifstream in(f.session_path);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  const json bodies[] = {
      {{"index", 3}, {"label", "field_line"}},
      {{"index", -1}, {"label", "field_line"}},
      {{"index", 0}, {"label", "goalpost"}},
      {{"index", "0"}, {"label", "field_line"}},
      {{"index", 0}},
      {{"index", 0}, {"label", "field_line"}, {"extra", 1}},
      json::array(),
  };
  for (const auto& b : bodies) {
    auto res = post_label(c, b);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400) << b.dump();
    EXPECT_TRUE(json::parse(res->body).contains("error"));
  }
  auto res = c.Post("/api/label", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  std::ifstream in(f.session_path);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(in), {}), before);
}

TEST(Server, ServesOnlySessionImages) {
  Fixture f("images_bytes");
  Running r(f);
  auto c = r.client();
  auto ok = c.Get("/api/image/frames/b.png");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(ok->body, "PNGB");
  EXPECT_EQ(ok->get_header_value("Content-Type"), "image/png");
  for (const char* path : {"/api/image/secret.txt", "/api/image/../secret.txt", "/api/image/frames/../secret.txt",
                           "/api/image/%2e%2e/secret.txt", "/api/image/frames/c.png"}) {
    auto res = c.Get(path);
    ASSERT_TRUE(res) << path;
    EXPECT_NE(res->status, 200) << path;
    EXPECT_EQ(res->body.find("secret\n"), std::string::npos) << path;
  }
}

TEST(Server, RootServesPlaceholderOrBundle) {
  Fixture f("root");
  {
    Running r(f);
    auto c = r.client();
    auto res = c.Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_NE(res->body.find("/api/"), std::string::npos);
  }
  fs::create_directories(f.dir / "ui");
  std::ofstream(f.dir / "ui" / "index.html") << "<html>bundle</html>";
  Running r(f, f.dir / "ui");
  auto c = r.client();
  auto res = c.Get("/");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, "<html>bundle</html>");
}

TEST(Server, BusyPortIsReported) {
  Fixture f("busy");
  Running r(f);
  AnnotationServer other(read_records(f.session_path), f.session_path);
  EXPECT_FALSE(other.bind("127.0.0.1", r.port));
}
