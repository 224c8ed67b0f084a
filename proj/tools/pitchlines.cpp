// pitchlines command-line tool: detect, annotate, train, eval, bench, synth.
//
// Exit codes: 0 success, 1 IO or configuration error, 2 training precondition.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "pitchlines/pitchlines.hpp"
#include "pitchlines/server.hpp"

namespace fs = std::filesystem;
using namespace pitchlines;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitPrecondition = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("pitchlines");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PITCHLINES_LOG")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring PITCHLINES_LOG={} (expected error, warn, info or debug)", v);
  }
}

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png" || ext == ".ppm";
}

/// A single file, or the image files of a directory in name order.
std::vector<fs::path> list_images(const fs::path& input) {
  if (!fs::exists(input)) throw IoError("no such file or directory: " + input.string());
  if (!fs::is_directory(input)) return {input};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(input))
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string relative_to(const fs::path& p, const fs::path& base_file) {
  fs::path base = base_file.parent_path();
  if (base.empty()) base = ".";
  return fs::relative(fs::absolute(p), fs::absolute(base)).generic_string();
}

struct Pipeline {
  DetectorParams params;
  ClassifierConfig classifier = ClassifierConfig::defaults();
};

Pipeline load_pipeline(const std::string& config, const std::string& thresholds) {
  Pipeline p;
  if (!config.empty()) p.params = read_detector_params(config);
  if (!thresholds.empty()) p.classifier = read_classifier_config(thresholds);
  return p;
}

/// Detects over every image and returns the session with paths relative to `session_path`.
AnnotationSession detect_session(const std::vector<fs::path>& images, const Pipeline& p, const fs::path& session_path,
                                 const std::optional<fs::path>& draw_dir) {
  std::vector<SegmentRecord> records;
  std::vector<std::string> names;
  for (const auto& path : images) {
    const RgbImage img = decode_image(path);
    const auto segs = detect_and_classify(img, p.params, p.classifier);
    const std::string name = relative_to(path, session_path);
    names.push_back(name);
    for (const auto& s : segs) records.push_back(to_record(s, name));
    spdlog::info("{}: {} segments", path.string(), segs.size());
    if (draw_dir) {
      fs::create_directories(*draw_dir);
      write_image(draw_overlay(img, segs), *draw_dir / (path.stem().string() + "_overlay.png"));
    }
  }
  return make_session(std::move(records), std::move(names));
}

int cmd_detect(const std::string& input, const std::string& config, const std::string& thresholds,
               const std::string& output, const std::string& draw) {
  const Pipeline p = load_pipeline(config, thresholds);
  const auto images = list_images(input);
  std::optional<fs::path> draw_dir;
  if (!draw.empty()) draw_dir = fs::path(draw);
  const auto session = detect_session(images, p, output, draw_dir);
  write_session(session, output);
  spdlog::info("wrote {} records for {} images to {}", session.records.size(), images.size(), output);
  return kExitOk;
}

int cmd_annotate(const std::string& images_dir, const std::string& session_path, int port) {
  if (port < 1024 || port > 65535) throw InvalidParam("port must be in [1024, 65535]");
  AnnotationSession session;
  if (fs::exists(session_path)) {
    session = read_records(session_path);
  } else {
    if (images_dir.empty()) throw IoError("session " + session_path + " does not exist and no --images given");
    session = detect_session(list_images(images_dir), Pipeline{}, session_path, std::nullopt);
    write_session(session, session_path);
    spdlog::info("created session {} with {} records", session_path, session.records.size());
  }
  fs::path ui_dir;
  if (const char* env = std::getenv("PITCHLINES_UI_DIR")) ui_dir = env;

  // Signals are taken by a dedicated thread so shutdown runs outside a handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  AnnotationServer server(std::move(session), session_path, ui_dir);
  if (!server.bind("127.0.0.1", port)) {
    spdlog::error("cannot bind port {}", port);
    return kExitIo;
  }
  std::atomic<bool> done{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    if (done) return;
    spdlog::info("signal {} received, shutting down", sig);
    server.stop();
  });
  std::cout << "serving http://127.0.0.1:" << port << "/" << std::endl;
  const bool clean = server.serve();
  done = true;
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  server.flush();
  return clean ? kExitOk : kExitIo;
}

std::vector<SegmentRecord> load_labeled(const std::vector<std::string>& files, std::size_t& skipped) {
  std::vector<SegmentRecord> out;
  skipped = 0;
  for (const auto& f : files) {
    for (auto& r : read_records(f).records) {
      if (r.human_label) out.push_back(std::move(r));
      else ++skipped;
    }
  }
  return out;
}

int cmd_train(const std::vector<std::string>& annotations, const std::string& reference, const std::string& out,
              std::size_t swarm, std::size_t iters, std::uint64_t seed) {
  const auto builtin = builtin_reference(reference);
  if (!builtin) throw InvalidParam("--reference must be GW or GB");
  const auto& [ref, label] = *builtin;
  std::size_t skipped = 0;
  const auto records = load_labeled(annotations, skipped);
  if (skipped) spdlog::warn("ignoring {} unlabeled records", skipped);

  PsoConfig cfg;
  cfg.swarm_size = swarm;
  cfg.iterations = iters;
  cfg.seed = seed;
  TrainResult result;
  try {
    result = train(records, cfg, ref, label);
  } catch (const NoPositives&) {
    std::cerr << "error: no record is labeled " << to_string(label) << "; label at least one positive segment before training "
              << reference << "\n";
    return kExitPrecondition;
  }

  ClassifierConfig merged = fs::exists(out) ? read_classifier_config(out) : ClassifierConfig::defaults();
  upsert_rule(merged, {ref, result.thresholds, label});
  write_json_file(to_json(merged), out);

  fs::path history = fs::path(out).parent_path() / (fs::path(out).stem().string() + "_history.csv");
  std::ofstream hs(history, std::ios::binary | std::ios::trunc);
  if (!hs) throw IoError("cannot write " + history.string());
  hs << "iteration,gbest_score\n";
  for (std::size_t i = 0; i < result.history.size(); ++i) hs << i << ',' << result.history[i] << '\n';
  if (!hs) throw IoError("write failed: " + history.string());

  const auto& r = result.report;
  nlohmann::json report{{"reference", reference},
                        {"angle_max_deg", result.thresholds.angle_max},
                        {"proj_min", result.thresholds.proj_min},
                        {"len_min", result.thresholds.len_min},
                        {"tp", r.tp},
                        {"fp", r.fp},
                        {"tn", r.tn},
                        {"fn", r.fn},
                        {"score", r.score}};
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& annotations, const std::string& thresholds) {
  const ClassifierConfig config = read_classifier_config(thresholds);
  std::size_t skipped = 0;
  const auto records = load_labeled({annotations}, skipped);
  const auto preds = predict(records, config);
  nlohmann::json out;
  for (const auto& rule : config.rules) out[std::string(to_string(rule.label))] = to_json(score(records, preds, rule.label));
  out["records"] = records.size();
  out["unlabeled_skipped"] = skipped;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& input, const std::string& config, const std::string& thresholds, int repeat) {
  const Pipeline p = load_pipeline(config, thresholds);
  const auto paths = list_images(input);
  std::vector<RgbImage> images;
  for (const auto& path : paths) images.push_back(decode_image(path));
  const auto result = benchmark(images, p.params, p.classifier, repeat);
  std::printf("%-40s %10s %10s %10s %8s\n", "image", "mean_ms", "std_ms", "median_ms", "samples");
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& t = result.per_image[i];
    std::printf("%-40s %10.3f %10.3f %10.3f %8zu\n", paths[i].filename().string().c_str(), t.mean_ms, t.std_ms,
                t.median_ms, t.samples);
  }
  const auto& a = result.aggregate;
  std::printf("%-40s %10.3f %10.3f %10.3f %8zu\n", "ALL", a.mean_ms, a.std_ms, a.median_ms, a.samples);
  std::printf("# %s; %d passes, first discarded as warm-up\n", result.note.c_str(), repeat);
  return kExitOk;
}

int cmd_synth(const std::string& out_dir, const std::string& spec_file, std::uint64_t seed, int count) {
  const SceneSpec spec = spec_file.empty() ? SceneSpec{} : scene_spec_from_json(read_json_file(spec_file));
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    const auto s = seed + static_cast<std::uint64_t>(i);
    const SyntheticScene scene = generate_scene(s, spec);
    const std::string stem = "scene_" + std::to_string(s);
    write_image(scene.image, fs::path(out_dir) / (stem + ".png"));
    nlohmann::json truth = nlohmann::json::array();
    for (const auto& t : scene.truth_lines)
      truth.push_back({{"a", {t.a.x, t.a.y}}, {"b", {t.b.x, t.b.y}}, {"width", t.width}, {"class", to_string(t.cls)}});
    write_json_file({{"seed", s}, {"spec", to_json(spec)}, {"truth_lines", truth}}, fs::path(out_dir) / (stem + ".json"));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"pitchlines: soccer field line detection, classification and threshold training"};
  app.require_subcommand(1);

  std::string input, config, thresholds, output, draw;
  auto* detect = app.add_subcommand("detect", "Detect and classify segments, write a records file");
  detect->add_option("--input", input, "Image file or directory of PNG/PPM images")->required();
  detect->add_option("--config", config, "Detector parameters JSON");
  detect->add_option("--thresholds", thresholds, "Classifier references and thresholds JSON");
  detect->add_option("--output", output, "Output records file (JSON Lines)")->required();
  detect->add_option("--draw", draw, "Directory for overlay PNGs");

  std::string images_dir, session;
  int port = 8080;
  auto* annotate = app.add_subcommand("annotate", "Serve the annotation HTTP API for a session");
  annotate->add_option("--images", images_dir, "Image directory, detected when the session does not exist yet");
  annotate->add_option("--session", session, "Session records file")->required();
  annotate->add_option("--port", port, "TCP port (1024-65535)")->capture_default_str();

  std::vector<std::string> annotations;
  std::string reference = "GW", out;
  std::size_t swarm = 30, iters = 200;
  std::uint64_t seed = 0;
  auto* trainc = app.add_subcommand("train", "Fit thresholds for one reference with PSO");
  trainc->add_option("--annotations", annotations, "Labeled records files")->required()->expected(1, -1);
  trainc->add_option("--reference", reference, "Reference to train: GW (field_line) or GB (field_boundary)")
      ->check(CLI::IsMember({"GW", "GB"}))
      ->capture_default_str();
  trainc->add_option("--out", out, "Thresholds JSON; an existing file keeps its other references")->required();
  trainc->add_option("--swarm", swarm, "Swarm size")->capture_default_str();
  trainc->add_option("--iters", iters, "Iterations")->capture_default_str();
  trainc->add_option("--seed", seed, "Random seed")->capture_default_str();

  std::string eval_annotations, eval_thresholds;
  auto* evalc = app.add_subcommand("eval", "Precision and recall of thresholds on labeled records");
  evalc->add_option("--annotations", eval_annotations, "Labeled records file")->required();
  evalc->add_option("--thresholds", eval_thresholds, "Classifier thresholds JSON")->required();

  std::string bench_input, bench_config, bench_thresholds;
  int repeat = 10;
  auto* bench = app.add_subcommand("bench", "Time detect+classify per image");
  bench->add_option("--input", bench_input, "Image file or directory")->required();
  bench->add_option("--config", bench_config, "Detector parameters JSON");
  bench->add_option("--thresholds", bench_thresholds, "Classifier thresholds JSON");
  bench->add_option("--repeat", repeat, "Passes over the images; the first is discarded")->capture_default_str();

  std::string synth_out, synth_spec;
  std::uint64_t synth_seed = 0;
  int synth_count = 1;
  auto* synth = app.add_subcommand("synth", "Render synthetic field scenes with ground truth");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--spec", synth_spec, "Scene spec JSON");
  synth->add_option("--seed", synth_seed, "First seed")->capture_default_str();
  synth->add_option("--count", synth_count, "Number of scenes")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitIo;
  }

  try {
    if (*detect) return cmd_detect(input, config, thresholds, output, draw);
    if (*annotate) return cmd_annotate(images_dir, session, port);
    if (*trainc) return cmd_train(annotations, reference, out, swarm, iters, seed);
    if (*evalc) return cmd_eval(eval_annotations, eval_thresholds);
    if (*bench) return cmd_bench(bench_input, bench_config, bench_thresholds, repeat);
    if (*synth) return cmd_synth(synth_out, synth_spec, synth_seed, synth_count);
  } catch (const NoPositives& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
