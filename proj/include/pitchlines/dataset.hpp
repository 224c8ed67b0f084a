#pragma once

// JSON Lines persistence of segment records and annotation sessions.
//
// File layout: an optional header line {"schema_version":1,"images":[...]}
// followed by one record object per line. A session with neither records nor
// images is written as a zero-byte file.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pitchlines/classifier.hpp"
#include "pitchlines/errors.hpp"

namespace pitchlines {

inline constexpr int kSchemaVersion = 1;

struct SegmentRecord {
  std::string image;  // relative to the session file's directory
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double length = 0;
  Vec3 grad_h{};
  Vec3 grad_v{};
  std::string predicted = "none";
  std::optional<std::string> human_label;

  RgbGradient gradient() const { return {grad_h, grad_v}; }
};

struct AnnotationSession {
  int schema_version = kSchemaVersion;
  std::vector<std::string> images;  // sorted, unique
  std::vector<SegmentRecord> records;
};

inline bool valid_human_label(std::string_view s) { return parse_label(s).has_value(); }

/// Checks the record invariants; returns an empty string when valid.
inline std::string record_problem(const SegmentRecord& r) {
  for (double v : {r.x1, r.y1, r.x2, r.y2, r.length})
    if (!std::isfinite(v)) return "non-finite coordinate or length";
  if (std::abs(std::hypot(r.x2 - r.x1, r.y2 - r.y1) - r.length) > 1e-3) return "length inconsistent with endpoints";
  for (const Vec3* g : {&r.grad_h, &r.grad_v})
    for (double c : *g)
      if (!std::isfinite(c) || c < -255.0 || c > 255.0) return "gradient component outside [-255, 255]";
  if (!parse_label(r.predicted)) return "invalid predicted label '" + r.predicted + "'";
  if (r.human_label && !valid_human_label(*r.human_label)) return "invalid human_label '" + *r.human_label + "'";
  return {};
}

inline nlohmann::json to_json(const SegmentRecord& r) {
  nlohmann::json j;
  j["image"] = r.image;
  j["x1"] = r.x1;
  j["y1"] = r.y1;
  j["x2"] = r.x2;
  j["y2"] = r.y2;
  j["length"] = r.length;
  j["grad_h"] = r.grad_h;
  j["grad_v"] = r.grad_v;
  j["predicted"] = r.predicted;
  if (r.human_label) j["human_label"] = *r.human_label;
  return j;
}

/// Parses one record object. `line` is used only for error messages.
inline SegmentRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw SchemaError(line, "record must be a JSON object");
  static const std::set<std::string, std::less<>> known{"image", "x1", "y1", "x2", "y2", "length",
                                                        "grad_h", "grad_v", "predicted", "human_label"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw SchemaError(line, "unknown key '" + key + "'");
  auto need = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(line, std::string("missing required field '") + key + "'");
    return *it;
  };
  auto number = [&](const char* key) {
    const auto& v = need(key);
    if (!v.is_number()) throw SchemaError(line, std::string("field '") + key + "' must be a number");
    return v.get<double>();
  };
  auto triplet = [&](const char* key) {
    const auto& v = need(key);
    if (!v.is_array() || v.size() != 3 || !std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_number(); }))
      throw SchemaError(line, std::string("field '") + key + "' must be an array of 3 numbers");
    return Vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  };
  SegmentRecord r;
  const auto& image = need("image");
  if (!image.is_string()) throw SchemaError(line, "field 'image' must be a string");
  r.image = image.get<std::string>();
  r.x1 = number("x1");
  r.y1 = number("y1");
  r.x2 = number("x2");
  r.y2 = number("y2");
  r.length = number("length");
  r.grad_h = triplet("grad_h");
  r.grad_v = triplet("grad_v");
  const auto& pred = need("predicted");
  if (!pred.is_string()) throw SchemaError(line, "field 'predicted' must be a string");
  r.predicted = pred.get<std::string>();
  if (auto it = j.find("human_label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(line, "field 'human_label' must be a string or null");
    r.human_label = it->get<std::string>();
  }
  if (auto problem = record_problem(r); !problem.empty()) throw SchemaError(line, problem);
  return r;
}

/// Record for one classified segment; human_label stays empty.
inline SegmentRecord to_record(const ClassifiedSegment& c, std::string image) {
  SegmentRecord r;
  r.image = std::move(image);
  r.x1 = c.segment.x1;
  r.y1 = c.segment.y1;
  r.x2 = c.segment.x2;
  r.y2 = c.segment.y2;
  r.length = std::hypot(r.x2 - r.x1, r.y2 - r.y1);
  r.grad_h = c.grad.h;
  r.grad_v = c.grad.v;
  r.predicted = std::string(to_string(c.label));
  return r;
}

/// Serializes a session to JSON Lines text.
inline std::string to_jsonl(const AnnotationSession& s) {
  std::string out;
  if (s.records.empty() && s.images.empty()) return out;
  nlohmann::json header{{"schema_version", s.schema_version}, {"images", s.images}};
  out += header.dump();
  out += '\n';
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    if (auto problem = record_problem(s.records[i]); !problem.empty())
      throw SchemaError(0, "record " + std::to_string(i) + ": " + problem);
    out += to_json(s.records[i]).dump();
    out += '\n';
  }
  return out;
}

/// Images referenced by the records, sorted and unique.
inline std::vector<std::string> images_of(std::span<const SegmentRecord> records) {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.image);
  return {s.begin(), s.end()};
}

/// Builds a session, keeping records stable-ordered by image (detection order within one image).
inline AnnotationSession make_session(std::vector<SegmentRecord> records, std::vector<std::string> images = {}) {
  AnnotationSession s;
  std::stable_sort(records.begin(), records.end(),
                   [](const SegmentRecord& a, const SegmentRecord& b) { return a.image < b.image; });
  std::set<std::string> all(images.begin(), images.end());
  for (const auto& r : records) all.insert(r.image);
  s.images.assign(all.begin(), all.end());
  s.records = std::move(records);
  return s;
}

inline AnnotationSession parse_jsonl(std::string_view text) {
  AnnotationSession s;
  bool have_header = false;
  std::set<std::string> images;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("schema_version")) {
      if (have_header || !s.records.empty()) throw SchemaError(line_no, "header line must come first");
      for (const auto& [key, _] : j.items())
        if (key != "schema_version" && key != "images") throw SchemaError(line_no, "unknown header key '" + key + "'");
      if (!j["schema_version"].is_number_integer()) throw SchemaError(line_no, "schema_version must be an integer");
      s.schema_version = j["schema_version"].get<int>();
      if (s.schema_version != kSchemaVersion)
        throw SchemaError(line_no, "unsupported schema_version " + std::to_string(s.schema_version));
      if (j.contains("images")) {
        if (!j["images"].is_array()) throw SchemaError(line_no, "images must be an array");
        for (const auto& im : j["images"]) {
          if (!im.is_string()) throw SchemaError(line_no, "image paths must be strings");
          images.insert(im.get<std::string>());
        }
      }
      have_header = true;
      continue;
    }
    s.records.push_back(record_from_json(j, line_no));
    images.insert(s.records.back().image);
  }
  s.images.assign(images.begin(), images.end());
  return s;
}

inline AnnotationSession read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return parse_jsonl(ss.str());
}

/// Writes to a sibling temp file, then renames over `path`. `before_rename`
/// runs between the two steps (tests use it to inject a crash).
inline void write_session(const AnnotationSession& s, const std::filesystem::path& path,
                          const std::function<void()>& before_rename = {}) {
  const std::string text = to_jsonl(s);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  if (before_rename) before_rename();
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

inline void write_records(std::span<const SegmentRecord> records, const std::filesystem::path& path) {
  AnnotationSession s;
  s.records.assign(records.begin(), records.end());
  s.images = images_of(records);
  write_session(s, path);
}

/// Sets one record's human label and persists the session atomically. On any
/// failure the in-memory session is left unchanged.
inline void set_label(AnnotationSession& session, std::size_t index, std::string_view label,
                      const std::filesystem::path& path) {
  if (index >= session.records.size())
    throw IndexError("record index " + std::to_string(index) + " out of range (" +
                     std::to_string(session.records.size()) + " records)");
  if (!valid_human_label(label)) throw InvalidParam("invalid label '" + std::string(label) + "'");
  auto& rec = session.records[index];
  const auto previous = rec.human_label;
  rec.human_label = std::string(label);
  try {
    write_session(session, path);
  } catch (...) {
    rec.human_label = previous;
    throw;
  }
}

}  // namespace pitchlines
