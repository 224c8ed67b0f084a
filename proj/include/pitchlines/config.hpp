#pragma once

// JSON files for detector parameters, classifier thresholds and scene specs.
// Unknown keys are rejected so typos fail loudly.
//
// Classifier file:
//   {"references": [{"name": "GW", "delta": [255,127,255], "angle_max_deg": 20,
//                    "proj_min": 80, "len_min": 20, "label": "field_line"}, ...],
//    "signed_match": false}
// "delta" and "label" may be omitted for the built-in names GW and GB.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "pitchlines/classifier.hpp"
#include "pitchlines/elsed.hpp"
#include "pitchlines/errors.hpp"
#include "pitchlines/synthetic.hpp"

namespace pitchlines {

using nlohmann::json;

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

namespace detail {

inline void only_keys(const json& j, std::initializer_list<std::string_view> keys, std::string_view what) {
  if (!j.is_object()) throw FormatError(std::string(what) + " must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (auto key : keys) ok = ok || key == k;
    if (!ok) throw FormatError(std::string(what) + ": unknown key '" + k + "'");
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("bad value for '") + key + "'");
  }
}

inline Vec3 vec3_of(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) throw FormatError(std::string(key) + " must be an array of 3 numbers");
  Vec3 v{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw FormatError(std::string(key) + " must be an array of 3 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline Rgb rgb_of(const json& j, const char* key) {
  const Vec3 v = vec3_of(j, key);
  for (double c : v)
    if (c < 0 || c > 255 || c != static_cast<int>(c)) throw FormatError(std::string(key) + " must hold integers 0..255");
  return {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
}

}  // namespace detail

inline json to_json(const DetectorParams& p) {
  return {{"gradient_threshold", p.gradient_threshold},
          {"anchor_threshold", p.anchor_threshold},
          {"scan_interval", p.scan_interval},
          {"min_line_length", p.min_line_length},
          {"validation_angle_tol", p.validation_angle_tol},
          {"aligned_fraction", p.aligned_fraction},
          {"gaussian_kernel", p.gaussian_kernel},
          {"gaussian_sigma", p.gaussian_sigma},
          {"skip_budget", p.skip_budget},
          {"fit_min_pixels", p.fit_min_pixels},
          {"max_pixel_distance", p.max_pixel_distance},
          {"max_fit_rms", p.max_fit_rms}};
}

inline DetectorParams detector_params_from_json(const json& j) {
  detail::only_keys(j,
                    {"gradient_threshold", "anchor_threshold", "scan_interval", "min_line_length",
                     "validation_angle_tol", "aligned_fraction", "gaussian_kernel", "gaussian_sigma", "skip_budget",
                     "fit_min_pixels", "max_pixel_distance", "max_fit_rms"},
                    "detector config");
  DetectorParams p;
  detail::take(j, "gradient_threshold", p.gradient_threshold);
  detail::take(j, "anchor_threshold", p.anchor_threshold);
  detail::take(j, "scan_interval", p.scan_interval);
  detail::take(j, "min_line_length", p.min_line_length);
  detail::take(j, "validation_angle_tol", p.validation_angle_tol);
  detail::take(j, "aligned_fraction", p.aligned_fraction);
  detail::take(j, "gaussian_kernel", p.gaussian_kernel);
  detail::take(j, "gaussian_sigma", p.gaussian_sigma);
  detail::take(j, "skip_budget", p.skip_budget);
  detail::take(j, "fit_min_pixels", p.fit_min_pixels);
  detail::take(j, "max_pixel_distance", p.max_pixel_distance);
  detail::take(j, "max_fit_rms", p.max_fit_rms);
  try {
    p.validate();
  } catch (const InvalidParam& e) {
    throw FormatError(std::string("detector config: ") + e.what());
  }
  return p;
}

/// Built-in reference for "GW" or "GB".
inline std::optional<std::pair<TransitionRef, Label>> builtin_reference(std::string_view name) {
  if (name == "GW") return std::pair{TransitionRef::green_white(), Label::FIELD_LINE};
  if (name == "GB") return std::pair{TransitionRef::green_black(), Label::FIELD_BOUNDARY};
  return std::nullopt;
}

inline json to_json(const ReferenceRule& r) {
  return {{"name", r.ref.name()},
          {"delta", r.ref.delta()},
          {"angle_max_deg", r.thresholds.angle_max},
          {"proj_min", r.thresholds.proj_min},
          {"len_min", r.thresholds.len_min},
          {"label", to_string(r.label)}};
}

inline json to_json(const ClassifierConfig& c) {
  json refs = json::array();
  for (const auto& r : c.rules) refs.push_back(to_json(r));
  return {{"references", refs}, {"signed_match", c.signed_match}};
}

inline ReferenceRule reference_rule_from_json(const json& j) {
  detail::only_keys(j, {"name", "delta", "angle_max_deg", "proj_min", "len_min", "label"}, "reference");
  std::string name;
  detail::take(j, "name", name);
  if (name.empty()) throw FormatError("reference needs a non-empty name");
  auto builtin = builtin_reference(name);
  std::optional<TransitionRef> ref;
  Label label = builtin ? builtin->second : Label::NONE;
  if (auto it = j.find("delta"); it != j.end()) {
    try {
      ref = TransitionRef(name, detail::vec3_of(*it, "delta"));
    } catch (const InvalidParam& e) {
      throw FormatError(std::string("reference ") + name + ": " + e.what());
    }
  } else if (builtin) {
    ref = builtin->first;
  } else {
    throw FormatError("reference " + name + " needs a delta");
  }
  if (auto it = j.find("label"); it != j.end()) {
    auto l = it->is_string() ? parse_label(it->get<std::string>()) : std::nullopt;
    if (!l || *l == Label::NONE) throw FormatError("reference " + name + ": label must be field_line or field_boundary");
    label = *l;
  }
  if (label == Label::NONE) throw FormatError("reference " + name + " needs a label");
  Thresholds t;
  detail::take(j, "angle_max_deg", t.angle_max);
  detail::take(j, "proj_min", t.proj_min);
  detail::take(j, "len_min", t.len_min);
  try {
    t.validate();
  } catch (const InvalidParam& e) {
    throw FormatError("reference " + name + ": " + e.what());
  }
  return {*ref, t, label};
}

inline ClassifierConfig classifier_config_from_json(const json& j) {
  detail::only_keys(j, {"references", "signed_match"}, "classifier config");
  ClassifierConfig c;
  detail::take(j, "signed_match", c.signed_match);
  auto it = j.find("references");
  if (it == j.end() || !it->is_array() || it->empty()) throw FormatError("classifier config needs a non-empty references array");
  for (const auto& r : *it) c.rules.push_back(reference_rule_from_json(r));
  return c;
}

/// Replaces the rule with the same reference name, or appends it.
inline void upsert_rule(ClassifierConfig& c, const ReferenceRule& rule) {
  for (auto& r : c.rules)
    if (r.ref.name() == rule.ref.name()) {
      r = rule;
      return;
    }
  c.rules.push_back(rule);
}

inline ClassifierConfig read_classifier_config(const std::filesystem::path& path) {
  return classifier_config_from_json(read_json_file(path));
}

inline DetectorParams read_detector_params(const std::filesystem::path& path) {
  return detector_params_from_json(read_json_file(path));
}

inline json to_json(const SceneSpec& s) {
  auto rgb = [](Rgb c) { return json::array({c.r, c.g, c.b}); };
  return {{"width", s.width},
          {"height", s.height},
          {"line_count", s.line_count},
          {"field_color", rgb(s.field_color)},
          {"stroke_color", rgb(s.stroke_color)},
          {"stroke_width", s.stroke_width},
          {"min_stroke_length", s.min_stroke_length},
          {"max_stroke_length", s.max_stroke_length},
          {"allow_crossings", s.allow_crossings},
          {"boundary", s.boundary},
          {"boundary_color", rgb(s.boundary_color)},
          {"distractors", s.distractors},
          {"brightness", s.lighting.brightness},
          {"tint", s.lighting.tint},
          {"noise_sigma", s.noise_sigma}};
}

inline SceneSpec scene_spec_from_json(const json& j) {
  detail::only_keys(j,
                    {"width", "height", "line_count", "field_color", "stroke_color", "stroke_width",
                     "min_stroke_length", "max_stroke_length", "allow_crossings", "boundary", "boundary_color",
                     "distractors", "brightness", "tint", "noise_sigma"},
                    "scene spec");
  SceneSpec s;
  detail::take(j, "width", s.width);
  detail::take(j, "height", s.height);
  detail::take(j, "line_count", s.line_count);
  if (j.contains("field_color")) s.field_color = detail::rgb_of(j["field_color"], "field_color");
  if (j.contains("stroke_color")) s.stroke_color = detail::rgb_of(j["stroke_color"], "stroke_color");
  detail::take(j, "stroke_width", s.stroke_width);
  detail::take(j, "min_stroke_length", s.min_stroke_length);
  detail::take(j, "max_stroke_length", s.max_stroke_length);
  detail::take(j, "allow_crossings", s.allow_crossings);
  detail::take(j, "boundary", s.boundary);
  if (j.contains("boundary_color")) s.boundary_color = detail::rgb_of(j["boundary_color"], "boundary_color");
  detail::take(j, "distractors", s.distractors);
  detail::take(j, "brightness", s.lighting.brightness);
  if (j.contains("tint")) s.lighting.tint = detail::vec3_of(j["tint"], "tint");
  detail::take(j, "noise_sigma", s.noise_sigma);
  s.validate();
  return s;
}

}  // namespace pitchlines
