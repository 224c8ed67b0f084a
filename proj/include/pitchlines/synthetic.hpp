#pragma once

// Synthetic soccer-field frames with known line geometry: green field, white
// strokes, an optional dark boundary band, robot-like distractor boxes, global
// lighting shift and Gaussian pixel noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "pitchlines/classifier.hpp"
#include "pitchlines/errors.hpp"
#include "pitchlines/geometry.hpp"
#include "pitchlines/image.hpp"

namespace pitchlines {

struct Lighting {
  double brightness = 1.0;
  std::array<double, 3> tint{1.0, 1.0, 1.0};
};

struct SceneSpec {
  int width = 640;
  int height = 480;
  int line_count = 6;
  Rgb field_color{20, 125, 30};
  Rgb stroke_color{255, 255, 255};
  double stroke_width = 6.0;
  double min_stroke_length = 120.0;
  double max_stroke_length = 380.0;
  bool allow_crossings = true;
  bool boundary = false;
  Rgb boundary_color{15, 15, 15};
  int distractors = 0;
  Lighting lighting;
  double noise_sigma = 0.0;

  void validate() const {
    if (width < 64 || height < 64) throw InvalidSpec("scene must be at least 64x64");
    if (line_count < 0 || distractors < 0) throw InvalidSpec("counts must be non-negative");
    if (!(stroke_width >= 1.0) || stroke_width > 0.1 * std::min(width, height))
      throw InvalidSpec("stroke_width out of range");
    if (!(min_stroke_length > 2 * stroke_width) || max_stroke_length < min_stroke_length)
      throw InvalidSpec("stroke length range invalid");
    if (max_stroke_length > std::hypot(width, height) * 0.8) throw InvalidSpec("strokes cannot fit in the image");
    if (!(lighting.brightness > 0.0) || !(noise_sigma >= 0.0)) throw InvalidSpec("invalid lighting or noise");
    for (double t : lighting.tint)
      if (!(t > 0.0)) throw InvalidSpec("tint factors must be positive");
    const auto luma = [](Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; };
    if (luma(stroke_color) <= luma(field_color)) throw InvalidSpec("stroke must be brighter than the field");
  }
};

struct TruthLine {
  Vec2 a;
  Vec2 b;
  double width = 0.0;  // 0 for a boundary (single edge)
  Label cls = Label::FIELD_LINE;

  /// Edge lines bounding the feature: two for a stroke, one for a boundary.
  std::vector<std::array<Vec2, 2>> edges() const {
    if (width <= 0.0) return {{a, b}};
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double nx = -(b.y - a.y) / len * width / 2, ny = (b.x - a.x) / len * width / 2;
    return {{Vec2{a.x + nx, a.y + ny}, Vec2{b.x + nx, b.y + ny}},
            {Vec2{a.x - nx, a.y - ny}, Vec2{b.x - nx, b.y - ny}}};
  }

  double edge_distance(Vec2 p) const {
    double best = 1e300;
    for (const auto& e : edges()) best = std::min(best, point_segment_distance(p, e[0], e[1]));
    return best;
  }
};

struct Box {
  double x0, y0, x1, y1;
  Rgb color;
};

struct SyntheticScene {
  RgbImage image;
  std::vector<TruthLine> truth_lines;
  std::vector<Box> distractors;
  Lighting lighting;
};

namespace detail {

// Centerline segments intersect (proper or touching).
inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2, Vec2* at = nullptr) {
  const double rx = p2.x - p1.x, ry = p2.y - p1.y, sx = q2.x - q1.x, sy = q2.y - q1.y;
  const double den = rx * sy - ry * sx;
  if (std::abs(den) < 1e-12) return false;
  const double t = ((q1.x - p1.x) * sy - (q1.y - p1.y) * sx) / den;
  const double u = ((q1.x - p1.x) * ry - (q1.y - p1.y) * rx) / den;
  if (t < 0 || t > 1 || u < 0 || u > 1) return false;
  if (at) *at = {p1.x + t * rx, p1.y + t * ry};
  return true;
}

inline double segment_segment_distance(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
}

inline double box_segment_distance(const Box& b, Vec2 p, Vec2 q) {
  const Vec2 c[4] = {{b.x0, b.y0}, {b.x1, b.y0}, {b.x1, b.y1}, {b.x0, b.y1}};
  const auto inside = [&](Vec2 v) { return v.x >= b.x0 && v.x <= b.x1 && v.y >= b.y0 && v.y <= b.y1; };
  if (inside(p) || inside(q)) return 0.0;
  double d = 1e300;
  for (int k = 0; k < 4; ++k) d = std::min(d, segment_segment_distance(c[k], c[(k + 1) % 4], p, q));
  return d;
}

class Canvas {
 public:
  Canvas(int w, int h, Rgb fill) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < px_.size(); i += 3) {
      px_[i] = fill.r;
      px_[i + 1] = fill.g;
      px_[i + 2] = fill.b;
    }
  }

  void blend(int x, int y, Rgb c, double coverage) {
    if (coverage <= 0.0 || x < 0 || y < 0 || x >= w_ || y >= h_) return;
    float* p = &px_[(static_cast<std::size_t>(y) * w_ + x) * 3];
    const float a = static_cast<float>(std::min(coverage, 1.0));
    p[0] += a * (c.r - p[0]);
    p[1] += a * (c.g - p[1]);
    p[2] += a * (c.b - p[2]);
  }

  // Oriented rectangle with butt caps; coverage from box distance at pixel centres.
  void stroke(Vec2 a, Vec2 b, double width, Rgb c) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double ux = (b.x - a.x) / len, uy = (b.y - a.y) / len;
    const double cx = (a.x + b.x) / 2, cy = (a.y + b.y) / 2;
    const double pad = width + 2;
    const int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) - pad));
    const int x1 = static_cast<int>(std::ceil(std::max(a.x, b.x) + pad));
    const int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) - pad));
    const int y1 = static_cast<int>(std::ceil(std::max(a.y, b.y) + pad));
    for (int y = std::max(0, y0); y <= std::min(h_ - 1, y1); ++y)
      for (int x = std::max(0, x0); x <= std::min(w_ - 1, x1); ++x) {
        const double dx = x - cx, dy = y - cy;
        const double s = dx * ux + dy * uy, t = -dx * uy + dy * ux;
        const double cs = std::clamp(len / 2 - std::abs(s) + 0.5, 0.0, 1.0);
        const double ct = std::clamp(width / 2 - std::abs(t) + 0.5, 0.0, 1.0);
        blend(x, y, c, cs * ct);
      }
  }

  void box(const Box& b) {
    for (int y = std::max(0, static_cast<int>(b.y0) - 1); y <= std::min(h_ - 1, static_cast<int>(b.y1) + 1); ++y)
      for (int x = std::max(0, static_cast<int>(b.x0) - 1); x <= std::min(w_ - 1, static_cast<int>(b.x1) + 1); ++x) {
        const double cx = std::clamp(std::min(x - b.x0, b.x1 - x) + 0.5, 0.0, 1.0);
        const double cy = std::clamp(std::min(y - b.y0, b.y1 - y) + 0.5, 0.0, 1.0);
        blend(x, y, b.color, cx * cy);
      }
  }

  // Paints the side of line a-b with smaller y (for a left-to-right line).
  void half_plane(Vec2 a, Vec2 b, Rgb c) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double nx = -(b.y - a.y) / len, ny = (b.x - a.x) / len;  // points towards +y for a->b left-to-right
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) {
        const double sd = (x - a.x) * nx + (y - a.y) * ny;  // > 0 below the line
        blend(x, y, c, std::clamp(0.5 - sd, 0.0, 1.0));
      }
  }

  RgbImage finish(const Lighting& light, double noise_sigma, std::mt19937_64& rng) const {
    RgbImage img(w_, h_);
    auto out = img.bytes();
    std::normal_distribution<double> noise(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
    for (std::size_t i = 0; i < px_.size(); ++i) {
      double v = px_[i] * light.brightness * light.tint[i % 3];
      if (noise_sigma > 0) v += noise(rng);
      out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return img;
  }

 private:
  int w_, h_;
  std::vector<float> px_;
};

}  // namespace detail

/// Distractor palette: robot and clutter colours that are not green-to-white.
inline const std::array<Rgb, 5>& distractor_palette() {
  static const std::array<Rgb, 5> p{{{25, 40, 150}, {235, 130, 30}, {20, 20, 20}, {225, 205, 50}, {220, 60, 200}}};
  return p;
}

/// Renders a deterministic scene for `seed`. Throws InvalidSpec when the
/// requested strokes cannot be placed under the spacing rules.
inline SyntheticScene generate_scene(std::uint64_t seed, const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double W = spec.width, H = spec.height;
  const double margin = 12.0;
  SyntheticScene scene;
  scene.lighting = spec.lighting;

  double top = margin;
  Vec2 bl{}, br{};
  if (spec.boundary) {
    bl = {0.0, H * (0.06 + 0.12 * unit(rng))};
    br = {W - 1.0, H * (0.06 + 0.12 * unit(rng))};
    top = std::max(bl.y, br.y) + 3 * margin;
    scene.truth_lines.push_back({bl, br, 0.0, Label::FIELD_BOUNDARY});
  }

  const double w = spec.stroke_width;
  std::vector<TruthLine> strokes;
  for (int i = 0; i < spec.line_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
      const double len = spec.min_stroke_length + (spec.max_stroke_length - spec.min_stroke_length) * unit(rng);
      const double theta = std::numbers::pi * unit(rng);
      const double cx = margin + (W - 2 * margin) * unit(rng);
      const double cy = top + (H - margin - top) * unit(rng);
      const Vec2 a{cx - std::cos(theta) * len / 2, cy - std::sin(theta) * len / 2};
      const Vec2 b{cx + std::cos(theta) * len / 2, cy + std::sin(theta) * len / 2};
      const auto ok_pt = [&](Vec2 p) { return p.x >= margin && p.x <= W - margin && p.y >= top && p.y <= H - margin; };
      if (!ok_pt(a) || !ok_pt(b)) continue;
      bool ok = true;
      for (const TruthLine& o : strokes) {
        Vec2 at;
        if (detail::segments_intersect(a, b, o.a, o.b, &at)) {
          const double d1 = std::atan2(b.y - a.y, b.x - a.x), d2 = std::atan2(o.b.y - o.a.y, o.b.x - o.a.x);
          double diff = std::fmod(std::abs(d1 - d2), std::numbers::pi);
          diff = std::min(diff, std::numbers::pi - diff);
          const double end_gap = std::min({std::hypot(at.x - a.x, at.y - a.y), std::hypot(at.x - b.x, at.y - b.y),
                                           std::hypot(at.x - o.a.x, at.y - o.a.y), std::hypot(at.x - o.b.x, at.y - o.b.y)});
          if (!spec.allow_crossings || diff < std::numbers::pi / 6 || end_gap < 3 * w + 10) ok = false;
        } else if (detail::segment_segment_distance(a, b, o.a, o.b) < w + 14) {
          ok = false;
        }
        if (!ok) break;
      }
      if (!ok) continue;
      strokes.push_back({a, b, w, Label::FIELD_LINE});
      placed = true;
    }
    if (!placed) throw InvalidSpec("could not place stroke " + std::to_string(i) + " under spacing rules");
  }

  const auto& palette = distractor_palette();
  for (int i = 0; i < spec.distractors; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
      const double bw = 24 + 36 * unit(rng), bh = 30 + 40 * unit(rng);
      const double x0 = margin + (W - 2 * margin - bw) * unit(rng);
      const double y0 = top + (H - margin - top - bh) * unit(rng);
      if (y0 < top) continue;
      Box box{x0, y0, x0 + bw, y0 + bh, palette[static_cast<std::size_t>(rng() % palette.size())]};
      bool ok = true;
      for (const TruthLine& s : strokes)
        if (detail::box_segment_distance(box, s.a, s.b) < w / 2 + 10) ok = false;
      for (const Box& o : scene.distractors)
        if (box.x0 < o.x1 + 10 && o.x0 < box.x1 + 10 && box.y0 < o.y1 + 10 && o.y0 < box.y1 + 10) ok = false;
      if (!ok) continue;
      scene.distractors.push_back(box);
      placed = true;
    }
    if (!placed) throw InvalidSpec("could not place distractor " + std::to_string(i));
  }

  detail::Canvas canvas(spec.width, spec.height, spec.field_color);
  if (spec.boundary) canvas.half_plane(bl, br, spec.boundary_color);
  for (const TruthLine& s : strokes) canvas.stroke(s.a, s.b, w, spec.stroke_color);
  for (const Box& b : scene.distractors) canvas.box(b);
  scene.image = canvas.finish(spec.lighting, spec.noise_sigma, rng);
  scene.truth_lines.insert(scene.truth_lines.end(), strokes.begin(), strokes.end());
  return scene;
}

/// Truth class of a detected chain: the class of the first truth feature
/// (lines before boundaries) that has at least `fraction` of the chain pixels
/// within `tol` px of one of its edges; NONE otherwise.
inline Label truth_label(std::span<const Pixel> chain, const SyntheticScene& scene, double tol = 2.0,
                         double fraction = 0.8) {
  if (chain.empty()) return Label::NONE;
  for (Label cls : {Label::FIELD_LINE, Label::FIELD_BOUNDARY}) {
    for (const TruthLine& t : scene.truth_lines) {
      if (t.cls != cls) continue;
      std::size_t near = 0;
      for (const Pixel& p : chain)
        if (t.edge_distance({static_cast<double>(p.x), static_cast<double>(p.y)}) <= tol) ++near;
      if (static_cast<double>(near) >= fraction * static_cast<double>(chain.size())) return cls;
    }
  }
  return Label::NONE;
}

/// True if some segment has both endpoints within `tol` px of one edge of `line`.
inline bool truth_matched(const TruthLine& line, std::span<const Segment> segments, double tol = 3.0) {
  for (const auto& e : line.edges())
    for (const Segment& s : segments)
      if (point_segment_distance({s.x1, s.y1}, e[0], e[1]) <= tol &&
          point_segment_distance({s.x2, s.y2}, e[0], e[1]) <= tol)
        return true;
  return false;
}

}  // namespace pitchlines
