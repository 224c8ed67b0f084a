#pragma once

// Mean RGB gradient of a segment and its classification against reference
// colour-transition vectors (green-to-white for lines, green-to-black for the
// field boundary).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pitchlines/elsed.hpp"
#include "pitchlines/errors.hpp"
#include "pitchlines/image.hpp"

namespace pitchlines {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

enum class Label { NONE, FIELD_LINE, FIELD_BOUNDARY };

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::FIELD_LINE: return "field_line";
    case Label::FIELD_BOUNDARY: return "field_boundary";
    case Label::NONE: break;
  }
  return "none";
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "field_line") return Label::FIELD_LINE;
  if (s == "field_boundary") return Label::FIELD_BOUNDARY;
  if (s == "none") return Label::NONE;
  return std::nullopt;
}

/// Horizontal and vertical mean gradients per RGB channel, each in [-255, 255].
struct RgbGradient {
  Vec3 h{};
  Vec3 v{};
};

/// Expected colour change across a feature edge (destination - source).
class TransitionRef {
 public:
  TransitionRef(std::string name, Vec3 delta) : name_(std::move(name)), delta_(delta) {
    const double n = norm(delta_);
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidParam("transition delta must be non-zero");
    unit_ = {delta_[0] / n, delta_[1] / n, delta_[2] / n};
  }

  /// Green-to-white: (255,255,255) - (0,128,0).
  static TransitionRef green_white() { return {"GW", {255.0, 127.0, 255.0}}; }
  /// Green-to-black: (0,0,0) - (0,128,0).
  static TransitionRef green_black() { return {"GB", {0.0, -128.0, 0.0}}; }

  const std::string& name() const noexcept { return name_; }
  const Vec3& delta() const noexcept { return delta_; }
  const Vec3& unit() const noexcept { return unit_; }

 private:
  std::string name_;
  Vec3 delta_;
  Vec3 unit_;
};

/// Largest possible projection: |(255,255,255)|.
inline const double kMaxProjection = 255.0 * std::sqrt(3.0);

struct Thresholds {
  double angle_max = 20.0;  // degrees, (0, 90]
  double proj_min = 80.0;   // gradient units, [0, kMaxProjection]
  double len_min = 20.0;    // pixels, >= 0

  void validate() const {
    if (!std::isfinite(angle_max) || !std::isfinite(proj_min) || !std::isfinite(len_min))
      throw InvalidParam("thresholds must be finite");
    if (!(angle_max > 0.0 && angle_max <= 90.0)) throw InvalidParam("angle_max must be in (0, 90]");
    if (!(proj_min >= 0.0 && proj_min < 442.0)) throw InvalidParam("proj_min must be in [0, 442)");
    if (!(len_min >= 0.0)) throw InvalidParam("len_min must be >= 0");
  }
};

struct ReferenceRule {
  TransitionRef ref;
  Thresholds thresholds;
  Label label;
};

struct ClassifierConfig {
  std::vector<ReferenceRule> rules;
  bool signed_match = false;

  static ClassifierConfig defaults() {
    return {{{TransitionRef::green_white(), Thresholds{}, Label::FIELD_LINE},
             {TransitionRef::green_black(), Thresholds{}, Label::FIELD_BOUNDARY}},
            false};
  }
};

using WindowGrid = std::array<std::array<Vec3, 3>, 3>;  // [row][col] mean RGB

/// Mean 3x3 RGB neighbourhood over the chain, read from the unsmoothed image.
/// Pixels on the outermost ring are skipped.
inline WindowGrid mean_window(const RgbImage& img, std::span<const Pixel> pixels) {
  std::array<std::array<std::array<long long, 3>, 3>, 3> sum{};
  long long count = 0;
  for (const Pixel& p : pixels) {
    if (p.x < 1 || p.y < 1 || p.x >= img.width() - 1 || p.y >= img.height() - 1) continue;
    ++count;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const Rgb c = img.at(p.x + dx, p.y + dy);
        auto& cell = sum[static_cast<std::size_t>(dy + 1)][static_cast<std::size_t>(dx + 1)];
        cell[0] += c.r;
        cell[1] += c.g;
        cell[2] += c.b;
      }
  }
  if (count == 0) throw EmptyChain();
  WindowGrid grid{};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < 3; ++k)
        grid[r][c][k] = static_cast<double>(sum[r][c][k]) / static_cast<double>(count);
  return grid;
}

/// One Sobel pass on the mean grid per channel, divided by 4.
inline RgbGradient segment_gradient(const WindowGrid& g) {
  RgbGradient out;
  for (std::size_t k = 0; k < 3; ++k) {
    const double gx = (g[0][2][k] + 2 * g[1][2][k] + g[2][2][k]) - (g[0][0][k] + 2 * g[1][0][k] + g[2][0][k]);
    const double gy = (g[2][0][k] + 2 * g[2][1][k] + g[2][2][k]) - (g[0][0][k] + 2 * g[0][1][k] + g[0][2][k]);
    out.h[k] = gx / 4.0;
    out.v[k] = gy / 4.0;
  }
  return out;
}

struct Similarity {
  double angle_deg = 90.0;
  double proj = 0.0;
};

/// Angle and projection length of one gradient against a unit reference.
inline Similarity similarity(const Vec3& g, const TransitionRef& ref, bool signed_match = false) {
  const double mag = norm(g);
  if (mag == 0.0) return {};
  const double d = dot(g, ref.unit());
  const double c = signed_match ? d : std::abs(d);
  const double cosine = std::clamp(c / mag, -1.0, 1.0);
  return {std::acos(cosine) * 180.0 / std::numbers::pi, c};
}

/// Scores both the horizontal and vertical gradient and keeps whichever
/// projects further onto the reference (horizontal wins ties).
inline Similarity similarity(const RgbGradient& grad, const TransitionRef& ref, bool signed_match = false) {
  const Similarity h = similarity(grad.h, ref, signed_match);
  const Similarity v = similarity(grad.v, ref, signed_match);
  return v.proj > h.proj ? v : h;
}

inline bool meets(const Thresholds& t, const Similarity& s, double length) {
  return s.angle_deg <= t.angle_max && s.proj >= t.proj_min && length >= t.len_min;
}

struct ClassifiedSegment {
  Segment segment;
  RgbGradient grad;
  Label label = Label::NONE;
  double angle_deg = 90.0;
  double proj_len = 0.0;
};

struct Classification {
  Label label = Label::NONE;
  Similarity achieved;
};

/// First rule whose three thresholds are all met wins; otherwise NONE with the
/// similarity of the largest-projection reference.
inline Classification classify(const RgbGradient& grad, double length, const ClassifierConfig& config) {
  if (config.rules.empty()) throw InvalidParam("classify needs at least one reference");
  Classification best;
  bool first = true;
  for (const ReferenceRule& rule : config.rules) {
    const Similarity s = similarity(grad, rule.ref, config.signed_match);
    if (meets(rule.thresholds, s, length)) return {rule.label, s};
    if (first || s.proj > best.achieved.proj) best.achieved = s;
    first = false;
  }
  return best;
}

inline ClassifiedSegment classify(Segment seg, const RgbGradient& grad, const ClassifierConfig& config) {
  const Classification c = classify(grad, seg.length, config);
  ClassifiedSegment out;
  out.segment = std::move(seg);
  out.grad = grad;
  out.label = c.label;
  out.angle_deg = c.achieved.angle_deg;
  out.proj_len = c.achieved.proj;
  return out;
}

/// Detection followed by per-segment gradient extraction and classification.
inline std::vector<ClassifiedSegment> detect_and_classify(const RgbImage& img, const DetectorParams& params,
                                                          const ClassifierConfig& config) {
  std::vector<ClassifiedSegment> out;
  for (Segment& s : detect(img, params)) {
    RgbGradient grad;
    try {
      grad = segment_gradient(mean_window(img, s.pixels));
    } catch (const EmptyChain&) {
      continue;
    }
    out.push_back(classify(std::move(s), grad, config));
  }
  return out;
}

}  // namespace pitchlines
