#pragma once

// Debug overlays: field lines solid green, boundaries solid blue, rejected
// segments dashed red.

#include <cmath>
#include <span>

#include "pitchlines/classifier.hpp"
#include "pitchlines/geometry.hpp"
#include "pitchlines/image.hpp"

namespace pitchlines {

inline constexpr Rgb kLineColor{0, 255, 0};
inline constexpr Rgb kBoundaryColor{0, 0, 255};
inline constexpr Rgb kRejectedColor{255, 0, 0};

inline Rgb overlay_color(Label l) {
  switch (l) {
    case Label::FIELD_LINE: return kLineColor;
    case Label::FIELD_BOUNDARY: return kBoundaryColor;
    case Label::NONE: break;
  }
  return kRejectedColor;
}

/// Draws a 2 px wide line; with `dash` > 0 every other run of `dash` pixels is skipped.
inline void draw_line(RgbImage& img, double x1, double y1, double x2, double y2, Rgb color, int dash = 0) {
  const auto pts = bresenham(static_cast<int>(std::lround(x1)), static_cast<int>(std::lround(y1)),
                             static_cast<int>(std::lround(x2)), static_cast<int>(std::lround(y2)));
  const bool steep = std::abs(y2 - y1) > std::abs(x2 - x1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (dash > 0 && (i / static_cast<std::size_t>(dash)) % 2 == 1) continue;
    for (int t = 0; t < 2; ++t) {
      const int x = pts[i].x + (steep ? t : 0);
      const int y = pts[i].y + (steep ? 0 : t);
      if (img.contains(x, y)) img.set(x, y, color);
    }
  }
}

inline RgbImage draw_overlay(const RgbImage& img, std::span<const ClassifiedSegment> segments) {
  RgbImage out = img;
  // Rejected first so accepted features stay on top.
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& c : segments) {
      const bool rejected = c.label == Label::NONE;
      if (rejected != (pass == 0)) continue;
      const auto& s = c.segment;
      draw_line(out, s.x1, s.y1, s.x2, s.y2, overlay_color(c.label), rejected ? 4 : 0);
    }
  return out;
}

}  // namespace pitchlines
