#pragma once

// Hand-rolled random generators for property tests. Every generator takes
// the engine explicitly so a failing case can be replayed from its seed.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pitchlines/classifier.hpp"
#include "pitchlines/dataset.hpp"
#include "pitchlines/image.hpp"

namespace gen {

using Rng = std::mt19937_64;
using namespace pitchlines;

inline double uniform(Rng& r, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(r); }
inline int integer(Rng& r, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(r); }
inline bool coin(Rng& r, double p = 0.5) { return std::bernoulli_distribution(p)(r); }

inline GrayImage gray(Rng& r, int w, int h) {
  GrayImage img(w, h);
  for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(integer(r, 0, 255));
  return img;
}

inline RgbImage rgb(Rng& r, int w, int h) {
  RgbImage img(w, h);
  for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(integer(r, 0, 255));
  return img;
}

inline Vec3 vec3(Rng& r, double lo = -255.0, double hi = 255.0) {
  return {uniform(r, lo, hi), uniform(r, lo, hi), uniform(r, lo, hi)};
}

inline RgbGradient gradient(Rng& r) {
  // Occasionally exactly zero, to exercise the degenerate branch.
  RgbGradient g{vec3(r), vec3(r)};
  if (coin(r, 0.02)) g.h = {0, 0, 0};
  if (coin(r, 0.02)) g.v = {0, 0, 0};
  return g;
}

inline Thresholds thresholds(Rng& r) {
  return {uniform(r, 1e-3, 90.0), uniform(r, 0.0, 441.0), uniform(r, 0.0, 400.0)};
}

inline const char* label_name(Rng& r) {
  static const char* names[] = {"field_line", "field_boundary", "none"};
  return names[integer(r, 0, 2)];
}

inline SegmentRecord record(Rng& r, const std::string& image = "img.png", bool labeled = true) {
  SegmentRecord s;
  s.image = image;
  s.x1 = uniform(r, 0, 640);
  s.y1 = uniform(r, 0, 480);
  const double len = uniform(r, 0, 400), ang = uniform(r, 0, 6.283185307179586);
  s.x2 = s.x1 + len * std::cos(ang);
  s.y2 = s.y1 + len * std::sin(ang);
  s.length = std::hypot(s.x2 - s.x1, s.y2 - s.y1);
  s.grad_h = vec3(r);
  s.grad_v = vec3(r);
  s.predicted = label_name(r);
  if (labeled) s.human_label = label_name(r);
  return s;
}

/// Scales `u` (a unit vector) to have angle `deg` from it and projection `proj`,
/// by mixing in a perpendicular component.
inline Vec3 at_angle(const Vec3& u, double deg, double proj, Rng& r) {
  Vec3 t = vec3(r, -1, 1);
  const double d = dot(t, u);
  Vec3 perp{t[0] - d * u[0], t[1] - d * u[1], t[2] - d * u[2]};
  const double n = norm(perp);
  for (double& c : perp) c /= n;
  const double side = proj * std::tan(deg * 3.14159265358979323846 / 180.0);
  return {proj * u[0] + side * perp[0], proj * u[1] + side * perp[1], proj * u[2] + side * perp[2]};
}

/// Labeled records split by a known box: positives sit at angle <= 10,
/// projection >= 100 and length >= 20 against `ref`; negatives violate at
/// least one of these by a clear margin.
inline std::vector<SegmentRecord> separable(Rng& r, std::size_t n, const TransitionRef& ref, Label positive,
                                            double positive_share = 0.4) {
  std::vector<SegmentRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    SegmentRecord s;
    s.image = "scene_" + std::to_string(i / 20) + ".png";
    const bool pos = coin(r, positive_share);
    double angle = uniform(r, 0.5, 10.0), proj = uniform(r, 100.0, 140.0), len = uniform(r, 20.0, 300.0);
    if (!pos) {
      switch (integer(r, 0, 2)) {
        case 0: angle = uniform(r, 25.0, 60.0), proj = uniform(r, 100.0, 120.0); break;
        case 1: proj = uniform(r, 5.0, 60.0); break;
        default: len = uniform(r, 1.0, 12.0); break;
      }
    }
    const Vec3 g = at_angle(ref.unit(), angle, proj, r);
    s.grad_h = g;
    s.grad_v = {g[0] * 0.1, g[1] * 0.1, g[2] * 0.1};
    s.x1 = uniform(r, 0, 300);
    s.y1 = uniform(r, 0, 300);
    s.x2 = s.x1 + len;
    s.y2 = s.y1;
    s.length = len;
    s.predicted = "none";
    s.human_label = std::string(to_string(pos ? positive : Label::NONE));
    out.push_back(s);
  }
  return out;
}

}  // namespace gen
