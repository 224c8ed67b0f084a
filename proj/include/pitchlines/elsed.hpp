#pragma once

// Edge-drawing line segment detector: anchors, 2/3-candidate chain walking
// with a running line fit, discontinuity skipping and gradient-alignment
// validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <vector>

#include "pitchlines/errors.hpp"
#include "pitchlines/geometry.hpp"
#include "pitchlines/image.hpp"

namespace pitchlines {

struct Anchor {
  int x = 0;
  int y = 0;
  EdgeOrient orient = EdgeOrient::VERTICAL_EDGE;
  std::uint16_t mag = 0;
};

struct Segment {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  std::vector<Pixel> pixels;
  double length = 0;
};

struct DetectorParams {
  unsigned gradient_threshold = 30;
  unsigned anchor_threshold = 8;
  int scan_interval = 2;
  /// 0 selects round(0.05 * image diagonal).
  int min_line_length = 0;
  double validation_angle_tol = 22.5;  // degrees
  double aligned_fraction = 0.5;

  int gaussian_kernel = 5;
  double gaussian_sigma = 1.0;
  /// Longest Bresenham extension without gradient support across a gap.
  int skip_budget = 5;
  /// Pixels needed before the running fit is trusted.
  int fit_min_pixels = 8;
  double max_pixel_distance = 1.5;
  double max_fit_rms = 2.0;

  int resolved_min_length(int width, int height) const {
    if (min_line_length > 0) return min_line_length;
    return std::max(2, static_cast<int>(std::lround(0.05 * std::hypot(width, height))));
  }

  void validate() const {
    if (gradient_threshold == 0 || anchor_threshold == 0) throw InvalidParam("thresholds must be positive");
    if (scan_interval < 1) throw InvalidParam("scan_interval must be >= 1");
    if (min_line_length < 0) throw InvalidParam("min_line_length must be >= 0");
    if (!(validation_angle_tol > 0 && validation_angle_tol <= 90))
      throw InvalidParam("validation_angle_tol must be in (0, 90]");
    if (!(aligned_fraction > 0 && aligned_fraction <= 1)) throw InvalidParam("aligned_fraction must be in (0, 1]");
    if (skip_budget < 0 || fit_min_pixels < 2) throw InvalidParam("invalid drawing parameters");
    if (!(max_pixel_distance > 0) || !(max_fit_rms > 0)) throw InvalidParam("fit tolerances must be positive");
  }
};

/// Anchors on every scan_interval-th row plus every scan_interval-th column,
/// sorted by descending magnitude (scan order breaks ties).
inline std::vector<Anchor> extract_anchors(const GradientField& field, int scan_interval, unsigned anchor_threshold) {
  if (scan_interval < 1) throw InvalidParam("scan_interval must be >= 1");
  std::vector<Anchor> out;
  const int w = field.width, h = field.height;
  const long th = anchor_threshold;
  auto test = [&](int x, int y) {
    const std::size_t i = field.index(x, y);
    const long m = field.mag[i];
    if (m == 0) return;
    long a, b;
    if (field.orient[i] == EdgeOrient::HORIZONTAL_EDGE) {
      a = field.mag[i - static_cast<std::size_t>(w)];
      b = field.mag[i + static_cast<std::size_t>(w)];
    } else {
      a = field.mag[i - 1];
      b = field.mag[i + 1];
    }
    if (m - a >= th && m - b >= th) out.push_back({x, y, field.orient[i], field.mag[i]});
  };
  for (int y = 1; y < h - 1; ++y) {
    if ((y - 1) % scan_interval == 0) {
      for (int x = 1; x < w - 1; ++x) test(x, y);
    } else {
      for (int x = 1; x < w - 1; x += scan_interval) test(x, y);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Anchor& a, const Anchor& b) { return a.mag > b.mag; });
  return out;
}

namespace detail {

inline double fold_angle_deg(double diff_rad) {
  double d = std::fmod(std::abs(diff_rad) * 180.0 / std::numbers::pi, 180.0);
  if (d > 90.0) d = 180.0 - d;
  return d;
}

/// Angular error in degrees between the gradient at i and a normal angle;
/// 90 for zero-gradient pixels.
inline double gradient_error_deg(const GradientField& f, std::size_t i, double normal_angle) {
  if (f.mag[i] == 0) return 90.0;
  return fold_angle_deg(std::atan2(static_cast<double>(f.gy[i]), static_cast<double>(f.gx[i])) - normal_angle);
}

class EdgeDrawer {
 public:
  EdgeDrawer(const GradientField& f, const DetectorParams& p)
      : f_(f), p_(p), visited_(f.mag.size(), 0), emitted_(f.mag.size(), 0),
        scratch_(f.mag.size(), 0),
        min_len_(static_cast<std::size_t>(p.resolved_min_length(f.width, f.height))) {}

  std::vector<Segment> run(const std::vector<Anchor>& anchors) {
    std::vector<Segment> out;
    for (const Anchor& a : anchors) {
      const std::size_t i = f_.index(a.x, a.y);
      if (visited_[i] || f_.mag[i] == 0 || !f_.interior(a.x, a.y)) continue;
      runs_.clear();
      draw_from(a);
      for (Run& r : runs_)
        if (!finalize(r, out))
          for (Pixel q : r.pixels) visited_[idx(q)] = 0;  // let a better-seeded walk claim them
    }
    std::erase_if(out, [](const Segment& s) { return s.pixels.empty(); });
    return out;
  }

 private:
  struct Run {
    std::deque<Pixel> pixels;
    std::deque<bool> fitted;  // parallel to pixels; false for gap pixels
    LineFit fit;
    EdgeOrient orient = EdgeOrient::VERTICAL_EDGE;
    std::vector<std::size_t> stack[2];  // side lengths at each discontinuity
    std::size_t side_len[2] = {0, 0};   // side 0 grows at the front, side 1 at the back
  };

  bool usable(Pixel q) const { return f_.interior(q.x, q.y); }
  std::size_t idx(Pixel q) const { return f_.index(q.x, q.y); }

  void start_run(Pixel seed, EdgeOrient orient) {
    Run r;
    r.orient = orient;
    r.pixels.push_back(seed);
    r.fitted.push_back(true);
    r.fit.add(seed);
    visited_[idx(seed)] = 1;
    runs_.push_back(std::move(r));
  }

  void push(Run& r, int side, Pixel q, bool fitted) {
    if (side == 0) {
      r.pixels.push_front(q);
      r.fitted.push_front(fitted);
    } else {
      r.pixels.push_back(q);
      r.fitted.push_back(fitted);
    }
    if (fitted) r.fit.add(q);
    ++r.side_len[side];
    visited_[idx(q)] = 1;
  }

  void pop(Run& r, int side) {
    const Pixel q = side == 0 ? r.pixels.front() : r.pixels.back();
    const bool fitted = side == 0 ? r.fitted.front() : r.fitted.back();
    if (side == 0) {
      r.pixels.pop_front();
      r.fitted.pop_front();
    } else {
      r.pixels.pop_back();
      r.fitted.pop_back();
    }
    if (fitted) r.fit.remove(q);
    --r.side_len[side];
    visited_[idx(q)] = 0;
  }

  void draw_from(const Anchor& a) {
    const Pixel seed{a.x, a.y};
    start_run(seed, a.orient);
    const Pixel axis = a.orient == EdgeOrient::HORIZONTAL_EDGE ? Pixel{1, 0} : Pixel{0, 1};
    walk(0, 1, seed, axis);
    walk(0, 0, seed, Pixel{-axis.x, -axis.y});
  }

  // Best of the 2 (after a diagonal step) or 3 (after an axis step) candidates.
  // Returns false when the best candidate has no gradient or was already drawn.
  bool pick_next(Pixel cur, Pixel step, Pixel axis, Pixel& next) const {
    Pixel cand[3];
    int n = 0;
    if (step.x == 0 || step.y == 0) {
      const Pixel perp{step.y != 0 ? 1 : 0, step.x != 0 ? 1 : 0};
      cand[n++] = step - perp;
      cand[n++] = step;
      cand[n++] = step + perp;
    } else {
      cand[n++] = step;
      cand[n++] = axis;
    }
    int best = -1;
    int best_mag = -1;
    bool best_is_step = false;
    for (int k = 0; k < n; ++k) {
      const Pixel q = cur + cand[k];
      if (!usable(q)) continue;
      const int m = f_.mag[idx(q)];
      const bool is_step = cand[k] == step;
      if (m > best_mag || (m == best_mag && is_step && !best_is_step)) {
        best = k;
        best_mag = m;
        best_is_step = is_step;
      }
    }
    if (best < 0 || best_mag <= 0) return false;
    next = cur + cand[best];
    return !visited_[idx(next)];
  }

  // Bresenham extension along the fitted direction across a gap, starting from
  // the side's end pixel projected onto the fit. On success the gap pixels and
  // the resuming pixel are appended and `cur` moves there.
  bool try_skip(std::size_t ri, int side, Pixel& cur, Pixel axis) {
    Run& r = runs_[ri];
    if (p_.skip_budget <= 0 || r.fit.count() < p_.fit_min_pixels) return false;
    Vec2 d = r.fit.direction();
    const double along = d.x * axis.x + d.y * axis.y;
    if (std::abs(along) < 1e-9) return false;
    if (along < 0) d = {-d.x, -d.y};
    const Vec2 o = r.fit.project(cur.x, cur.y);
    const Pixel from{static_cast<int>(std::lround(o.x)), static_cast<int>(std::lround(o.y))};
    // Up to skip_budget gap pixels plus the resuming one along the major axis.
    const double reach = (p_.skip_budget + 1) / std::max(std::abs(d.x), std::abs(d.y));
    const Pixel target{static_cast<int>(std::lround(o.x + d.x * reach)),
                       static_cast<int>(std::lround(o.y + d.y * reach))};
    const std::vector<Pixel> path = bresenham(from.x, from.y, target.x, target.y);
    bool started = false;
    for (const Pixel q : path) {
      if (!started && usable(q) && visited_[idx(q)]) continue;  // still on the drawn chain
      started = true;
      if (!usable(q) || visited_[idx(q)]) return false;
      if (f_.mag[idx(q)] == 0 || r.fit.distance(q) > p_.max_pixel_distance || !aligned_with(r, q)) continue;
      // The chain stays 8-connected: the gap is filled on the line from cur to q.
      std::vector<Pixel> fill = bresenham(cur.x, cur.y, q.x, q.y);
      fill.erase(fill.begin());
      fill.pop_back();
      if (!std::ranges::all_of(fill, [&](Pixel g) { return usable(g) && !visited_[idx(g)]; })) continue;
      r.stack[side].push_back(r.side_len[side]);
      for (Pixel g : fill) push(r, side, g, false);
      push(r, side, q, true);
      cur = q;
      return true;
    }
    return false;
  }

  bool fits(Run& r, Pixel q) const {
    if (r.fit.count() < p_.fit_min_pixels) return true;
    if (r.fit.distance(q) > p_.max_pixel_distance) return false;
    LineFit trial = r.fit;
    trial.add(q);
    return trial.rms() <= p_.max_fit_rms;
  }

  // Ends the current stretch at a discontinuity and tries to jump it. Returns
  // true with `cur` on the resuming pixel when the gap was bridged.
  bool bridge(std::size_t ri, int side, Pixel& cur, Pixel axis, std::optional<std::size_t>& skipped_from) {
    close_side(ri, side);
    trim_misaligned_end(runs_[ri], side);
    // Trimmed back over an earlier skip: that gap was not bridged.
    if (skipped_from && runs_[ri].side_len[side] <= *skipped_from) return false;
    const std::size_t origin = runs_[ri].side_len[side];
    Pixel end = end_of(runs_[ri], side);
    if (!try_skip(ri, side, end, axis)) return false;
    cur = end;
    skipped_from = origin;
    return true;
  }

  void walk(std::size_t ri, int side, Pixel start, Pixel axis) {
    Pixel cur = start;
    Pixel step = axis;
    bool in_branch = false;
    std::optional<std::size_t> skipped_from;  // side length where the last skip began
    for (;;) {
      Pixel next;
      if (!pick_next(cur, step, axis, next)) {
        if (!bridge(ri, side, cur, axis, skipped_from)) break;
        step = axis;
        in_branch = false;
        continue;
      }
      bool ok = fits(runs_[ri], next);
      if (!ok && side == 0 && runs_[ri].side_len[1] > 0) {
        // The first side was drawn before the fit was trusted; re-judge its end.
        trim_misaligned_end(runs_[ri], 1);
        ok = fits(runs_[ri], next);
      }
      if (!ok) {
        if (bridge(ri, side, cur, axis, skipped_from)) {
          step = axis;
          in_branch = false;
          continue;
        }
        if (visited_[idx(next)]) break;
        const EdgeOrient run_orient = runs_[ri].orient;
        start_run(next, run_orient);
        ri = runs_.size() - 1;
        side = 1;
        in_branch = false;
        skipped_from.reset();
      } else {
        Run& r = runs_[ri];
        const EdgeOrient o = f_.orient[idx(next)];
        if (o != r.orient && !in_branch) {
          // Orientation changed: keep walking the same way, remember the branch point.
          r.stack[side].push_back(r.side_len[side]);
          in_branch = true;
        } else if (o == r.orient) {
          in_branch = false;
        }
        push(r, side, next, true);
      }
      step = next - cur;
      cur = next;
    }
    close_side(ri, side);
  }

  static Pixel end_of(const Run& r, int side) { return side == 0 ? r.pixels.front() : r.pixels.back(); }

  bool aligned_with(const Run& r, Pixel q, double tol) const {
    const Vec2 nrm = r.fit.normal();
    return gradient_error_deg(f_, idx(q), std::atan2(nrm.y, nrm.x)) < tol;
  }
  bool aligned_with(const Run& r, Pixel q) const { return aligned_with(r, q, p_.validation_angle_tol); }
  // Blur turns the gradient towards the cap near a stroke corner; chain ends keep such pixels.
  double end_tol() const { return 2.0 * p_.validation_angle_tol; }

  // Drops trailing pixels whose gradient disagrees with the fit, so a skip
  // starts where the edge last supported the line.
  void trim_misaligned_end(Run& r, int side) {
    if (r.fit.count() < p_.fit_min_pixels) return;
    while (r.side_len[side] > 0 && !aligned_with(r, end_of(r, side), end_tol())) pop(r, side);
  }

  // Resolves tails after recorded discontinuities, newest first. A tail whose
  // fitted pixels are mostly aligned with the fit is kept whole; otherwise it
  // is cut after the last aligned pixel reachable from the body through
  // aligned or gap pixels. Gap pixels never end a chain.
  void close_side(std::size_t ri, int side) {
    Run& r = runs_[ri];
    auto& st = r.stack[side];
    while (!st.empty()) {
      const std::size_t mark = st.back();
      const std::size_t tail = r.side_len[side] - mark;
      st.pop_back();
      if (tail == 0) continue;
      // k = 0 is the outermost tail pixel.
      const auto at = [&](std::size_t k) { return side == 0 ? k : r.pixels.size() - 1 - k; };
      std::size_t fitted = 0, aligned = 0;
      for (std::size_t k = 0; k < tail; ++k) {
        if (!r.fitted[at(k)]) continue;
        ++fitted;
        aligned += aligned_with(r, r.pixels[at(k)]);
      }
      if (fitted > 0 && static_cast<double>(aligned) >= p_.aligned_fraction * static_cast<double>(fitted)) break;
      std::size_t keep = 0;
      for (std::size_t n = 1; n <= tail; ++n) {
        const std::size_t k = tail - n;
        if (!r.fitted[at(k)]) continue;
        if (!aligned_with(r, r.pixels[at(k)], end_tol())) break;
        keep = n;
      }
      for (std::size_t k = keep; k < tail; ++k) pop(r, side);
      if (keep > 0) break;
    }
  }

  // True when q or one of its 8 neighbours is set in mask.
  bool touches(const std::vector<std::uint8_t>& mask, Pixel q) const {
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = q.x + dx, y = q.y + dy;
        if (x >= 0 && y >= 0 && x < f_.width && y < f_.height && mask[f_.index(x, y)]) return true;
      }
    return false;
  }

  template <class Pixels>
  bool mostly_touching(const Pixels& px, const std::vector<std::uint8_t>& mask) const {
    std::size_t n = 0;
    for (Pixel q : px) n += touches(mask, q);
    return 2 * n > px.size();
  }

  // A run hugging emitted segments is a second chain along the flank of a wide
  // edge and is dropped. Shorter emitted segments the run mostly covers, such
  // as a stub that stopped at a gap the run bridged, are replaced by it.
  bool duplicate(const Run& r, std::vector<Segment>& out) {
    if (mostly_touching(r.pixels, emitted_)) return true;
    for (Pixel q : r.pixels) scratch_[idx(q)] = 1;
    for (Segment& s : out)
      if (!s.pixels.empty() && s.pixels.size() < r.pixels.size() && mostly_touching(s.pixels, scratch_)) {
        for (Pixel q : s.pixels) emitted_[idx(q)] = 0;
        s.pixels.clear();
      }
    for (Pixel q : r.pixels) scratch_[idx(q)] = 0;
    return false;
  }

  // Emits the run as a segment; false when it is dropped and its pixels should
  // be released. Duplicates are dropped but keep their pixels claimed.
  bool finalize(Run& r, std::vector<Segment>& out) {
    if (r.pixels.size() < min_len_ || r.fit.count() < 2) return false;
    // Trim ends until every chain pixel lies within 2 px of the fitted line.
    for (;;) {
      double worst = 0.0;
      for (Pixel q : r.pixels) worst = std::max(worst, r.fit.distance(q));
      if (worst <= 2.0) break;
      const double df = r.fit.distance(r.pixels.front());
      const double db = r.fit.distance(r.pixels.back());
      const bool front = df >= db;
      const Pixel q = front ? r.pixels.front() : r.pixels.back();
      const bool fitted = front ? r.fitted.front() : r.fitted.back();
      if (front) {
        r.pixels.pop_front();
        r.fitted.pop_front();
      } else {
        r.pixels.pop_back();
        r.fitted.pop_back();
      }
      if (fitted) r.fit.remove(q);
      visited_[idx(q)] = 0;
      if (r.pixels.size() < min_len_ || r.fit.count() < 2) return false;
    }
    if (duplicate(r, out)) return true;
    for (Pixel q : r.pixels) emitted_[idx(q)] = 1;
    Segment s;
    const Vec2 a = r.fit.project(r.pixels.front().x, r.pixels.front().y);
    const Vec2 b = r.fit.project(r.pixels.back().x, r.pixels.back().y);
    s.x1 = a.x;
    s.y1 = a.y;
    s.x2 = b.x;
    s.y2 = b.y;
    s.length = std::hypot(s.x2 - s.x1, s.y2 - s.y1);
    s.pixels.assign(r.pixels.begin(), r.pixels.end());
    out.push_back(std::move(s));
    return true;
  }

  const GradientField& f_;
  const DetectorParams& p_;
  std::vector<std::uint8_t> visited_;
  std::vector<std::uint8_t> emitted_;
  std::vector<std::uint8_t> scratch_;
  std::size_t min_len_;
  std::vector<Run> runs_;
};

}  // namespace detail

/// Draws pixel chains from anchors (expected in descending magnitude order) and
/// fits a segment to each chain. Chains shorter than the minimum length are dropped.
inline std::vector<Segment> draw_segments(const GradientField& field, const std::vector<Anchor>& anchors,
                                          const DetectorParams& params) {
  params.validate();
  detail::EdgeDrawer drawer(field, params);
  return drawer.run(anchors);
}

/// Fraction of chain pixels whose gradient direction is within `tol_deg` of
/// the segment normal. Zero-gradient pixels count as misaligned.
inline double aligned_fraction(const Segment& seg, const GradientField& field, double tol_deg) {
  if (seg.pixels.empty()) return 0.0;
  const double dx = seg.x2 - seg.x1, dy = seg.y2 - seg.y1;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  const double normal_angle = std::atan2(dy, dx) + std::numbers::pi / 2;
  std::size_t aligned = 0;
  for (const Pixel& q : seg.pixels) {
    if (!field.contains(q.x, q.y)) continue;
    if (detail::gradient_error_deg(field, field.index(q.x, q.y), normal_angle) < tol_deg) ++aligned;
  }
  return static_cast<double>(aligned) / static_cast<double>(seg.pixels.size());
}

inline bool validate_segment(const Segment& seg, const GradientField& field, const DetectorParams& params) {
  if (seg.pixels.empty()) throw InvalidParam("validate_segment needs a non-empty chain");
  return aligned_fraction(seg, field, params.validation_angle_tol) >= params.aligned_fraction;
}

/// Gradient field the detector runs on: luminance, Gaussian blur, Sobel.
inline GradientField detector_field(const RgbImage& img, const DetectorParams& params) {
  const GrayImage smooth = gaussian_smooth(to_gray(img), params.gaussian_kernel, params.gaussian_sigma);
  return sobel_gradients(smooth, params.gradient_threshold);
}

inline std::vector<Segment> detect(const RgbImage& img, const DetectorParams& params = {}) {
  params.validate();
  if (img.width() < 16 || img.height() < 16) throw InvalidParam("detect needs an image of at least 16x16");
  const GradientField field = detector_field(img, params);
  const auto anchors = extract_anchors(field, params.scan_interval, params.anchor_threshold);
  auto segments = draw_segments(field, anchors, params);
  std::erase_if(segments, [&](const Segment& s) { return !validate_segment(s, field, params); });
  return segments;
}

}  // namespace pitchlines
