#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace pitchlines {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
  friend Pixel operator+(Pixel a, Pixel b) { return {a.x + b.x, a.y + b.y}; }
  friend Pixel operator-(Pixel a, Pixel b) { return {a.x - b.x, a.y - b.y}; }
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline bool are_8_neighbors(Pixel a, Pixel b) {
  return !(a == b) && std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1;
}

/// Midpoint line rasterization from (x0,y0) to (x1,y1), both inclusive.
/// Steps along the major axis; the minor axis advances only when the midpoint
/// decision is strictly positive, so exact half-way cases stay put.
inline std::vector<Pixel> bresenham(int x0, int y0, int x1, int y1) {
  const int dx = std::abs(x1 - x0), dy = std::abs(y1 - y0);
  const int sx = x1 >= x0 ? 1 : -1, sy = y1 >= y0 ? 1 : -1;
  std::vector<Pixel> out;
  out.reserve(static_cast<std::size_t>(std::max(dx, dy)) + 1);
  int x = x0, y = y0;
  if (dx >= dy) {
    int d = 2 * dy - dx;
    for (int i = 0; i <= dx; ++i) {
      out.push_back({x, y});
      if (d > 0) {
        y += sy;
        d -= 2 * dx;
      }
      d += 2 * dy;
      x += sx;
    }
  } else {
    int d = 2 * dx - dy;
    for (int i = 0; i <= dy; ++i) {
      out.push_back({x, y});
      if (d > 0) {
        x += sx;
        d -= 2 * dy;
      }
      d += 2 * dx;
      y += sy;
    }
  }
  return out;
}

/// Incremental orthogonal least-squares line fit. Sums are kept relative to the
/// first point added to limit cancellation.
class LineFit {
 public:
  void add(double x, double y) {
    if (n_ == 0) {
      ox_ = x;
      oy_ = y;
    }
    x -= ox_;
    y -= oy_;
    ++n_;
    sx_ += x;
    sy_ += y;
    sxx_ += x * x;
    syy_ += y * y;
    sxy_ += x * y;
  }
  void remove(double x, double y) {
    x -= ox_;
    y -= oy_;
    --n_;
    sx_ -= x;
    sy_ -= y;
    sxx_ -= x * x;
    syy_ -= y * y;
    sxy_ -= x * y;
    if (n_ <= 0) *this = LineFit{};
  }
  void add(Pixel p) { add(p.x, p.y); }
  void remove(Pixel p) { remove(p.x, p.y); }

  long count() const noexcept { return n_; }

  Vec2 centroid() const noexcept {
    if (n_ == 0) return {};
    return {ox_ + sx_ / n_, oy_ + sy_ / n_};
  }

  /// Unit direction of the major axis; (1,0) when undetermined.
  Vec2 direction() const noexcept {
    if (n_ < 2) return {1.0, 0.0};
    const auto [cxx, cyy, cxy] = covariance();
    const double theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    return {std::cos(theta), std::sin(theta)};
  }

  Vec2 normal() const noexcept {
    const Vec2 d = direction();
    return {-d.y, d.x};
  }

  double distance(double x, double y) const noexcept {
    const Vec2 c = centroid();
    const Vec2 nrm = normal();
    return std::abs((x - c.x) * nrm.x + (y - c.y) * nrm.y);
  }
  double distance(Pixel p) const noexcept { return distance(p.x, p.y); }

  /// Root-mean-square perpendicular residual (sqrt of the minor eigenvalue).
  double rms() const noexcept {
    if (n_ < 2) return 0.0;
    const auto [cxx, cyy, cxy] = covariance();
    const double mean = 0.5 * (cxx + cyy);
    const double diff = 0.5 * (cxx - cyy);
    const double minor = mean - std::sqrt(diff * diff + cxy * cxy);
    return std::sqrt(std::max(0.0, minor));
  }

  /// Orthogonal projection of (x,y) onto the fitted line.
  Vec2 project(double x, double y) const noexcept {
    const Vec2 c = centroid();
    const Vec2 d = direction();
    const double t = (x - c.x) * d.x + (y - c.y) * d.y;
    return {c.x + t * d.x, c.y + t * d.y};
  }

 private:
  struct Cov {
    double xx, yy, xy;
  };
  Cov covariance() const noexcept {
    const double mx = sx_ / n_, my = sy_ / n_;
    return {sxx_ / n_ - mx * mx, syy_ / n_ - my * my, sxy_ / n_ - mx * my};
  }

  long n_ = 0;
  double ox_ = 0, oy_ = 0;
  double sx_ = 0, sy_ = 0, sxx_ = 0, syy_ = 0, sxy_ = 0;
};

/// Euclidean distance from point p to the closed segment a-b.
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

/// Perpendicular distance from p to the infinite line through a and b.
inline double point_line_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len = std::hypot(vx, vy);
  if (len == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
  return std::abs((p.x - a.x) * vy - (p.y - a.y) * vx) / len;
}

}  // namespace pitchlines
