#pragma once

// Rasters, luminance conversion, Gaussian smoothing and Sobel gradient fields.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pitchlines/errors.hpp"

namespace pitchlines {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB raster, row-major, no padding.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {})
      : width_(checked_dim(width)), height_(checked_dim(height)),
        data_(static_cast<std::size_t>(width) * height * 3) {
    for (std::size_t i = 0; i < data_.size(); i += 3) {
      data_[i] = fill.r;
      data_[i + 1] = fill.g;
      data_[i + 2] = fill.b;
    }
  }
  RgbImage(int width, int height, std::vector<std::uint8_t> data)
      : width_(checked_dim(width)), height_(checked_dim(height)), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(width) * height * 3)
      throw InvalidParam("RgbImage data length must be width*height*3");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  Rgb at(int x, int y) const noexcept {
    const std::uint8_t* p = &data_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) noexcept {
    std::uint8_t* p = &data_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  static int checked_dim(int v) {
    if (v < 0) throw InvalidParam("negative image dimension");
    return v;
  }
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel 8-bit raster.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
    if (width < 0 || height < 0) throw InvalidParam("negative image dimension");
  }
  GrayImage(int width, int height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * height)
      throw InvalidParam("GrayImage data length must be width*height");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint8_t at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& at(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Which way the edge runs through a pixel. A VERTICAL_EDGE has a dominant
/// horizontal gradient (|gx| >= |gy|).
enum class EdgeOrient : std::uint8_t { HORIZONTAL_EDGE = 0, VERTICAL_EDGE = 1 };

/// Per-pixel Sobel response of one grayscale image.
///
/// Invariants: mag = |gx| + |gy| everywhere; the outermost ring is zero;
/// orient is VERTICAL_EDGE iff |gx| >= |gy|.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> gx;
  std::vector<std::int16_t> gy;
  std::vector<std::uint16_t> mag;
  std::vector<EdgeOrient> orient;

  GradientField() = default;
  GradientField(int w, int h)
      : width(w), height(h),
        gx(static_cast<std::size_t>(w) * h, 0), gy(gx.size(), 0), mag(gx.size(), 0),
        orient(gx.size(), EdgeOrient::VERTICAL_EDGE) {}

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width + x;
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  /// Inside the non-border region where gradients can be non-zero.
  bool interior(int x, int y) const noexcept {
    return x >= 1 && y >= 1 && x < width - 1 && y < height - 1;
  }
  std::uint16_t mag_at(int x, int y) const noexcept { return mag[index(x, y)]; }
  EdgeOrient orient_at(int x, int y) const noexcept { return orient[index(x, y)]; }

  /// Writes one pixel keeping mag and orient consistent with gx/gy.
  void set(int x, int y, int gxv, int gyv) noexcept {
    const std::size_t i = index(x, y);
    gx[i] = static_cast<std::int16_t>(gxv);
    gy[i] = static_cast<std::int16_t>(gyv);
    mag[i] = static_cast<std::uint16_t>(std::abs(gxv) + std::abs(gyv));
    orient[i] = std::abs(gxv) >= std::abs(gyv) ? EdgeOrient::VERTICAL_EDGE
                                               : EdgeOrient::HORIZONTAL_EDGE;
  }
};

/// Luminance: round(0.299 R + 0.587 G + 0.114 B), exact in integer arithmetic.
inline GrayImage to_gray(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  auto src = img.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0, j = 0; j < dst.size(); ++j, i += 3) {
    const unsigned v = 299u * src[i] + 587u * src[i + 1] + 114u * src[i + 2];
    dst[j] = static_cast<std::uint8_t>(std::min(255u, (v + 500u) / 1000u));
  }
  return out;
}

/// Normalized 1-D Gaussian taps (sum 1).
inline std::vector<double> gaussian_kernel(int kernel_size, double sigma) {
  if (kernel_size < 3 || kernel_size % 2 == 0)
    throw InvalidParam("gaussian kernel_size must be odd and >= 3");
  if (!(sigma > 0.0)) throw InvalidParam("gaussian sigma must be positive");
  const int half = kernel_size / 2;
  std::vector<double> k(static_cast<std::size_t>(kernel_size));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + half)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Separable Gaussian blur with border replication. Intermediate values stay in
/// floating point and are rounded once at the end.
inline GrayImage gaussian_smooth(const GrayImage& img, int kernel_size = 5, double sigma = 1.0) {
  const std::vector<double> kd = gaussian_kernel(kernel_size, sigma);
  const std::vector<float> k(kd.begin(), kd.end());
  const int half = kernel_size / 2;
  const int w = img.width(), h = img.height();
  GrayImage out(w, h);
  if (w == 0 || h == 0) return out;

  std::vector<float> tmp(static_cast<std::size_t>(w) * h);
  std::vector<float> row(static_cast<std::size_t>(w + 2 * half));
  for (int y = 0; y < h; ++y) {
    for (int x = -half; x < w + half; ++x)
      row[static_cast<std::size_t>(x + half)] = img.at(std::clamp(x, 0, w - 1), y);
    float* dst = &tmp[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      float acc = 0.f;
      for (int t = 0; t < kernel_size; ++t) acc += k[t] * row[static_cast<std::size_t>(x + t)];
      dst[x] = acc;
    }
  }

  std::vector<float> acc(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.f);
    for (int t = 0; t < kernel_size; ++t) {
      const int sy = std::clamp(y + t - half, 0, h - 1);
      const float* src = &tmp[static_cast<std::size_t>(sy) * w];
      const float kt = k[t];
      for (int x = 0; x < w; ++x) acc[x] += kt * src[x];
    }
    for (int x = 0; x < w; ++x)
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(acc[x]), 0L, 255L));
  }
  return out;
}

/// 3x3 Sobel gradients with L1 magnitude. Pixels whose magnitude falls below
/// `gradient_threshold` are zeroed entirely; the border ring is always zero.
inline GradientField sobel_gradients(const GrayImage& img, unsigned gradient_threshold = 30) {
  const int w = img.width(), h = img.height();
  if (w < 3 || h < 3) throw InvalidParam("sobel_gradients needs an image of at least 3x3");
  GradientField f(w, h);
  auto px = img.bytes();
  for (int y = 1; y < h - 1; ++y) {
    const std::uint8_t* up = &px[static_cast<std::size_t>(y - 1) * w];
    const std::uint8_t* mid = up + w;
    const std::uint8_t* dn = mid + w;
    for (int x = 1; x < w - 1; ++x) {
      const int gx = (up[x + 1] + 2 * mid[x + 1] + dn[x + 1]) - (up[x - 1] + 2 * mid[x - 1] + dn[x - 1]);
      const int gy = (dn[x - 1] + 2 * dn[x] + dn[x + 1]) - (up[x - 1] + 2 * up[x] + up[x + 1]);
      const unsigned m = static_cast<unsigned>(std::abs(gx) + std::abs(gy));
      if (m == 0 || m < gradient_threshold) continue;
      f.set(x, y, gx, gy);
    }
  }
  return f;
}

}  // namespace pitchlines
