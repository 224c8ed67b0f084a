#pragma once

// PNG (8-bit) and binary PPM (P6, maxval 255) decoding, plus PNG/PPM writers
// used for debug overlays and synthetic scenes.

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pitchlines/errors.hpp"
#include "pitchlines/image.hpp"

namespace pitchlines {

namespace detail {

inline std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf;
}

struct PngSource {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<char*>(png_get_error_ptr(png));
  std::snprintf(buf, 128, "%s", msg);
  png_longjmp(png, 1);
}
inline void png_warn_fn(png_structp, png_const_charp) {}

inline void png_read_mem(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (src->pos + n > src->size) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->data + src->pos, n);
  src->pos += n;
}

// Returns an empty string on success, otherwise the libpng/format message.
inline std::string decode_png_impl(const std::vector<std::uint8_t>& buf, int& width, int& height,
                                   std::vector<std::uint8_t>& pixels) {
  char message[128] = "corrupt PNG";
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, message, &png_error_fn, &png_warn_fn);
  if (!png) return "png_create_read_struct failed";
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return "png_create_info_struct failed";
  }
  PngSource src{buf.data(), buf.size(), 0};
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return std::string(message);
  }
  png_set_read_fn(png, &src, &png_read_mem);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth == 16) png_error(png, "16-bit PNG is not supported");
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3)
    png_error(png, "unsupported PNG layout");
  pixels.assign(static_cast<std::size_t>(w) * h * 3, 0);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  width = static_cast<int>(w);
  height = static_cast<int>(h);
  return {};
}

inline void png_write_mem(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}
inline void png_flush_noop(png_structp) {}

inline bool encode_png_impl(const RgbImage& img, std::vector<std::uint8_t>& out) {
  char message[128] = "";
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, message, &png_error_fn, &png_warn_fn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, &png_write_mem, &png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto bytes = img.bytes();
  for (int y = 0; y < img.height(); ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * img.width() * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

inline bool is_png(const std::vector<std::uint8_t>& buf) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return buf.size() >= 8 && std::memcmp(buf.data(), sig, 8) == 0;
}

inline RgbImage decode_ppm(const std::vector<std::uint8_t>& buf, const std::string& name) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < buf.size()) {
      const char c = static_cast<char>(buf[pos]);
      if (c == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space();
    if (pos >= buf.size() || buf[pos] < '0' || buf[pos] > '9')
      throw FormatError(name + ": truncated or malformed PPM header (" + what + ")");
    long v = 0;
    while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
      v = v * 10 + (buf[pos++] - '0');
      if (v > 1'000'000) throw FormatError(name + ": PPM " + what + " out of range");
    }
    return static_cast<int>(v);
  };
  const int w = read_uint("width");
  const int h = read_uint("height");
  const int maxval = read_uint("maxval");
  if (maxval != 255) throw FormatError(name + ": only PPM maxval 255 is supported");
  if (pos >= buf.size()) throw FormatError(name + ": truncated PPM header");
  ++pos;  // single whitespace before raster
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (buf.size() - pos < need) throw FormatError(name + ": truncated PPM raster");
  return RgbImage(w, h, std::vector<std::uint8_t>(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                                                  buf.begin() + static_cast<std::ptrdiff_t>(pos + need)));
}

}  // namespace detail

/// Decodes a PNG (8-bit, alpha dropped) or binary PPM (P6, maxval 255) file.
inline RgbImage decode_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError("no such file: " + path.string());
  const auto buf = detail::slurp(path);
  if (detail::is_png(buf)) {
    int w = 0, h = 0;
    std::vector<std::uint8_t> px;
    const std::string err = detail::decode_png_impl(buf, w, h, px);
    if (!err.empty()) throw FormatError(path.string() + ": " + err);
    return RgbImage(w, h, std::move(px));
  }
  if (buf.size() >= 2 && buf[0] == 'P' && buf[1] == '6') return detail::decode_ppm(buf, path.string());
  throw FormatError(path.string() + ": unsupported image encoding (expected PNG or P6 PPM)");
}

inline std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  std::vector<std::uint8_t> out;
  if (!detail::encode_png_impl(img, out)) throw FormatError("PNG encoding failed");
  return out;
}

inline std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  auto px = img.bytes();
  out.insert(out.end(), px.begin(), px.end());
  return out;
}

/// Writes PNG or PPM depending on the extension (".ppm" → P6, otherwise PNG).
inline void write_image(const RgbImage& img, const std::filesystem::path& path) {
  const auto bytes = path.extension() == ".ppm" ? encode_ppm(img) : encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace pitchlines
