#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "platekit/errors.hpp"

namespace platekit {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Owned row-major RGB8 pixel buffer.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static RasterImage filled(int width, int height, Rgb color) {
    RasterImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
      img.pixels[i + 0] = color.r;
      img.pixels[i + 1] = color.g;
      img.pixels[i + 2] = color.b;
    }
    return img;
  }

  std::uint8_t* at(int x, int y) {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;
};

namespace detail {

// Skips PNM whitespace and '#' comments, then parses one decimal field.
inline int parse_pnm_int(std::string_view bytes, std::size_t& pos,
                         const char* what) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
    throw FormatError(std::string("ppm: missing or malformed ") + what);
  }
  long value = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1000000000L) throw FormatError("ppm: field too large");
    ++pos;
  }
  return static_cast<int>(value);
}

}  // namespace detail

/// Parses just the dimensions of a binary PPM stream.
inline ImageDims read_ppm_header(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    if (bytes.size() >= 2 && bytes[0] == 'P') {
      throw FormatError(std::string("ppm: unsupported format P") + bytes[1]);
    }
    throw FormatError("ppm: bad magic");
  }
  std::size_t pos = 2;
  const int width = detail::parse_pnm_int(bytes, pos, "width");
  const int height = detail::parse_pnm_int(bytes, pos, "height");
  if (width < 1 || height < 1) {
    throw FormatError("ppm: non-positive dimensions");
  }
  return ImageDims{width, height};
}

/// Binary PPM: "P6\n<width> <height>\n255\n" followed by raw RGB bytes.
inline std::string write_ppm(const RasterImage& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()),
             img.pixels.size());
  return out;
}

inline RasterImage read_ppm(std::string_view bytes) {
  const ImageDims dims = read_ppm_header(bytes);
  std::size_t pos = 2;
  detail::parse_pnm_int(bytes, pos, "width");
  detail::parse_pnm_int(bytes, pos, "height");
  const int maxval = detail::parse_pnm_int(bytes, pos, "maxval");
  if (maxval != 255) {
    throw FormatError("ppm: unsupported maxval " + std::to_string(maxval));
  }
  if (pos >= bytes.size()) throw FormatError("ppm: truncated header");
  ++pos;  // single whitespace byte after maxval

  const std::size_t need =
      static_cast<std::size_t>(dims.width) * dims.height * 3;
  if (bytes.size() - pos < need) {
    throw FormatError("ppm: truncated pixel data");
  }
  RasterImage img;
  img.width = dims.width;
  img.height = dims.height;
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

}  // namespace platekit
