#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "platekit/annotation_io.hpp"
#include "platekit/errors.hpp"
#include "platekit/font5x7.hpp"
#include "platekit/fsutil.hpp"
#include "platekit/geometry.hpp"
#include "platekit/raster.hpp"
#include "platekit/rng.hpp"

namespace platekit {

/// Category used for the whole-plate box in synthetic label files, one past
/// the 36-character alphabet.
inline constexpr int kPlateCategory = 36;

/// A character crop: RGB pixels plus per-pixel coverage in [0,1].
struct Glyph {
  char character = '\0';
  RasterImage image;
  std::vector<float> alpha;  // width * height, row-major
};

class GlyphSet {
 public:
  void add(Glyph g) { glyphs_[g.character] = std::move(g); }

  bool has(char c) const { return glyphs_.count(c) != 0; }

  const Glyph& at(char c) const {
    const auto it = glyphs_.find(c);
    if (it == glyphs_.end()) {
      throw LayoutError(std::string("no glyph for character '") + c + "'");
    }
    return it->second;
  }

  std::size_t size() const { return glyphs_.size(); }

 private:
  std::map<char, Glyph> glyphs_;
};

/// Rasterizes the built-in 5x7 dot-matrix font: binary coverage, `ink`
/// where a dot is set.
inline GlyphSet builtin_glyphs(Rgb ink = Rgb{25, 25, 30}) {
  const Alphabet& alphabet = Alphabet::plate36();
  GlyphSet set;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    Glyph g;
    g.character = alphabet.at(i);
    g.image = RasterImage::filled(kFontWidth, kFontHeight, Rgb{0, 0, 0});
    g.alpha.assign(static_cast<std::size_t>(kFontWidth) * kFontHeight, 0.0f);
    for (int row = 0; row < kFontHeight; ++row) {
      for (int col = 0; col < kFontWidth; ++col) {
        if (kFont5x7[i][row] >> (kFontWidth - 1 - col) & 1) {
          auto* px = g.image.at(col, row);
          px[0] = ink.r;
          px[1] = ink.g;
          px[2] = ink.b;
          g.alpha[static_cast<std::size_t>(row) * kFontWidth + col] = 1.0f;
        }
      }
    }
    set.add(std::move(g));
  }
  return set;
}

/// Nearest-neighbor integer upscale of a glyph (image and coverage).
inline Glyph scale_glyph(const Glyph& g, int scale) {
  if (scale <= 1) return g;
  Glyph out;
  out.character = g.character;
  const int w = g.image.width * scale;
  const int h = g.image.height * scale;
  out.image = RasterImage::filled(w, h, Rgb{0, 0, 0});
  out.alpha.assign(static_cast<std::size_t>(w) * h, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = x / scale;
      const int sy = y / scale;
      const auto* src = g.image.at(sx, sy);
      auto* dst = out.image.at(x, y);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
      out.alpha[static_cast<std::size_t>(y) * w + x] =
          g.alpha[static_cast<std::size_t>(sy) * g.image.width + sx];
    }
  }
  return out;
}

/// How text sits on a plate background. Glyph bottoms rest on baseline_y.
struct PlateLayout {
  RasterImage background;
  int baseline_y = 0;
  int left_margin = 0;
  int char_gap = 0;
  int glyph_scale = 1;
};

inline RasterImage make_plate_background(int width, int height, Rgb plate,
                                         Rgb border, int border_px = 2) {
  RasterImage img = RasterImage::filled(width, height, plate);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x < border_px || y < border_px || x >= width - border_px ||
          y >= height - border_px) {
        auto* px = img.at(x, y);
        px[0] = border.r;
        px[1] = border.g;
        px[2] = border.b;
      }
    }
  }
  return img;
}

/// Three stock 200x48 plate styles; up to 7 characters at scale 4.
inline std::vector<PlateLayout> default_layouts() {
  std::vector<PlateLayout> layouts;
  const std::array<std::pair<Rgb, Rgb>, 3> styles = {{
      {Rgb{235, 235, 235}, Rgb{45, 45, 60}},
      {Rgb{240, 205, 70}, Rgb{60, 50, 20}},
      {Rgb{214, 226, 242}, Rgb{30, 60, 110}},
  }};
  for (const auto& [plate, border] : styles) {
    PlateLayout layout;
    layout.background = make_plate_background(200, 48, plate, border);
    layout.baseline_y = 38;
    layout.left_margin = 12;
    layout.char_gap = 6;
    layout.glyph_scale = 4;
    layouts.push_back(std::move(layout));
  }
  return layouts;
}

struct ComposedPlate {
  RasterImage image;
  LabelRecord plate_label;
  std::vector<LabelRecord> char_labels;
};

/// Alpha-composites `text` onto the layout background left to right and
/// emits a tight normalized box per glyph plus the whole-plate box.
inline ComposedPlate compose_plate(const PlateLayout& layout,
                                   std::string_view text,
                                   const GlyphSet& glyphs,
                                   const Alphabet& alphabet = Alphabet::plate36(),
                                   int plate_category = kPlateCategory) {
  ComposedPlate out;
  out.image = layout.background;
  const int width = out.image.width;
  const int height = out.image.height;
  out.plate_label = LabelRecord{plate_category, BoxNorm{0.5, 0.5, 1.0, 1.0}};

  int x = layout.left_margin;
  for (const char c : text) {
    const Glyph glyph = scale_glyph(glyphs.at(c), layout.glyph_scale);
    const int gw = glyph.image.width;
    const int gh = glyph.image.height;
    const int top = layout.baseline_y - gh;
    if (top < 0 || layout.baseline_y > height || x < 0 || x + gw > width) {
      throw LayoutError("text does not fit the plate layout");
    }

    int min_x = gw, min_y = gh, max_x = -1, max_y = -1;
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        const float a = glyph.alpha[static_cast<std::size_t>(gy) * gw + gx];
        if (a <= 0.0f) continue;
        min_x = std::min(min_x, gx);
        min_y = std::min(min_y, gy);
        max_x = std::max(max_x, gx);
        max_y = std::max(max_y, gy);
        const auto* src = glyph.image.at(gx, gy);
        auto* dst = out.image.at(x + gx, top + gy);
        for (int ch = 0; ch < 3; ++ch) {
          const double blended =
              static_cast<double>(a) * src[ch] +
              (1.0 - static_cast<double>(a)) * dst[ch];
          dst[ch] = static_cast<std::uint8_t>(std::lround(blended));
        }
      }
    }
    if (max_x < 0) {  // fully transparent glyph: fall back to its extent
      min_x = 0;
      min_y = 0;
      max_x = gw - 1;
      max_y = gh - 1;
    }
    const BoxPixel tight{static_cast<double>(x + min_x),
                         static_cast<double>(top + min_y),
                         static_cast<double>(x + max_x + 1),
                         static_cast<double>(top + max_y + 1)};
    out.char_labels.push_back(
        LabelRecord{alphabet.index_of(c), from_pixel(tight, width, height)});
    x += gw + layout.char_gap;
  }
  return out;
}

/// Inverse-mapped perspective warp with bilinear sampling. Destination
/// pixel (i,j) samples the source at H^-1 applied to its center
/// (i+0.5, j+0.5); taps outside the source take the fill color.
inline RasterImage warp_image(const RasterImage& src, const Homography& h,
                              Rgb fill) {
  const Homography inv = h.inverse();
  RasterImage out = RasterImage::filled(src.width, src.height, fill);
  const double fill_ch[3] = {static_cast<double>(fill.r),
                             static_cast<double>(fill.g),
                             static_cast<double>(fill.b)};
  for (int j = 0; j < out.height; ++j) {
    for (int i = 0; i < out.width; ++i) {
      const double dx = i + 0.5;
      const double dy = j + 0.5;
      const double w =
          inv.at(2, 0) * dx + inv.at(2, 1) * dy + inv.at(2, 2);
      if (std::abs(w) < 1e-12) continue;  // point at infinity: keep fill
      const double sx =
          (inv.at(0, 0) * dx + inv.at(0, 1) * dy + inv.at(0, 2)) / w;
      const double sy =
          (inv.at(1, 0) * dx + inv.at(1, 1) * dy + inv.at(1, 2)) / w;

      const double u = sx - 0.5;
      const double v = sy - 0.5;
      const double x0 = std::floor(u);
      const double y0 = std::floor(v);
      const double fx = u - x0;
      const double fy = v - y0;
      const int ix = static_cast<int>(x0);
      const int iy = static_cast<int>(y0);
      const double weights[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy),
                                 (1.0 - fx) * fy, fx * fy};
      const int taps[4][2] = {
          {ix, iy}, {ix + 1, iy}, {ix, iy + 1}, {ix + 1, iy + 1}};

      double acc[3] = {0.0, 0.0, 0.0};
      for (int t = 0; t < 4; ++t) {
        const int tx = taps[t][0];
        const int ty = taps[t][1];
        if (src.in_bounds(tx, ty)) {
          const auto* px = src.at(tx, ty);
          for (int ch = 0; ch < 3; ++ch) acc[ch] += weights[t] * px[ch];
        } else {
          for (int ch = 0; ch < 3; ++ch) acc[ch] += weights[t] * fill_ch[ch];
        }
      }
      auto* dst = out.at(i, j);
      for (int ch = 0; ch < 3; ++ch) {
        dst[ch] = static_cast<std::uint8_t>(
            std::clamp(std::lround(acc[ch]), 0L, 255L));
      }
    }
  }
  return out;
}

/// Axis-aligned hull of the four warped corners, clamped to the frame.
inline BoxPixel warp_box(const BoxPixel& box, const Homography& h, int width,
                         int height) {
  const std::array<Point2, 4> corners = {
      Point2{box.x_min, box.y_min}, Point2{box.x_max, box.y_min},
      Point2{box.x_max, box.y_max}, Point2{box.x_min, box.y_max}};
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  for (std::size_t i = 0; i < corners.size(); ++i) {
    const Point2 p = apply_homography(h, corners[i]);
    if (i == 0) {
      min_x = max_x = p.x;
      min_y = max_y = p.y;
    } else {
      min_x = std::min(min_x, p.x);
      min_y = std::min(min_y, p.y);
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
    }
  }
  const double w = static_cast<double>(width);
  const double hh = static_cast<double>(height);
  return BoxPixel{std::clamp(min_x, 0.0, w), std::clamp(min_y, 0.0, hh),
                  std::clamp(max_x, 0.0, w), std::clamp(max_y, 0.0, hh)};
}

/// Per channel: out = clamp(round(gain * in + bias), 0, 255).
inline RasterImage adjust_channels(const RasterImage& img,
                                   const std::array<double, 3>& gains,
                                   const std::array<double, 3>& biases) {
  RasterImage out = img;
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    for (int ch = 0; ch < 3; ++ch) {
      out.pixels[i + ch] = static_cast<std::uint8_t>(std::clamp(
          std::lround(gains[static_cast<std::size_t>(ch)] * img.pixels[i + ch] +
                      biases[static_cast<std::size_t>(ch)]),
          0L, 255L));
    }
  }
  return out;
}

/// Augmentation ranges, all symmetric or explicit, drawn per item.
struct AugmentSpec {
  double rotation_deg = 8.0;        // angle drawn from [-rotation_deg, +rotation_deg]
  double perspective_jitter = 0.06; // corner shift as fraction of each side
  double gain_min = 0.8;
  double gain_max = 1.2;
  double bias_min = -20.0;
  double bias_max = 20.0;
  std::uint64_t seed = 0;

  bool valid() const {
    return rotation_deg >= 0.0 && perspective_jitter >= 0.0 &&
           perspective_jitter < 0.25 && gain_min <= gain_max &&
           bias_min <= bias_max;
  }
};

struct TextSpec {
  int min_length = 5;
  int max_length = 7;
};

struct GenerateConfig {
  int count = 0;
  std::filesystem::path out_dir;
  std::vector<PlateLayout> layouts;
  GlyphSet glyphs;
  AugmentSpec augment;
  TextSpec text;
  Alphabet alphabet = Alphabet::plate36();
  int plate_category = kPlateCategory;
  int jobs = 1;
};

struct ManifestItem {
  int index = 0;
  std::string text;
  std::string image_file;
  std::string label_file;
  int layout_index = 0;
  double rotation_deg = 0.0;
  std::array<std::array<double, 2>, 4> corner_jitter{};
  std::array<double, 3> gains{1.0, 1.0, 1.0};
  std::array<double, 3> biases{0.0, 0.0, 0.0};
};

struct Manifest {
  std::vector<ManifestItem> items;
  std::filesystem::path manifest_path;
};

namespace detail {

inline ManifestItem generate_item(const GenerateConfig& config, int index) {
  SplitMix64 rng(derive_stream(config.augment.seed,
                               static_cast<std::uint64_t>(index)));
  ManifestItem item;
  item.index = index;

  // Draw order is fixed: layout, text, rotation, corner jitter, gains,
  // biases. Changing it would break seed reproducibility.
  item.layout_index =
      static_cast<int>(rng.below(config.layouts.size()));
  const PlateLayout& layout =
      config.layouts[static_cast<std::size_t>(item.layout_index)];

  const int span = config.text.max_length - config.text.min_length;
  const int length =
      config.text.min_length +
      (span > 0 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(span) + 1))
                : 0);
  for (int i = 0; i < length; ++i) {
    item.text.push_back(
        config.alphabet.at(rng.below(config.alphabet.size())));
  }

  const auto& aug = config.augment;
  item.rotation_deg = rng.uniform(-aug.rotation_deg, aug.rotation_deg);
  const int width = layout.background.width;
  const int height = layout.background.height;
  bool any_jitter = false;
  for (auto& corner : item.corner_jitter) {
    corner[0] = rng.uniform(-aug.perspective_jitter, aug.perspective_jitter) *
                width;
    corner[1] = rng.uniform(-aug.perspective_jitter, aug.perspective_jitter) *
                height;
    any_jitter = any_jitter || corner[0] != 0.0 || corner[1] != 0.0;
  }
  for (auto& g : item.gains) g = rng.uniform(aug.gain_min, aug.gain_max);
  for (auto& b : item.biases) b = rng.uniform(aug.bias_min, aug.bias_max);

  const ComposedPlate composed = compose_plate(
      layout, item.text, config.glyphs, config.alphabet, config.plate_category);

  const Homography rotation = Homography::rotation(
      item.rotation_deg * std::numbers::pi / 180.0,
      Point2{width / 2.0, height / 2.0});
  Homography warp = rotation;
  if (any_jitter) {
    const std::array<Point2, 4> corners = {
        Point2{0, 0}, Point2{static_cast<double>(width), 0},
        Point2{static_cast<double>(width), static_cast<double>(height)},
        Point2{0, static_cast<double>(height)}};
    std::array<Point2, 4> moved = corners;
    for (int i = 0; i < 4; ++i) {
      moved[static_cast<std::size_t>(i)].x +=
          item.corner_jitter[static_cast<std::size_t>(i)][0];
      moved[static_cast<std::size_t>(i)].y +=
          item.corner_jitter[static_cast<std::size_t>(i)][1];
    }
    warp = solve_homography(corners, moved) * rotation;
  }

  RasterImage image = warp_image(composed.image, warp, Rgb{0, 0, 0});
  image = adjust_channels(image, item.gains, item.biases);

  std::vector<LabelRecord> labels;
  labels.push_back(LabelRecord{
      composed.plate_label.category_id,
      from_pixel(warp_box(to_pixel(composed.plate_label.box, width, height),
                          warp, width, height),
                 width, height)});
  for (const auto& r : composed.char_labels) {
    const BoxPixel warped =
        warp_box(to_pixel(r.box, width, height), warp, width, height);
    // Boxes pushed (almost) fully out of frame collapse under clamping;
    // drop slivers that would not survive the 6-decimal label format.
    if (warped.width() / width < 1e-4 || warped.height() / height < 1e-4) {
      continue;
    }
    labels.push_back(
        LabelRecord{r.category_id, from_pixel(warped, width, height)});
  }

  char stem[32];
  std::snprintf(stem, sizeof(stem), "plate_%06d", index);
  item.image_file = std::string(stem) + ".ppm";
  item.label_file = std::string(stem) + ".txt";
  write_file(config.out_dir / item.image_file, write_ppm(image));
  write_file(config.out_dir / item.label_file, write_label_file(labels));
  return item;
}

}  // namespace detail

/// Deterministic dataset generation: item i is a pure function of
/// (config, seed, i), so reruns and parallel runs produce byte-identical
/// trees. Writes images, label files, and a JSON-lines manifest.
inline Manifest generate_dataset(const GenerateConfig& config) {
  namespace fs = std::filesystem;
  if (!config.augment.valid()) throw Error("augment ranges are ill-formed");
  if (config.layouts.empty()) throw Error("no plate layouts given");
  if (config.text.min_length < 0 ||
      config.text.max_length < config.text.min_length) {
    throw Error("text length range is ill-formed");
  }

  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec || !fs::is_directory(config.out_dir)) {
    throw IoError("cannot create output directory " +
                  config.out_dir.string());
  }

  Manifest manifest;
  manifest.items.resize(static_cast<std::size_t>(std::max(0, config.count)));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  const auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= config.count) break;
      try {
        manifest.items[static_cast<std::size_t>(i)] =
            detail::generate_item(config, i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) {
          first_error = std::make_exception_ptr(
              Error("item " + std::to_string(i) + ": " + e.what()));
        }
        break;
      }
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::string lines;
  for (const auto& item : manifest.items) {
    nlohmann::json j;
    j["index"] = item.index;
    j["text"] = item.text;
    j["image"] = item.image_file;
    j["label"] = item.label_file;
    j["layout"] = item.layout_index;
    j["rotation_deg"] = item.rotation_deg;
    j["corner_jitter"] = item.corner_jitter;
    j["gains"] = item.gains;
    j["biases"] = item.biases;
    lines += j.dump();
    lines += "\n";
  }
  manifest.manifest_path = config.out_dir / "manifest.jsonl";
  write_file(manifest.manifest_path, lines);
  return manifest;
}

}  // namespace platekit
