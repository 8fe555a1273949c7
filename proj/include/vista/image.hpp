#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vista {

/// Raised when a bounding box is degenerate or incompatible with an image.
class malformed_region_error : public std::runtime_error {
public:
  explicit malformed_region_error(const std::string& what)
      : std::runtime_error(what) {}
};

/// Axis-aligned pixel region, inclusive-min / exclusive-max.
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  long area() const { return static_cast<long>(width()) * height(); }

  bool operator==(const BoundingBox&) const = default;
};

/// RGB raster with channel-interleaved row-major float pixels in [0,1].
struct ImageBuffer {
  int width = 0;
  int height = 0;
  static constexpr int channels = 3;
  std::vector<float> pixels;  // width * height * channels

  ImageBuffer() = default;
  ImageBuffer(int w, int h, float fill = 0.0f)
      : width(w), height(h),
        pixels(static_cast<size_t>(w) * h * channels, fill) {
    if (w < 1 || h < 1)
      throw std::invalid_argument("ImageBuffer: dimensions must be >= 1");
  }

  float& at(int x, int y, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const ImageBuffer&) const = default;
};

/// Round half away from zero; annotation floats become integer pixel coords.
inline int round_half_away(double v) {
  return static_cast<int>(v < 0 ? std::ceil(v - 0.5) : std::floor(v + 0.5));
}

/// Clamp a box to image bounds. Throws if the result has zero area.
inline BoundingBox clamp_box(const BoundingBox& box, int width, int height) {
  BoundingBox r;
  r.x_min = std::clamp(box.x_min, 0, width);
  r.y_min = std::clamp(box.y_min, 0, height);
  r.x_max = std::clamp(box.x_max, 0, width);
  r.y_max = std::clamp(box.y_max, 0, height);
  if (r.x_min >= r.x_max || r.y_min >= r.y_max)
    throw malformed_region_error("box has zero area after clamping: (" +
                                 std::to_string(box.x_min) + "," +
                                 std::to_string(box.y_min) + "," +
                                 std::to_string(box.x_max) + "," +
                                 std::to_string(box.y_max) + ")");
  return r;
}

inline void validate_box(const BoundingBox& box, const ImageBuffer& image) {
  if (box.x_min < 0 || box.y_min < 0 || box.x_max > image.width ||
      box.y_max > image.height || box.x_min >= box.x_max ||
      box.y_min >= box.y_max)
    throw malformed_region_error("box invalid for image");
}

/// Expand `box` symmetrically about its center by `margin` (>= 1.0),
/// intersect with image bounds, and return the covered sub-image.
/// margin = 1.0 is the tight crop.
inline ImageBuffer crop_with_margin(const ImageBuffer& image,
                                    const BoundingBox& box, double margin) {
  validate_box(box, image);
  if (!std::isfinite(margin) || margin < 1.0)
    throw std::invalid_argument("crop margin must be finite and >= 1.0");

  const double cx = 0.5 * (box.x_min + box.x_max);
  const double cy = 0.5 * (box.y_min + box.y_max);
  const double hw = 0.5 * margin * box.width();
  const double hh = 0.5 * margin * box.height();
  BoundingBox expanded{round_half_away(cx - hw), round_half_away(cy - hh),
                       round_half_away(cx + hw), round_half_away(cy + hh)};
  expanded = clamp_box(expanded, image.width, image.height);

  ImageBuffer out(expanded.width(), expanded.height());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < ImageBuffer::channels; ++c)
        out.at(x, y, c) = image.at(expanded.x_min + x, expanded.y_min + y, c);
  return out;
}

/// Discrete Gaussian taps, radius ceil(3*sigma), normalized to sum 1.
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(static_cast<double>(i) * i) /
                             (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

/// Separable Gaussian convolution per channel, edge replication at borders.
inline ImageBuffer gaussian_blur(const ImageBuffer& image, double sigma) {
  if (!std::isfinite(sigma) || sigma <= 0.0)
    throw std::invalid_argument("blur sigma must be finite and > 0");
  const std::vector<double> kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);

  ImageBuffer tmp(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < ImageBuffer::channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sx = std::clamp(x + i, 0, image.width - 1);
          acc += kernel[i + radius] * image.at(sx, y, c);
        }
        tmp.at(x, y, c) = static_cast<float>(acc);
      }

  ImageBuffer out(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < ImageBuffer::channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sy = std::clamp(y + i, 0, image.height - 1);
          acc += kernel[i + radius] * tmp.at(x, sy, c);
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
  return out;
}

enum class BlurMode { Inside, Outside };

/// Blur either the box interior (Inside) or everything else (Outside).
/// The untouched region stays bit-identical to the source.
inline ImageBuffer blur_region(const ImageBuffer& image, const BoundingBox& box,
                               BlurMode mode, double sigma) {
  validate_box(box, image);
  const ImageBuffer blurred = gaussian_blur(image, sigma);
  ImageBuffer out = (mode == BlurMode::Outside) ? blurred : image;
  const ImageBuffer& patch = (mode == BlurMode::Outside) ? image : blurred;
  for (int y = box.y_min; y < box.y_max; ++y)
    for (int x = box.x_min; x < box.x_max; ++x)
      for (int c = 0; c < ImageBuffer::channels; ++c)
        out.at(x, y, c) = patch.at(x, y, c);
  return out;
}

struct Rgb {
  float r = 0, g = 0, b = 0;
};

/// Default stroke scales with resolution so the frame stays visible.
inline int default_stroke_width(int image_width, int image_height) {
  return std::max(2, round_half_away(0.01 * std::min(image_width,
                                                     image_height)));
}

/// Draw a rectangular frame of `width` pixels just inside the box edges.
inline ImageBuffer draw_box(const ImageBuffer& image, const BoundingBox& box,
                            Rgb color, int width) {
  validate_box(box, image);
  if (width < 1 || 2 * width > std::min(box.width(), box.height()))
    throw malformed_region_error("stroke width too large for box");
  ImageBuffer out = image;
  for (int y = box.y_min; y < box.y_max; ++y)
    for (int x = box.x_min; x < box.x_max; ++x) {
      const bool on_frame = x < box.x_min + width || x >= box.x_max - width ||
                            y < box.y_min + width || y >= box.y_max - width;
      if (!on_frame) continue;
      out.at(x, y, 0) = color.r;
      out.at(x, y, 1) = color.g;
      out.at(x, y, 2) = color.b;
    }
  return out;
}

/// Frame drawn with a color cycling per side (ablation prompt).
inline ImageBuffer draw_colorful_box(const ImageBuffer& image,
                                     const BoundingBox& box, int width) {
  validate_box(box, image);
  if (width < 1 || 2 * width > std::min(box.width(), box.height()))
    throw malformed_region_error("stroke width too large for box");
  static constexpr Rgb side_colors[4] = {
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}};
  ImageBuffer out = image;
  for (int y = box.y_min; y < box.y_max; ++y)
    for (int x = box.x_min; x < box.x_max; ++x) {
      int side = -1;
      if (y < box.y_min + width) side = 0;
      else if (y >= box.y_max - width) side = 1;
      else if (x < box.x_min + width) side = 2;
      else if (x >= box.x_max - width) side = 3;
      if (side < 0) continue;
      out.at(x, y, 0) = side_colors[side].r;
      out.at(x, y, 1) = side_colors[side].g;
      out.at(x, y, 2) = side_colors[side].b;
    }
  return out;
}

/// Luminance conversion replicated to all three channels.
inline ImageBuffer grayscale(const ImageBuffer& image) {
  ImageBuffer out(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const float lum = 0.299f * image.at(x, y, 0) +
                        0.587f * image.at(x, y, 1) +
                        0.114f * image.at(x, y, 2);
      out.at(x, y, 0) = out.at(x, y, 1) = out.at(x, y, 2) = lum;
    }
  return out;
}

}  // namespace vista
