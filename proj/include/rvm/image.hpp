#pragma once

#include <cassert>
#include <string>
#include <vector>

#include "rvm/common.hpp"

namespace rvm::imaging {

// Pixels are stored as doubles in [0, 255] end to end; quantization to 8 bits
// happens only on file export (see image_io.hpp).

enum class GraySource { Ordinary, Luma, External };

struct Provenance {
  GraySource source = GraySource::External;
  bool inverted = false;

  std::string tag() const {
    std::string base;
    switch (source) {
      case GraySource::Ordinary: base = "ordinary"; break;
      case GraySource::Luma: base = "luma"; break;
      case GraySource::External: base = "external"; break;
    }
    return inverted ? "inverted-" + base : base;
  }
  bool operator==(const Provenance&) const = default;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pix;  // row-major, y * width + x
  Provenance prov;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0, Provenance p = {})
      : width(w), height(h), pix(static_cast<size_t>(w) * h, fill), prov(p) {}

  double& at(int x, int y) { return pix[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return pix[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return pix.size(); }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
};

struct ColorImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<double> r, g, b;  // identical dimensions by construction

  ColorImage() = default;
  ColorImage(int w, int h)
      : width(w), height(h),
        r(static_cast<size_t>(w) * h, 0.0),
        g(static_cast<size_t>(w) * h, 0.0),
        b(static_cast<size_t>(w) * h, 0.0) {}

  size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  size_t size() const { return r.size(); }
};

struct GammaParams {
  double exponent = 1.0 / 2.2;  // encoding exponent on normalized values
};

namespace detail {
inline void require_valid(const ColorImage& img) {
  if (img.width <= 0 || img.height <= 0)
    throw std::invalid_argument("color image has zero size");
  const size_t n = static_cast<size_t>(img.width) * img.height;
  if (img.r.size() != n || img.g.size() != n || img.b.size() != n)
    throw std::invalid_argument("color planes have mismatched dimensions");
}
inline void require_valid(const GrayImage& img) {
  if (img.width <= 0 || img.height <= 0)
    throw std::invalid_argument("gray image has zero size");
  if (img.pix.size() != static_cast<size_t>(img.width) * img.height)
    throw std::invalid_argument("gray plane size mismatch");
}
}  // namespace detail

// Weighted combination of the linear channel intensities:
// 0.3*R + 0.59*G + 0.11*B.
inline GrayImage to_gray_ordinary(const ColorImage& img) {
  detail::require_valid(img);
  GrayImage out(img.width, img.height, 0.0, {GraySource::Ordinary, false});
  for (size_t i = 0; i < img.size(); ++i)
    out.pix[i] = 0.3 * img.r[i] + 0.59 * img.g[i] + 0.11 * img.b[i];
  return out;
}

// Luma: gamma-encode each channel, then 0.2126*R' + 0.7152*G' + 0.0722*B'.
inline GrayImage to_gray_luma(const ColorImage& img, GammaParams gamma = {}) {
  detail::require_valid(img);
  if (!(gamma.exponent > 0.0))
    throw std::invalid_argument("gamma exponent must be positive");
  GrayImage out(img.width, img.height, 0.0, {GraySource::Luma, false});
  auto encode = [&](double v) {
    return 255.0 * std::pow(v / 255.0, gamma.exponent);
  };
  for (size_t i = 0; i < img.size(); ++i)
    out.pix[i] = 0.2126 * encode(img.r[i]) + 0.7152 * encode(img.g[i]) +
                 0.0722 * encode(img.b[i]);
  return out;
}

// Photometric complement on the real-valued plane; exact involution.
inline GrayImage invert(const GrayImage& img) {
  detail::require_valid(img);
  GrayImage out = img;
  out.prov.inverted = !out.prov.inverted;
  for (double& v : out.pix) v = 255.0 - v;
  return out;
}

// Area-averaged downsampling. Integer and non-integer factors both
// supported; upsampling is not.
inline GrayImage downsample(const GrayImage& img, int target_w, int target_h) {
  detail::require_valid(img);
  if (target_w <= 0 || target_h <= 0)
    throw std::invalid_argument("target dimensions must be positive");
  if (target_w > img.width || target_h > img.height)
    throw std::invalid_argument("upsampling is not supported");

  GrayImage out(target_w, target_h, 0.0, img.prov);
  const bool integer_factor =
      img.width % target_w == 0 && img.height % target_h == 0;

  if (integer_factor) {
    const int fx = img.width / target_w;
    const int fy = img.height / target_h;
    const double inv_area = 1.0 / (static_cast<double>(fx) * fy);
    for (int oy = 0; oy < target_h; ++oy)
      for (int ox = 0; ox < target_w; ++ox) {
        double sum = 0.0;
        for (int dy = 0; dy < fy; ++dy)
          for (int dx = 0; dx < fx; ++dx)
            sum += img.at(ox * fx + dx, oy * fy + dy);
        out.at(ox, oy) = sum * inv_area;
      }
    return out;
  }

  // General box average: each output pixel averages the source rectangle it
  // covers, weighting partially-covered rows/columns by overlap length.
  const double sx = static_cast<double>(img.width) / target_w;
  const double sy = static_cast<double>(img.height) / target_h;
  for (int oy = 0; oy < target_h; ++oy) {
    const double y0 = oy * sy, y1 = (oy + 1) * sy;
    const int ry0 = static_cast<int>(std::floor(y0));
    const int ry1 = std::min(img.height - 1, static_cast<int>(std::ceil(y1)) - 1);
    for (int ox = 0; ox < target_w; ++ox) {
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      const int rx0 = static_cast<int>(std::floor(x0));
      const int rx1 = std::min(img.width - 1, static_cast<int>(std::ceil(x1)) - 1);
      double sum = 0.0, wsum = 0.0;
      for (int y = ry0; y <= ry1; ++y) {
        const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        if (wy <= 0) continue;
        for (int x = rx0; x <= rx1; ++x) {
          const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          if (wx <= 0) continue;
          sum += wx * wy * img.at(x, y);
          wsum += wx * wy;
        }
      }
      out.at(ox, oy) = sum / wsum;
    }
  }
  return out;
}

}  // namespace rvm::imaging
