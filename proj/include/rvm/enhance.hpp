#pragma once

#include <map>
#include <utility>

#include "rvm/image.hpp"

namespace rvm::enhance {

// Block-wise ridge orientation (undirected, [0, pi)) with a coherence score.
struct OrientationField {
  int block_size = 16;
  int cols = 0;
  int rows = 0;
  std::vector<double> angle;
  std::vector<double> coherence;

  OrientationField() = default;
  OrientationField(int bs, int c, int r)
      : block_size(bs), cols(c), rows(r),
        angle(static_cast<size_t>(c) * r, 0.0),
        coherence(static_cast<size_t>(c) * r, 0.0) {}

  size_t idx(int c, int r) const { return static_cast<size_t>(r) * cols + c; }
  double angle_at(int c, int r) const { return angle[idx(c, r)]; }
  double coherence_at(int c, int r) const { return coherence[idx(c, r)]; }
};

struct BlockMask {
  int cols = 0;
  int rows = 0;
  std::vector<std::uint8_t> fg;

  BlockMask() = default;
  BlockMask(int c, int r) : cols(c), rows(r),
                            fg(static_cast<size_t>(c) * r, 0) {}
  bool at(int c, int r) const {
    return fg[static_cast<size_t>(r) * cols + c] != 0;
  }
  void set(int c, int r, bool v) {
    fg[static_cast<size_t>(r) * cols + c] = v ? 1 : 0;
  }
};

struct FrequencyGrid {
  int cols = 0;
  int rows = 0;
  std::vector<double> freq;  // cycles/pixel, 0 where unreliable

  FrequencyGrid() = default;
  FrequencyGrid(int c, int r) : cols(c), rows(r),
                                freq(static_cast<size_t>(c) * r, 0.0) {}
  double at(int c, int r) const {
    return freq[static_cast<size_t>(r) * cols + c];
  }
  void set(int c, int r, double v) {
    freq[static_cast<size_t>(r) * cols + c] = v;
  }
};

struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> v;

  BinaryImage() = default;
  BinaryImage(int w, int h) : width(w), height(h),
                              v(static_cast<size_t>(w) * h, 0) {}
  bool at(int x, int y) const {
    if (x < 0 || x >= width || y < 0 || y >= height) return false;
    return v[static_cast<size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool b) {
    v[static_cast<size_t>(y) * width + x] = b ? 1 : 0;
  }
};

// Signed Gabor response; zero mean within the mask, zero outside it.
struct ResponseImage {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  ResponseImage() = default;
  ResponseImage(int w, int h) : width(w), height(h),
                                v(static_cast<size_t>(w) * h, 0.0) {}
  double at(int x, int y) const { return v[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return v[static_cast<size_t>(y) * width + x]; }
};

struct RidgeMaps {
  int block_size = 16;
  FrequencyGrid frequency;
  BlockMask mask;
  BinaryImage binary;
  BinaryImage skeleton;
};

struct EnhanceParams {
  int block_size = 16;
  double target_mean = 128.0;
  double target_var = 2000.0;
  double segment_var_threshold = 150.0;  // on the normalized image
  double min_coherence = 0.2;
  int freq_window = 48;
  double min_period = 3.0;
  double max_period = 25.0;
  double gabor_sigma_factor = 0.5;  // sigma = factor * local period
};

namespace detail {
inline int grid_cells(int extent, int block) {
  return (extent + block - 1) / block;
}
}  // namespace detail

// Mean/variance normalization (affine), clamped to [0, 255].
inline imaging::GrayImage normalize(const imaging::GrayImage& img,
                                    double target_mean, double target_var) {
  imaging::detail::require_valid(img);
  double mean = 0.0;
  for (double v : img.pix) mean += v;
  mean /= static_cast<double>(img.size());
  double var = 0.0;
  for (double v : img.pix) var += (v - mean) * (v - mean);
  var /= static_cast<double>(img.size());
  if (var <= 0.0)
    throw std::invalid_argument("cannot normalize a constant image");

  const double gain = std::sqrt(target_var / var);
  imaging::GrayImage out = img;
  for (double& v : out.pix) v = clamp255(target_mean + (v - mean) * gain);
  return out;
}

namespace detail {

inline void dilate3x3(BlockMask& m) {
  BlockMask src = m;
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      bool any = false;
      for (int dr = -1; dr <= 1 && !any; ++dr)
        for (int dc = -1; dc <= 1 && !any; ++dc) {
          int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < m.rows && cc >= 0 && cc < m.cols &&
              src.at(cc, rr))
            any = true;
        }
      m.set(c, r, any);
    }
}

inline void erode3x3(BlockMask& m) {
  BlockMask src = m;
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      bool all = true;
      for (int dr = -1; dr <= 1 && all; ++dr)
        for (int dc = -1; dc <= 1 && all; ++dc) {
          int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= m.rows || cc < 0 || cc >= m.cols ||
              !src.at(cc, rr))
            all = false;
        }
      m.set(c, r, all);
    }
}

}  // namespace detail

// Foreground segmentation by block variance, cleaned up by a morphological
// close followed by an open on the block grid.
inline BlockMask segment(const imaging::GrayImage& img, int block_size,
                         double var_threshold) {
  imaging::detail::require_valid(img);
  if (block_size < 4) throw std::invalid_argument("block_size must be >= 4");
  const int cols = detail::grid_cells(img.width, block_size);
  const int rows = detail::grid_cells(img.height, block_size);
  BlockMask mask(cols, rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int x0 = c * block_size, y0 = r * block_size;
      const int x1 = std::min(img.width, x0 + block_size);
      const int y1 = std::min(img.height, y0 + block_size);
      double sum = 0.0, sum2 = 0.0;
      const int n = (x1 - x0) * (y1 - y0);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          const double v = img.at(x, y);
          sum += v;
          sum2 += v * v;
        }
      const double mean = sum / n;
      const double var = std::max(0.0, sum2 / n - mean * mean);
      mask.set(c, r, var > var_threshold);
    }
  detail::dilate3x3(mask);
  detail::erode3x3(mask);  // close
  detail::erode3x3(mask);
  detail::dilate3x3(mask);  // open
  return mask;
}

// Gradient-based least-squares orientation per block: the doubled angles of
// the gradient covariance are averaged, coherence is the normalized
// eigenvalue gap. Low-coherence blocks inherit from the nearest coherent
// block, then one whole-grid doubled-angle smoothing pass runs.
inline OrientationField estimate_orientation(const imaging::GrayImage& img,
                                             int block_size,
                                             double min_coherence = 0.2) {
  imaging::detail::require_valid(img);
  if (block_size < 8) throw std::invalid_argument("block_size must be >= 8");
  const int cols = detail::grid_cells(img.width, block_size);
  const int rows = detail::grid_cells(img.height, block_size);
  OrientationField field(block_size, cols, rows);

  auto pix = [&](int x, int y) {
    return img.at(std::clamp(x, 0, img.width - 1),
                  std::clamp(y, 0, img.height - 1));
  };
  // Sobel gradients, accumulated per block.
  std::vector<double> gxx(field.angle.size(), 0.0), gyy(field.angle.size(), 0.0),
      gxy(field.angle.size(), 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double gx = (pix(x + 1, y - 1) + 2 * pix(x + 1, y) + pix(x + 1, y + 1)) -
                        (pix(x - 1, y - 1) + 2 * pix(x - 1, y) + pix(x - 1, y + 1));
      const double gy = (pix(x - 1, y + 1) + 2 * pix(x, y + 1) + pix(x + 1, y + 1)) -
                        (pix(x - 1, y - 1) + 2 * pix(x, y - 1) + pix(x + 1, y - 1));
      const size_t b = field.idx(x / block_size, y / block_size);
      gxx[b] += gx * gx;
      gyy[b] += gy * gy;
      gxy[b] += gx * gy;
    }
  for (size_t b = 0; b < field.angle.size(); ++b) {
    const double trace = gxx[b] + gyy[b];
    if (trace <= 0.0) {
      field.angle[b] = 0.0;
      field.coherence[b] = 0.0;
      continue;
    }
    const double dxx = gxx[b] - gyy[b];
    field.angle[b] =
        wrap_orientation(0.5 * std::atan2(2.0 * gxy[b], dxx) + kPi / 2);
    field.coherence[b] =
        std::sqrt(dxx * dxx + 4.0 * gxy[b] * gxy[b]) / trace;
  }

  // Inherit orientation for low-coherence blocks: multi-source BFS from
  // coherent blocks, averaging doubled angles of already-assigned neighbors.
  std::vector<std::uint8_t> assigned(field.angle.size(), 0);
  std::vector<std::pair<int, int>> frontier;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (field.coherence[field.idx(c, r)] >= min_coherence) {
        assigned[field.idx(c, r)] = 1;
        frontier.emplace_back(c, r);
      }
  if (!frontier.empty()) {
    while (true) {
      std::vector<std::pair<int, int>> next;
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          if (assigned[field.idx(c, r)]) continue;
          double sx = 0.0, sy = 0.0;
          bool any = false;
          for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
              const int rr = r + dr, cc = c + dc;
              if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
              if (!assigned[field.idx(cc, rr)]) continue;
              sx += std::cos(2.0 * field.angle[field.idx(cc, rr)]);
              sy += std::sin(2.0 * field.angle[field.idx(cc, rr)]);
              any = true;
            }
          if (any) {
            field.angle[field.idx(c, r)] =
                wrap_orientation(0.5 * std::atan2(sy, sx));
            next.emplace_back(c, r);
          }
        }
      if (next.empty()) break;
      for (auto& [c, r] : next) assigned[field.idx(c, r)] = 1;
    }
  }

  // One double-buffered 3x3 doubled-angle smoothing pass.
  std::vector<double> smoothed(field.angle.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double sx = 0.0, sy = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = std::clamp(r + dr, 0, rows - 1);
          const int cc = std::clamp(c + dc, 0, cols - 1);
          sx += std::cos(2.0 * field.angle[field.idx(cc, rr)]);
          sy += std::sin(2.0 * field.angle[field.idx(cc, rr)]);
        }
      smoothed[field.idx(c, r)] = wrap_orientation(0.5 * std::atan2(sy, sx));
    }
  field.angle = std::move(smoothed);
  return field;
}

// Ridge frequency from peak spacing of the x-signature: pixels are projected
// onto the line orthogonal to the block orientation and averaged along the
// ridge direction. Blocks whose implied period falls outside
// [min_period, max_period] get 0.
inline FrequencyGrid estimate_frequency(const imaging::GrayImage& img,
                                        const OrientationField& field,
                                        int window, double min_period = 3.0,
                                        double max_period = 25.0) {
  imaging::detail::require_valid(img);
  if (window < 8) throw std::invalid_argument("window must be >= 8");
  FrequencyGrid grid(field.cols, field.rows);

  auto bilinear = [&](double x, double y) {
    x = std::clamp(x, 0.0, img.width - 1.0);
    y = std::clamp(y, 0.0, img.height - 1.0);
    const int x0 = std::min(static_cast<int>(x), img.width - 2 >= 0 ? img.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), img.height - 2 >= 0 ? img.height - 2 : 0);
    const double fx = x - x0, fy = y - y0;
    return (1 - fx) * (1 - fy) * img.at(x0, y0) +
           fx * (1 - fy) * img.at(std::min(x0 + 1, img.width - 1), y0) +
           (1 - fx) * fy * img.at(x0, std::min(y0 + 1, img.height - 1)) +
           fx * fy * img.at(std::min(x0 + 1, img.width - 1),
                            std::min(y0 + 1, img.height - 1));
  };

  const int tang_half = std::max(2, field.block_size / 2);
  std::vector<double> sig(window), smooth(window);
  for (int r = 0; r < field.rows; ++r)
    for (int c = 0; c < field.cols; ++c) {
      const double cxp = (c + 0.5) * field.block_size;
      const double cyp = (r + 0.5) * field.block_size;
      const double theta = field.angle_at(c, r);
      const double tx = std::cos(theta), ty = std::sin(theta);
      const double nx = -ty, ny = tx;  // normal to the ridge flow

      for (int k = 0; k < window; ++k) {
        const double u = k - 0.5 * (window - 1);
        double acc = 0.0;
        for (int t = -tang_half; t <= tang_half; ++t)
          acc += bilinear(cxp + u * nx + t * tx, cyp + u * ny + t * ty);
        sig[k] = acc / (2 * tang_half + 1);
      }
      // light [1 2 1] smoothing before peak picking
      for (int k = 0; k < window; ++k) {
        const double a = sig[std::max(0, k - 1)];
        const double b = sig[k];
        const double d = sig[std::min(window - 1, k + 1)];
        smooth[k] = 0.25 * a + 0.5 * b + 0.25 * d;
      }
      double mean = 0.0;
      for (double v : smooth) mean += v;
      mean /= window;

      int prev_peak = -1;
      int peaks = 0;
      double spacing_sum = 0.0;
      for (int k = 1; k + 1 < window; ++k) {
        if (smooth[k] > smooth[k - 1] && smooth[k] >= smooth[k + 1] &&
            smooth[k] > mean) {
          if (prev_peak >= 0) {
            spacing_sum += k - prev_peak;
            ++peaks;
          }
          prev_peak = k;
        }
      }
      if (peaks == 0) continue;
      const double period = spacing_sum / peaks;
      if (period >= min_period && period <= max_period)
        grid.set(c, r, 1.0 / period);
    }
  return grid;
}

namespace detail {

struct GaborKernel {
  int half = 0;
  std::vector<double> taps;  // (2*half+1)^2, zero-sum
};

inline GaborKernel make_gabor_kernel(double theta, double freq,
                                     double sigma_factor) {
  GaborKernel k;
  const double period = 1.0 / freq;
  const double sigma = sigma_factor * period;
  k.half = std::max(2, static_cast<int>(std::ceil(2.5 * sigma)));
  const int n = 2 * k.half + 1;
  k.taps.resize(static_cast<size_t>(n) * n);
  const double nx = std::cos(theta + kPi / 2), ny = std::sin(theta + kPi / 2);
  const double txv = std::cos(theta), tyv = std::sin(theta);
  double sum = 0.0;
  for (int dy = -k.half; dy <= k.half; ++dy)
    for (int dx = -k.half; dx <= k.half; ++dx) {
      const double u = dx * nx + dy * ny;
      const double v = dx * txv + dy * tyv;
      const double g = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma)) *
                       std::cos(kTwoPi * freq * u);
      k.taps[static_cast<size_t>(dy + k.half) * n + (dx + k.half)] = g;
      sum += g;
    }
  const double mean = sum / (static_cast<double>(n) * n);
  for (double& t : k.taps) t -= mean;  // zero DC: response to constants is 0
  return k;
}

}  // namespace detail

// Even-symmetric Gabor filtering tuned per pixel from bilinearly interpolated
// block orientation/frequency. Pixels outside the mask (or with no reliable
// frequency) are 0.
inline ResponseImage gabor_enhance(const imaging::GrayImage& img,
                                   const OrientationField& field,
                                   const FrequencyGrid& freq,
                                   const BlockMask& mask,
                                   double sigma_factor = 0.5) {
  imaging::detail::require_valid(img);
  if (field.cols != freq.cols || field.rows != freq.rows ||
      field.cols != mask.cols || field.rows != mask.rows)
    throw std::invalid_argument("grid dimensions disagree");

  ResponseImage out(img.width, img.height);
  const int bs = field.block_size;

  // interpolate doubled-angle vectors and frequency at a pixel
  auto local_params = [&](int x, int y, double& theta, double& f) {
    const double gc = (x + 0.5) / bs - 0.5;
    const double gr = (y + 0.5) / bs - 0.5;
    const int c0 = std::clamp(static_cast<int>(std::floor(gc)), 0, field.cols - 1);
    const int r0 = std::clamp(static_cast<int>(std::floor(gr)), 0, field.rows - 1);
    const int c1 = std::min(c0 + 1, field.cols - 1);
    const int r1 = std::min(r0 + 1, field.rows - 1);
    const double fc = std::clamp(gc - c0, 0.0, 1.0);
    const double fr = std::clamp(gr - r0, 0.0, 1.0);
    const double w00 = (1 - fc) * (1 - fr), w10 = fc * (1 - fr);
    const double w01 = (1 - fc) * fr, w11 = fc * fr;

    double sx = 0.0, sy = 0.0, fsum = 0.0, fw = 0.0;
    auto add = [&](int c, int r, double w) {
      if (w <= 0.0) return;
      sx += w * std::cos(2.0 * field.angle_at(c, r));
      sy += w * std::sin(2.0 * field.angle_at(c, r));
      const double bf = freq.at(c, r);
      if (bf > 0.0) {
        fsum += w * bf;
        fw += w;
      }
    };
    add(c0, r0, w00);
    add(c1, r0, w10);
    add(c0, r1, w01);
    add(c1, r1, w11);
    theta = wrap_orientation(0.5 * std::atan2(sy, sx));
    f = fw > 0.0 ? fsum / fw : 0.0;
  };

  // cache kernels on quantized (orientation, frequency)
  std::map<std::pair<int, int>, detail::GaborKernel> cache;
  auto pix = [&](int x, int y) {
    return img.at(std::clamp(x, 0, img.width - 1),
                  std::clamp(y, 0, img.height - 1));
  };

  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(std::min(x / bs, mask.cols - 1),
                   std::min(y / bs, mask.rows - 1)))
        continue;
      double theta, f;
      local_params(x, y, theta, f);
      if (f <= 0.0) continue;
      const int qa = static_cast<int>(std::floor(theta / kPi * 48.0)) % 48;
      const int qf = static_cast<int>(std::round(f * 1024.0));
      auto it = cache.find({qa, qf});
      if (it == cache.end())
        it = cache.emplace(std::pair<int, int>{qa, qf},
                           detail::make_gabor_kernel((qa + 0.5) * kPi / 48.0,
                                                     qf / 1024.0, sigma_factor))
                 .first;
      const auto& ker = it->second;
      const int n = 2 * ker.half + 1;
      double acc = 0.0;
      for (int dy = -ker.half; dy <= ker.half; ++dy)
        for (int dx = -ker.half; dx <= ker.half; ++dx)
          acc += ker.taps[static_cast<size_t>(dy + ker.half) * n +
                          (dx + ker.half)] *
                 pix(x + dx, y + dy);
      out.at(x, y) = acc;
    }
  return out;
}

namespace detail {

// Set-neighbor count and 0->1 transitions around the 8-ring, used by the
// thinning conditions and by minutiae extraction.
inline void ring_stats(const BinaryImage& img, int x, int y, int& b, int& a) {
  static constexpr int ox[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  static constexpr int oy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  int bits[8];
  b = 0;
  for (int i = 0; i < 8; ++i) {
    bits[i] = img.at(x + ox[i], y + oy[i]) ? 1 : 0;
    b += bits[i];
  }
  a = 0;
  for (int i = 0; i < 8; ++i)
    if (bits[i] == 0 && bits[(i + 1) % 8] == 1) ++a;
}

inline bool thin_deletable(const BinaryImage& img, int x, int y, int subiter) {
  int b, a;
  ring_stats(img, x, y, b, a);
  if (b < 2 || b > 6 || a != 1) return false;
  const bool p2 = img.at(x, y - 1), p4 = img.at(x + 1, y);
  const bool p6 = img.at(x, y + 1), p8 = img.at(x - 1, y);
  if (subiter == 0) return !(p2 && p4 && p6) && !(p4 && p6 && p8);
  return !(p2 && p4 && p8) && !(p2 && p6 && p8);
}

}  // namespace detail

namespace detail {

// 3x3 closing: heals 1-2 px pinches in the bands without bridging the
// inter-band gaps (those are half a period wide).
inline void close3x3(BinaryImage& img) {
  BinaryImage tmp(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      bool any = false;
      for (int dy = -1; dy <= 1 && !any; ++dy)
        for (int dx = -1; dx <= 1 && !any; ++dx)
          if (img.at(x + dx, y + dy)) any = true;
      tmp.set(x, y, any);
    }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy)
        for (int dx = -1; dx <= 1 && all; ++dx)
          if (!tmp.at(x + dx, y + dy)) all = false;
      img.set(x, y, all);
    }
}

// Erases 8-connected components smaller than min_pixels (dots and dominoes
// left behind by pinched-off band tips).
inline void remove_small_components(BinaryImage& img, int min_pixels) {
  std::vector<std::int32_t> stack;
  std::vector<std::uint8_t> seen(img.v.size(), 0);
  std::vector<std::int32_t> component;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::int32_t start = y * img.width + x;
      if (!img.v[start] || seen[start]) continue;
      component.clear();
      stack.assign(1, start);
      seen[start] = 1;
      while (!stack.empty()) {
        const std::int32_t p = stack.back();
        stack.pop_back();
        component.push_back(p);
        const int px = p % img.width, py = p / img.width;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int qx = px + dx, qy = py + dy;
            if (qx < 0 || qy < 0 || qx >= img.width || qy >= img.height)
              continue;
            const std::int32_t q = qy * img.width + qx;
            if (img.v[q] && !seen[q]) {
              seen[q] = 1;
              stack.push_back(q);
            }
          }
      }
      if (static_cast<int>(component.size()) < min_pixels)
        for (std::int32_t p : component) img.v[p] = 0;
    }
}

}  // namespace detail

// Thresholds the response at zero within the mask and thins the result to a
// width-1 skeleton. The binary map is closed once and cleared of tiny
// islands first. Thinning is two-subiteration with the deletions applied
// sequentially in raster order, followed by a cleanup pass that removes the
// remaining fully-set 2x2 blocks where a pixel can be deleted without
// breaking 8-connectivity.
inline RidgeMaps binarize_and_thin(const ResponseImage& response,
                                   const BlockMask& mask, int block_size,
                                   int min_component = 8) {
  RidgeMaps maps;
  maps.block_size = block_size;
  maps.mask = mask;
  maps.binary = BinaryImage(response.width, response.height);
  for (int y = 0; y < response.height; ++y)
    for (int x = 0; x < response.width; ++x) {
      const int c = std::min(x / block_size, mask.cols - 1);
      const int r = std::min(y / block_size, mask.rows - 1);
      maps.binary.set(x, y, mask.at(c, r) && response.at(x, y) > 0.0);
    }
  detail::close3x3(maps.binary);
  detail::remove_small_components(maps.binary, min_component);

  BinaryImage& sk = maps.skeleton;
  sk = maps.binary;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int sub = 0; sub < 2; ++sub)
      for (int y = 0; y < sk.height; ++y)
        for (int x = 0; x < sk.width; ++x)
          if (sk.at(x, y) && detail::thin_deletable(sk, x, y, sub)) {
            sk.set(x, y, false);
            changed = true;
          }
  }
  // 2x2 cleanup
  changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y + 1 < sk.height; ++y)
      for (int x = 0; x + 1 < sk.width; ++x) {
        if (!(sk.at(x, y) && sk.at(x + 1, y) && sk.at(x, y + 1) &&
              sk.at(x + 1, y + 1)))
          continue;
        const int qx[4] = {x, x + 1, x, x + 1};
        const int qy[4] = {y, y, y + 1, y + 1};
        for (int i = 0; i < 4; ++i) {
          int b, a;
          detail::ring_stats(sk, qx[i], qy[i], b, a);
          if (a == 1 && b >= 2) {
            sk.set(qx[i], qy[i], false);
            changed = true;
            break;
          }
        }
      }
  }
  return maps;
}

struct EnhanceResult {
  imaging::GrayImage normalized;
  OrientationField field;
  RidgeMaps maps;
};

// normalize -> segment -> orientation -> frequency -> Gabor -> binarize/thin.
inline EnhanceResult enhance_pipeline(const imaging::GrayImage& img,
                                      const EnhanceParams& p = {}) {
  EnhanceResult res;
  res.normalized = normalize(img, p.target_mean, p.target_var);
  BlockMask mask = segment(res.normalized, p.block_size, p.segment_var_threshold);
  res.field = estimate_orientation(res.normalized, p.block_size, p.min_coherence);
  FrequencyGrid freq = estimate_frequency(res.normalized, res.field,
                                          p.freq_window, p.min_period,
                                          p.max_period);
  for (int r = 0; r < freq.rows; ++r)
    for (int c = 0; c < freq.cols; ++c)
      if (!mask.at(c, r)) freq.set(c, r, 0.0);
  ResponseImage resp =
      gabor_enhance(res.normalized, res.field, freq, mask, p.gabor_sigma_factor);
  res.maps = binarize_and_thin(resp, mask, p.block_size);
  res.maps.frequency = std::move(freq);
  return res;
}

}  // namespace rvm::enhance
