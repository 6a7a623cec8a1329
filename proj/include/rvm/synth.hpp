#pragma once

#include <complex>
#include <functional>

#include "rvm/features.hpp"
#include "rvm/image.hpp"
#include "rvm/minutia.hpp"
#include "rvm/rng.hpp"

namespace rvm::synth {

// Synthetic fingerprints as a cosine of a scalar phase field. Ridges are the
// level sets of the phase; minutiae are phase dislocations (a +/-1 winding
// spiral added to the phase); singular points come from half-index phase
// families (parabolic for cores, three-fold for deltas).

enum class PatternKind { Uniform, Arch, Core, Delta, Whorl };

struct GroundTruth {
  std::vector<features::Minutia> minutiae;
  std::vector<features::Singularity> singularities;
  std::function<double(double, double)> orientation;  // ridge angle, [0, pi)
  double period = 8.0;
};

struct HeightMap {
  int width = 0;
  int height = 0;
  std::vector<double> h;  // values in [-1, 1]

  HeightMap() = default;
  HeightMap(int w, int hh) : width(w), height(hh),
                             h(static_cast<size_t>(w) * hh, 0.0) {}
  double& at(int x, int y) { return h[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return h[static_cast<size_t>(y) * width + x]; }
};

struct RidgePattern {
  HeightMap height_map;
  GroundTruth truth;
};

struct IlluminationParams {
  double azimuth = 0.8;          // radians, in-plane light direction
  double elevation = kPi / 4.0;  // radians, (0, pi/2]
  double ambient = 0.25;         // [0, 1]
  double ridge_height = 2.0;     // profile amplitude in pixels
};

namespace detail {

// Base phase in cycles, plus its gradient (cycles per pixel).
struct PhaseField {
  std::function<double(double, double)> value;
  std::function<std::pair<double, double>(double, double)> gradient;
};

inline PhaseField base_phase(PatternKind kind, double period, int w, int h,
                             double theta0) {
  const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  switch (kind) {
    case PatternKind::Uniform: {
      const double nx = std::cos(theta0 + kPi / 2);
      const double ny = std::sin(theta0 + kPi / 2);
      return {[=](double x, double y) {
                return ((x - cx) * nx + (y - cy) * ny) / period;
              },
              [=](double, double) {
                return std::make_pair(nx / period, ny / period);
              }};
    }
    case PatternKind::Arch: {
      const double amp = h / 5.0;
      const double sig = w / 6.0;
      return {[=](double x, double y) {
                const double dx = x - cx;
                return ((y - cy) - amp * std::exp(-dx * dx / (2 * sig * sig))) /
                       period;
              },
              [=](double x, double) {
                const double dx = x - cx;
                const double gx =
                    amp * dx / (sig * sig) * std::exp(-dx * dx / (2 * sig * sig));
                return std::make_pair(gx / period, 1.0 / period);
              }};
    }
    case PatternKind::Core: {
      // Confocal parabolas: |Im sqrt(z)|, u-shaped around the +x ray.
      // The local period grows as sqrt(r/r0).
      const double r0 = 0.25 * std::min(w, h);
      const double c = 2.0 * std::sqrt(r0) / period;
      auto g = [=](double x, double y) {
        return std::complex<double>(x - cx, y - cy);
      };
      return {[=](double x, double y) {
                return c * std::fabs(std::sqrt(g(x, y)).imag());
              },
              [=](double x, double y) {
                auto z = g(x, y);
                if (std::abs(z) < 1e-9) return std::make_pair(0.0, 0.0);
                auto root = std::sqrt(z);
                auto deriv = 0.5 / root;  // d sqrt(z) / dz
                double s = root.imag() >= 0 ? 1.0 : -1.0;
                // grad Im(g) = (Im g', Re g') for analytic g
                return std::make_pair(s * c * deriv.imag(), s * c * deriv.real());
              }};
    }
    case PatternKind::Delta: {
      // Three-fold family: |Im z^(3/2)|, Y-shaped crest rays.
      // The local period shrinks as sqrt(r0/r).
      const double r0 = 0.25 * std::min(w, h);
      const double c = 2.0 / (3.0 * period * std::sqrt(r0));
      auto g = [=](double x, double y) {
        return std::complex<double>(x - cx, y - cy);
      };
      return {[=](double x, double y) {
                auto z = g(x, y);
                return c * std::fabs(std::pow(z, 1.5).imag());
              },
              [=](double x, double y) {
                auto z = g(x, y);
                if (std::abs(z) < 1e-9) return std::make_pair(0.0, 0.0);
                auto val = std::pow(z, 1.5);
                auto deriv = 1.5 * std::sqrt(z);
                double s = val.imag() >= 0 ? 1.0 : -1.0;
                return std::make_pair(s * c * deriv.imag(), s * c * deriv.real());
              }};
    }
    case PatternKind::Whorl: {
      return {[=](double x, double y) {
                return std::hypot(x - cx, y - cy) / period;
              },
              [=](double x, double y) {
                const double dx = x - cx, dy = y - cy;
                const double r = std::hypot(dx, dy);
                if (r < 1e-9) return std::make_pair(0.0, 0.0);
                return std::make_pair(dx / (r * period), dy / (r * period));
              }};
    }
  }
  throw std::invalid_argument("unknown pattern kind");
}

struct Spiral {
  double x, y;
  double sign;  // +1 or -1 winding
};

inline double spiral_phase(const Spiral& s, double x, double y) {
  return s.sign * std::atan2(y - s.y, x - s.x) / kTwoPi;
}

inline std::pair<double, double> spiral_gradient(const Spiral& s, double x,
                                                 double y) {
  const double dx = x - s.x, dy = y - s.y;
  const double r2 = dx * dx + dy * dy;
  if (r2 < 1e-12) return {0.0, 0.0};
  return {s.sign * -dy / (kTwoPi * r2), s.sign * dx / (kTwoPi * r2)};
}

}  // namespace detail

namespace detail {

// The realized minutiae of a height map: the toolkit reads bright image lines
// (contact renders map crests to dark), so the reference skeleton is the
// thinned {h < 0} set. A dislocation core carries a line ending and the
// complementary merge at the same spot; which one the skeleton keeps is a
// pixel-scale outcome, so ground truth records the realized kind rather than
// an intended one.
inline std::vector<features::Minutia> realized_minutiae(const HeightMap& hm) {
  enhance::ResponseImage resp(hm.width, hm.height);
  for (size_t i = 0; i < hm.h.size(); ++i) resp.v[i] = -hm.h[i];
  enhance::BlockMask full((hm.width + 15) / 16, (hm.height + 15) / 16);
  for (auto& v : full.fg) v = 1;
  const auto maps = enhance::binarize_and_thin(resp, full, 16);
  return features::extract_minutiae(maps);
}

}  // namespace detail

// Generates a seeded ridge pattern with `minutia_count` injected phase
// dislocations. Each dislocation is snapped to the nearest crest or trough of
// the surrounding phase; its ground-truth position, kind and direction are
// then read back from the clean pattern's own skeleton.
inline RidgePattern generate_ridge_pattern(PatternKind kind, double period,
                                           int width, int height,
                                           std::uint64_t seed,
                                           int minutia_count = 12) {
  if (!(period >= 6.0 && period <= 12.0))
    throw std::invalid_argument("period must lie in [6, 12] pixels");
  if (width < 128 || height < 128)
    throw std::invalid_argument("dims must be at least 128x128");
  if (minutia_count < 0) throw std::invalid_argument("negative minutia count");

  Rng rng(seed);
  const double theta0 = rng.uniform(0.0, kPi);
  auto base = detail::base_phase(kind, period, width, height, theta0);
  const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);

  // Seeded dislocation sites, kept away from borders, each other, and the
  // singular center of curved patterns.
  const double margin = std::max(0.18 * std::min(width, height), 3.0 * period);
  const double min_sep = 3.0 * period;
  const bool has_center_singularity = kind == PatternKind::Core ||
                                      kind == PatternKind::Delta ||
                                      kind == PatternKind::Whorl;
  std::vector<detail::Spiral> spirals;
  int attempts = 0;
  while (static_cast<int>(spirals.size()) < minutia_count &&
         attempts < 400 * std::max(1, minutia_count)) {
    ++attempts;
    const double x = rng.uniform(margin, width - 1 - margin);
    const double y = rng.uniform(margin, height - 1 - margin);
    if (has_center_singularity && std::hypot(x - cx, y - cy) < 4.0 * period)
      continue;
    bool ok = true;
    for (const auto& s : spirals)
      if (std::hypot(x - s.x, y - s.y) < min_sep) ok = false;
    if (!ok) continue;
    const double sign = spirals.size() % 2 == 0 ? 1.0 : -1.0;
    spirals.push_back({x, y, sign});
  }

  auto background = [&](double x, double y, int skip) {
    double p = base.value(x, y);
    for (int k = 0; k < static_cast<int>(spirals.size()); ++k)
      if (k != skip) p += detail::spiral_phase(spirals[k], x, y);
    return p;
  };
  auto background_grad = [&](double x, double y, int skip) {
    auto [gx, gy] = base.gradient(x, y);
    for (int k = 0; k < static_cast<int>(spirals.size()); ++k)
      if (k != skip) {
        auto [sx, sy] = detail::spiral_gradient(spirals[k], x, y);
        gx += sx;
        gy += sy;
      }
    return std::make_pair(gx, gy);
  };

  // Snap each site to the nearest half-cycle (crest or trough) of its
  // background phase so cores sit on band centers. A few passes, since sites
  // interact through the spirals.
  for (int pass = 0; pass < 3; ++pass) {
    for (int j = 0; j < static_cast<int>(spirals.size()); ++j) {
      auto& s = spirals[j];
      const double beta = background(s.x, s.y, j);
      const double delta = beta - std::round(beta * 2.0) / 2.0;
      auto [gx, gy] = background_grad(s.x, s.y, j);
      const double g2 = gx * gx + gy * gy;
      if (g2 < 1e-12) continue;
      s.x -= delta * gx / g2;
      s.y -= delta * gy / g2;
      s.x = std::clamp(s.x, margin, width - 1 - margin);
      s.y = std::clamp(s.y, margin, height - 1 - margin);
    }
  }

  RidgePattern out;
  out.height_map = HeightMap(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double p = base.value(x, y);
      for (const auto& s : spirals) p += detail::spiral_phase(s, x, y);
      out.height_map.at(x, y) = std::cos(kTwoPi * p);
    }

  GroundTruth& truth = out.truth;
  truth.period = period;
  auto grad_to_orientation = [](double gx, double gy) {
    return wrap_orientation(std::atan2(gx, -gy));
  };
  truth.orientation = [base, grad_to_orientation](double x, double y) {
    auto [gx, gy] = base.gradient(x, y);
    return grad_to_orientation(gx, gy);
  };

  const auto realized = detail::realized_minutiae(out.height_map);
  for (const auto& s : spirals) {
    const features::Minutia* best = nullptr;
    double best_d = 1.5 * period;  // a core always resolves within ~a period
    for (const auto& m : realized) {
      const double d = std::hypot(m.x - s.x, m.y - s.y);
      if (d < best_d) {
        best_d = d;
        best = &m;
      }
    }
    if (best) truth.minutiae.push_back(*best);
  }

  if (kind == PatternKind::Core || kind == PatternKind::Whorl)
    truth.singularities.push_back({cx, cy, features::SingularityKind::Core});
  else if (kind == PatternKind::Delta)
    truth.singularities.push_back({cx, cy, features::SingularityKind::Delta});
  return out;
}

// Contact-style (FTIR) rendering: crests dark, valleys bright.
inline imaging::GrayImage render_contact(const HeightMap& hm) {
  if (hm.width <= 0 || hm.height <= 0)
    throw std::invalid_argument("empty height map");
  imaging::GrayImage img(hm.width, hm.height, 0.0,
                         {imaging::GraySource::External, false});
  for (size_t i = 0; i < hm.h.size(); ++i)
    img.pix[i] = clamp255(127.5 * (1.0 - hm.h[i]));
  return img;
}

// Contactless rendering: Lambertian shading of the ridge profile. Under
// oblique light the lit flank of each ridge is bright, so the bright line
// tracks the flank rather than the valley.
inline imaging::GrayImage render_contactless(const HeightMap& hm,
                                             const IlluminationParams& light) {
  if (hm.width <= 0 || hm.height <= 0)
    throw std::invalid_argument("empty height map");
  if (!(light.elevation > 0.0 && light.elevation <= kPi / 2))
    throw std::invalid_argument("elevation must lie in (0, pi/2]");
  if (!(light.ambient >= 0.0 && light.ambient <= 1.0))
    throw std::invalid_argument("ambient must lie in [0, 1]");

  const double lx = std::cos(light.elevation) * std::cos(light.azimuth);
  const double ly = std::cos(light.elevation) * std::sin(light.azimuth);
  const double lz = std::sin(light.elevation);

  imaging::GrayImage img(hm.width, hm.height, 0.0,
                         {imaging::GraySource::External, false});
  auto zval = [&](int x, int y) {
    x = std::clamp(x, 0, hm.width - 1);
    y = std::clamp(y, 0, hm.height - 1);
    return light.ridge_height * hm.at(x, y);
  };
  for (int y = 0; y < hm.height; ++y)
    for (int x = 0; x < hm.width; ++x) {
      const double zx = 0.5 * (zval(x + 1, y) - zval(x - 1, y));
      const double zy = 0.5 * (zval(x, y + 1) - zval(x, y - 1));
      const double inv_norm = 1.0 / std::sqrt(zx * zx + zy * zy + 1.0);
      const double ndotl = (-zx * lx - zy * ly + lz) * inv_norm;
      const double shade =
          light.ambient + (1.0 - light.ambient) * std::max(0.0, ndotl);
      img.at(x, y) = clamp255(255.0 * shade);
    }
  return img;
}

// The rigid map applied by perturb_impression:
// p' = R(rot) * (p - center) + center + (dx, dy).
struct RigidTransform {
  double dx = 0.0;
  double dy = 0.0;
  double rot = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  std::pair<double, double> apply(double x, double y) const {
    const double c = std::cos(rot), s = std::sin(rot);
    const double rx = x - cx, ry = y - cy;
    return {cx + c * rx - s * ry + dx, cy + s * rx + c * ry + dy};
  }
};

// Seeded rigid perturbation (bilinear resampling) plus additive Gaussian
// noise, clamped to [0, 255]. All-zero parameters reproduce the input bit
// for bit.
inline imaging::GrayImage perturb_impression(const imaging::GrayImage& img,
                                             std::uint64_t seed,
                                             double max_shift, double max_rot,
                                             double noise_sigma,
                                             RigidTransform* applied = nullptr) {
  imaging::detail::require_valid(img);
  if (max_shift < 0 || max_rot < 0 || noise_sigma < 0)
    throw std::invalid_argument("perturbation magnitudes must be >= 0");

  Rng rng(seed);
  const double dx = rng.uniform(-max_shift, max_shift);
  const double dy = rng.uniform(-max_shift, max_shift);
  const double rot = rng.uniform(-max_rot, max_rot);
  const double cx = 0.5 * (img.width - 1), cy = 0.5 * (img.height - 1);
  if (applied) *applied = {dx, dy, rot, cx, cy};

  imaging::GrayImage out = img;
  if (dx != 0.0 || dy != 0.0 || rot != 0.0) {
    const double c = std::cos(-rot), s = std::sin(-rot);
    auto sample = [&](double x, double y) {
      x = std::clamp(x, 0.0, img.width - 1.0);
      y = std::clamp(y, 0.0, img.height - 1.0);
      const int x0 = std::min(static_cast<int>(x), img.width - 2);
      const int y0 = std::min(static_cast<int>(y), img.height - 2);
      const double fx = x - x0, fy = y - y0;
      return (1 - fx) * (1 - fy) * img.at(x0, y0) +
             fx * (1 - fy) * img.at(x0 + 1, y0) +
             (1 - fx) * fy * img.at(x0, y0 + 1) +
             fx * fy * img.at(x0 + 1, y0 + 1);
    };
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const double rx = x - cx - dx, ry = y - cy - dy;
        out.at(x, y) = sample(cx + c * rx - s * ry, cy + s * rx + c * ry);
      }
  }
  if (noise_sigma > 0.0)
    for (double& v : out.pix) v = clamp255(v + rng.normal(0.0, noise_sigma));
  return out;
}

}  // namespace rvm::synth
