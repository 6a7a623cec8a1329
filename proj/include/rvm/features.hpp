#pragma once

#include <optional>

#include "rvm/enhance.hpp"
#include "rvm/minutia.hpp"

namespace rvm::features {

namespace detail {

inline constexpr int kRingX[8] = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr int kRingY[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

// Crossing number: half the sum of absolute differences around the 8-ring.
inline int crossing_number(const enhance::BinaryImage& sk, int x, int y) {
  int cn = 0;
  int prev = sk.at(x + kRingX[7], y + kRingY[7]) ? 1 : 0;
  for (int i = 0; i < 8; ++i) {
    const int cur = sk.at(x + kRingX[i], y + kRingY[i]) ? 1 : 0;
    cn += std::abs(cur - prev);
    prev = cur;
  }
  return cn / 2;
}

// Walk along the skeleton from (x, y), first stepping to (nx, ny), until the
// requested arc length, a junction, or a dead end. Returns the stop point.
inline std::pair<int, int> trace(const enhance::BinaryImage& sk, int x, int y,
                                 int nx, int ny, double arc_limit) {
  int px = x, py = y;
  int cx = nx, cy = ny;
  double arc = std::hypot(cx - px, cy - py);
  while (arc < arc_limit) {
    if (crossing_number(sk, cx, cy) != 2) break;  // junction or end
    int bx = 0, by = 0;
    bool found = false;
    for (int i = 0; i < 8 && !found; ++i) {
      const int qx = cx + kRingX[i], qy = cy + kRingY[i];
      if (!sk.at(qx, qy)) continue;
      if (qx == px && qy == py) continue;
      // skip ring neighbors that are also adjacent to the previous pixel
      // (diagonal shortcuts around the same step)
      if (std::abs(qx - px) <= 1 && std::abs(qy - py) <= 1) continue;
      bx = qx;
      by = qy;
      found = true;
    }
    if (!found) break;
    arc += std::hypot(bx - cx, by - cy);
    px = cx;
    py = cy;
    cx = bx;
    cy = by;
  }
  return {cx, cy};
}

// Branch starting pixels around a minutia: one per connected run of set
// neighbors in the ring.
inline std::vector<std::pair<int, int>> branch_starts(
    const enhance::BinaryImage& sk, int x, int y) {
  std::vector<std::pair<int, int>> starts;
  bool bits[8];
  for (int i = 0; i < 8; ++i)
    bits[i] = sk.at(x + kRingX[i], y + kRingY[i]);
  for (int i = 0; i < 8; ++i)
    if (bits[i] && !bits[(i + 7) % 8])
      starts.emplace_back(x + kRingX[i], y + kRingY[i]);
  return starts;
}

}  // namespace detail

// Minutiae from the skeleton by crossing number: CN=1 endings, CN=3
// bifurcations. The direction is traced along the attached ridge for a fixed
// arc; bifurcation direction bisects the two closest branches, reversed to
// point into the ridge flow.
inline std::vector<Minutia> extract_minutiae(
    const enhance::RidgeMaps& maps,
    const enhance::OrientationField* field = nullptr,
    double trace_arc = 10.0) {
  const enhance::BinaryImage& sk = maps.skeleton;
  std::vector<Minutia> out;

  auto block_quality = [&](int x, int y) {
    if (!field) return 1.0;
    const int c = std::min(x / field->block_size, field->cols - 1);
    const int r = std::min(y / field->block_size, field->rows - 1);
    return std::clamp(field->coherence_at(c, r), 0.0, 1.0);
  };

  for (int y = 0; y < sk.height; ++y)
    for (int x = 0; x < sk.width; ++x) {
      if (!sk.at(x, y)) continue;
      const int cn = detail::crossing_number(sk, x, y);
      if (cn != 1 && cn != 3) continue;
      auto starts = detail::branch_starts(sk, x, y);
      if (cn == 1) {
        if (starts.empty()) continue;  // isolated dot
        auto [tx, ty] = detail::trace(sk, x, y, starts[0].first,
                                      starts[0].second, trace_arc);
        Minutia m;
        m.x = x;
        m.y = y;
        m.theta = wrap_two_pi(std::atan2(static_cast<double>(ty - y),
                                         static_cast<double>(tx - x)));
        m.kind = MinutiaKind::Ending;
        m.quality = block_quality(x, y);
        out.push_back(m);
      } else if (starts.size() == 3) {
        double dir[3];
        for (int i = 0; i < 3; ++i) {
          auto [tx, ty] = detail::trace(sk, x, y, starts[i].first,
                                        starts[i].second, trace_arc);
          dir[i] = std::atan2(static_cast<double>(ty - y),
                              static_cast<double>(tx - x));
        }
        int bi = 0, bj = 1;
        double best = kTwoPi;
        for (int i = 0; i < 3; ++i)
          for (int j = i + 1; j < 3; ++j) {
            const double d = direction_distance(dir[i], dir[j]);
            if (d < best) {
              best = d;
              bi = i;
              bj = j;
            }
          }
        const double bx = std::cos(dir[bi]) + std::cos(dir[bj]);
        const double by = std::sin(dir[bi]) + std::sin(dir[bj]);
        Minutia m;
        m.x = x;
        m.y = y;
        m.theta = wrap_two_pi(std::atan2(by, bx) + kPi);
        m.kind = MinutiaKind::Bifurcation;
        m.quality = block_quality(x, y);
        out.push_back(m);
      }
    }
  return out;
}

struct FilterParams {
  double d_min = 6.0;   // pixels
  double border = 10.0;  // pixels from the mask boundary
};

// Removes border minutiae, opposing ending pairs closer than d_min (broken
// ridges), and ending/bifurcation pairs on a common branch shorter than d_min
// (spurs). All rules are evaluated on the input set, so filtering twice gives
// the first result exactly.
inline std::vector<Minutia> filter_spurious(const std::vector<Minutia>& input,
                                            const enhance::RidgeMaps& maps,
                                            double d_min, double border) {
  std::vector<Minutia> minutiae = input;
  std::sort(minutiae.begin(), minutiae.end(), [](const Minutia& a, const Minutia& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  std::vector<bool> removed(minutiae.size(), false);

  const auto& mask = maps.mask;
  const int bs = maps.block_size;
  auto fg_pixel = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= maps.binary.width || y >= maps.binary.height)
      return false;
    return mask.at(std::min(x / bs, mask.cols - 1),
                   std::min(y / bs, mask.rows - 1));
  };

  // (a) mask-boundary rule
  const int ib = static_cast<int>(std::ceil(border));
  for (size_t i = 0; i < minutiae.size(); ++i) {
    const int mx = static_cast<int>(std::lround(minutiae[i].x));
    const int my = static_cast<int>(std::lround(minutiae[i].y));
    bool near_edge = false;
    for (int dy = -ib; dy <= ib && !near_edge; ++dy)
      for (int dx = -ib; dx <= ib && !near_edge; ++dx) {
        if (dx * dx + dy * dy > border * border) continue;
        if (!fg_pixel(mx + dx, my + dy)) near_edge = true;
      }
    if (near_edge) removed[i] = true;
  }

  // (b) opposing ending pairs
  for (size_t i = 0; i < minutiae.size(); ++i) {
    if (minutiae[i].kind != MinutiaKind::Ending) continue;
    for (size_t j = i + 1; j < minutiae.size(); ++j) {
      if (minutiae[j].kind != MinutiaKind::Ending) continue;
      const double d = std::hypot(minutiae[i].x - minutiae[j].x,
                                  minutiae[i].y - minutiae[j].y);
      if (d >= d_min) continue;
      if (direction_distance(minutiae[i].theta, minutiae[j].theta + kPi) <
          kPi / 3) {
        removed[i] = true;
        removed[j] = true;
      }
    }
  }

  // (c) short spur: an ending whose ridge reaches a bifurcation within d_min
  for (size_t i = 0; i < minutiae.size(); ++i) {
    if (minutiae[i].kind != MinutiaKind::Ending) continue;
    const int x = static_cast<int>(std::lround(minutiae[i].x));
    const int y = static_cast<int>(std::lround(minutiae[i].y));
    if (!maps.skeleton.at(x, y)) continue;
    auto starts = detail::branch_starts(maps.skeleton, x, y);
    if (starts.empty()) continue;
    auto [tx, ty] =
        detail::trace(maps.skeleton, x, y, starts[0].first, starts[0].second,
                      d_min);
    if (detail::crossing_number(maps.skeleton, tx, ty) < 3) continue;
    if (std::hypot(tx - x, ty - y) > d_min) continue;
    for (size_t j = 0; j < minutiae.size(); ++j)
      if (minutiae[j].kind == MinutiaKind::Bifurcation &&
          std::lround(minutiae[j].x) == tx && std::lround(minutiae[j].y) == ty) {
        removed[i] = true;
        removed[j] = true;
      }
  }

  std::vector<Minutia> out;
  for (size_t i = 0; i < minutiae.size(); ++i)
    if (!removed[i]) out.push_back(minutiae[i]);
  return out;
}

// Poincare index over each interior 2x2 block loop: principal-value
// orientation differences are summed around the loop; +pi reads as a core,
// -pi as a delta. Adjacent detections merge to their centroid.
inline std::vector<Singularity> detect_singularities(
    const enhance::OrientationField& field, const enhance::BlockMask& mask) {
  if (field.cols != mask.cols || field.rows != mask.rows)
    throw std::invalid_argument("field and mask grids disagree");

  struct Hit {
    double x, y;
    SingularityKind kind;
  };
  std::vector<Hit> hits;
  for (int r = 0; r + 1 < field.rows; ++r)
    for (int c = 0; c + 1 < field.cols; ++c) {
      if (!(mask.at(c, r) && mask.at(c + 1, r) && mask.at(c, r + 1) &&
            mask.at(c + 1, r + 1)))
        continue;
      const double a0 = field.angle_at(c, r);
      const double a1 = field.angle_at(c + 1, r);
      const double a2 = field.angle_at(c + 1, r + 1);
      const double a3 = field.angle_at(c, r + 1);
      const double sum = orientation_diff(a1, a0) + orientation_diff(a2, a1) +
                         orientation_diff(a3, a2) + orientation_diff(a0, a3);
      if (std::fabs(sum - kPi) < kPi / 2)
        hits.push_back({(c + 1.0) * field.block_size,
                        (r + 1.0) * field.block_size, SingularityKind::Core});
      else if (std::fabs(sum + kPi) < kPi / 2)
        hits.push_back({(c + 1.0) * field.block_size,
                        (r + 1.0) * field.block_size, SingularityKind::Delta});
    }

  // merge same-kind detections within one block of each other
  const double merge_dist = 1.5 * field.block_size;
  std::vector<Singularity> out;
  std::vector<bool> used(hits.size(), false);
  for (size_t i = 0; i < hits.size(); ++i) {
    if (used[i]) continue;
    double sx = hits[i].x, sy = hits[i].y;
    int n = 1;
    used[i] = true;
    bool grew = true;
    while (grew) {
      grew = false;
      for (size_t j = 0; j < hits.size(); ++j) {
        if (used[j] || hits[j].kind != hits[i].kind) continue;
        if (std::hypot(hits[j].x - sx / n, hits[j].y - sy / n) <= merge_dist) {
          sx += hits[j].x;
          sy += hits[j].y;
          ++n;
          used[j] = true;
          grew = true;
        }
      }
    }
    out.push_back({sx / n, sy / n, hits[i].kind});
  }
  return out;
}

// Assembles a validated template. Exact duplicates collapse to one; a
// position/kind duplicate with different theta keeps the higher quality and
// notes a warning.
inline Template build_template(std::vector<Minutia> minutiae,
                               std::vector<Singularity> singularities,
                               int width, int height, Channel channel,
                               std::string source_id,
                               std::vector<std::string>* warnings = nullptr) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("template dimensions must be positive");
  for (const auto& m : minutiae)
    if (m.x < 0 || m.x >= width || m.y < 0 || m.y >= height)
      throw std::invalid_argument("minutia outside the image");

  std::sort(minutiae.begin(), minutiae.end(), [](const Minutia& a, const Minutia& b) {
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });

  Template t;
  t.width = width;
  t.height = height;
  t.channel = channel;
  t.source_id = std::move(source_id);
  t.singularities = std::move(singularities);
  for (const auto& m : minutiae) {
    if (!t.minutiae.empty()) {
      Minutia& last = t.minutiae.back();
      if (last.x == m.x && last.y == m.y && last.kind == m.kind) {
        if (last.theta != m.theta) {
          if (warnings)
            warnings->push_back("duplicate minutia with conflicting direction");
          if (m.quality > last.quality) last = m;
        }
        continue;
      }
    }
    t.minutiae.push_back(m);
  }
  return t;
}

}  // namespace rvm::features
