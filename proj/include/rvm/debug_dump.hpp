#pragma once

#include "rvm/features.hpp"
#include "rvm/image_io.hpp"

namespace rvm::debug {

inline void save_orientation_csv(const std::filesystem::path& path,
                                 const enhance::OrientationField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write orientation CSV: " + path.string());
  out << "block_x,block_y,angle_rad,coherence\n";
  for (int r = 0; r < field.rows; ++r)
    for (int c = 0; c < field.cols; ++c)
      out << c << ',' << r << ',' << field.angle_at(c, r) << ','
          << field.coherence_at(c, r) << '\n';
}

inline void save_binary_image(const std::filesystem::path& path,
                              const enhance::BinaryImage& img) {
  imaging::GrayImage g(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      g.at(x, y) = img.at(x, y) ? 255.0 : 0.0;
  imaging::save_image(path, g);
}

namespace detail {

inline void put(imaging::ColorImage& img, int x, int y, double r, double g,
                double b) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  const size_t i = img.idx(x, y);
  img.r[i] = r;
  img.g[i] = g;
  img.b[i] = b;
}

}  // namespace detail

// Annotated overlay: minutiae as dots with direction ticks (endings red,
// bifurcations blue), cores as squares, deltas as triangles.
inline void save_overlay(const std::filesystem::path& path,
                         const imaging::GrayImage& background,
                         const features::Template& t) {
  imaging::ColorImage img(background.width, background.height);
  for (size_t i = 0; i < background.size(); ++i)
    img.r[i] = img.g[i] = img.b[i] = background.pix[i];

  for (const auto& m : t.minutiae) {
    const bool ending = m.kind == features::MinutiaKind::Ending;
    const double r = ending ? 255 : 0, b = ending ? 0 : 255;
    const int x = static_cast<int>(std::lround(m.x));
    const int y = static_cast<int>(std::lround(m.y));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) detail::put(img, x + dx, y + dy, r, 0, b);
    for (int k = 2; k <= 7; ++k)
      detail::put(img, x + static_cast<int>(std::lround(k * std::cos(m.theta))),
                  y + static_cast<int>(std::lround(k * std::sin(m.theta))), r,
                  0, b);
  }
  for (const auto& s : t.singularities) {
    const int x = static_cast<int>(std::lround(s.x));
    const int y = static_cast<int>(std::lround(s.y));
    if (s.kind == features::SingularityKind::Core) {
      for (int d = -4; d <= 4; ++d) {
        detail::put(img, x + d, y - 4, 255, 0, 0);
        detail::put(img, x + d, y + 4, 255, 0, 0);
        detail::put(img, x - 4, y + d, 255, 0, 0);
        detail::put(img, x + 4, y + d, 255, 0, 0);
      }
    } else {
      for (int row = 0; row <= 6; ++row)
        for (int dx = -row / 2; dx <= row / 2; ++dx)
          if (std::abs(dx) == row / 2 || row == 6)
            detail::put(img, x + dx, y - 3 + row, 255, 0, 0);
    }
  }
  imaging::save_image(path, img);
}

}  // namespace rvm::debug
