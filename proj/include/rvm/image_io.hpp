#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <variant>
#include <vector>

#include "rvm/image.hpp"

namespace rvm::imaging {

using LoadedImage = std::variant<ColorImage, GrayImage>;

namespace io_detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw DataError("cannot open file: " + path.string());
  return f;
}

// ---- PNG ----------------------------------------------------------------

// All C++ objects are constructed before setjmp so the error longjmp never
// crosses a frame that still needs unwinding.
inline bool png_read_raw(std::FILE* f, std::vector<std::uint8_t>& data, int& w,
                         int& h, int& channels) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);

  png_set_expand(png);       // palette -> rgb, low-bit gray -> 8-bit, tRNS
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  if (w <= 0 || h <= 0 || (channels != 1 && channels != 3)) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  data.assign(static_cast<size_t>(w) * h * channels, 0);
  rows.resize(h);
  for (int y = 0; y < h; ++y)
    rows[y] = data.data() + static_cast<size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline bool png_write_raw(std::FILE* f, const std::vector<std::uint8_t>& data,
                          int w, int h, int channels) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(data.data()) +
              static_cast<size_t>(y) * w * channels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

// ---- BMP (uncompressed, 8-bit palette gray or 24-bit BGR) ---------------

inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}
inline std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

inline void write_all(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

inline LoadedImage bmp_decode(const std::vector<std::uint8_t>& b,
                              const std::string& name) {
  if (b.size() < 54 || b[0] != 'B' || b[1] != 'M')
    throw DataError("not a BMP file: " + name);
  const std::uint32_t data_off = get_u32(&b[10]);
  const std::uint32_t hdr_size = get_u32(&b[14]);
  if (hdr_size < 40) throw DataError("unsupported BMP header: " + name);
  const std::int32_t w = static_cast<std::int32_t>(get_u32(&b[18]));
  std::int32_t h = static_cast<std::int32_t>(get_u32(&b[22]));
  const bool top_down = h < 0;
  if (top_down) h = -h;
  const std::uint16_t bpp = get_u16(&b[28]);
  const std::uint32_t compression = get_u32(&b[30]);
  if (w <= 0 || h <= 0) throw DataError("zero-sized BMP: " + name);
  if (compression != 0)
    throw DataError("compressed BMP is not supported: " + name);
  if (bpp != 8 && bpp != 24)
    throw DataError("unsupported BMP bit depth: " + name);

  const size_t row_bytes = (static_cast<size_t>(w) * bpp / 8 + 3) & ~size_t{3};
  if (b.size() < data_off + row_bytes * h)
    throw DataError("truncated BMP file: " + name);

  auto src_row = [&](int y) {
    const int ry = top_down ? y : h - 1 - y;
    return b.data() + data_off + row_bytes * ry;
  };

  if (bpp == 8) {
    const std::uint8_t* palette = b.data() + 14 + hdr_size;
    const std::uint32_t pal_entries =
        get_u32(&b[46]) ? get_u32(&b[46]) : 256u;
    if (14 + hdr_size + 4 * pal_entries > b.size())
      throw DataError("truncated BMP palette: " + name);
    bool gray_palette = true;
    for (std::uint32_t i = 0; i < pal_entries && gray_palette; ++i)
      gray_palette = palette[4 * i] == palette[4 * i + 1] &&
                     palette[4 * i + 1] == palette[4 * i + 2];
    if (gray_palette) {
      GrayImage img(w, h, 0.0, {GraySource::External, false});
      for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = src_row(y);
        for (int x = 0; x < w; ++x) img.at(x, y) = palette[4 * row[x]];
      }
      return img;
    }
    ColorImage img(w, h);
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* row = src_row(y);
      for (int x = 0; x < w; ++x) {
        const std::uint8_t* e = palette + 4 * row[x];
        const size_t i = img.idx(x, y);
        img.b[i] = e[0];
        img.g[i] = e[1];
        img.r[i] = e[2];
      }
    }
    return img;
  }

  ColorImage img(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = src_row(y);
    for (int x = 0; x < w; ++x) {
      const size_t i = img.idx(x, y);
      img.b[i] = row[3 * x];
      img.g[i] = row[3 * x + 1];
      img.r[i] = row[3 * x + 2];
    }
  }
  return img;
}

inline std::vector<std::uint8_t> bmp_encode_gray(const GrayImage& img) {
  const size_t row_bytes = (static_cast<size_t>(img.width) + 3) & ~size_t{3};
  const std::uint32_t data_off = 14 + 40 + 256 * 4;
  std::vector<std::uint8_t> b;
  b.reserve(data_off + row_bytes * img.height);
  b.push_back('B');
  b.push_back('M');
  put_u32(b, static_cast<std::uint32_t>(data_off + row_bytes * img.height));
  put_u32(b, 0);
  put_u32(b, data_off);
  put_u32(b, 40);
  put_u32(b, static_cast<std::uint32_t>(img.width));
  put_u32(b, static_cast<std::uint32_t>(img.height));
  put_u16(b, 1);
  put_u16(b, 8);
  put_u32(b, 0);
  put_u32(b, static_cast<std::uint32_t>(row_bytes * img.height));
  put_u32(b, 2835);
  put_u32(b, 2835);
  put_u32(b, 256);
  put_u32(b, 0);
  for (int i = 0; i < 256; ++i) {
    b.push_back(static_cast<std::uint8_t>(i));
    b.push_back(static_cast<std::uint8_t>(i));
    b.push_back(static_cast<std::uint8_t>(i));
    b.push_back(0);
  }
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x) b.push_back(quantize_u8(img.at(x, y)));
    for (size_t p = img.width; p < row_bytes; ++p) b.push_back(0);
  }
  return b;
}

inline std::vector<std::uint8_t> bmp_encode_color(const ColorImage& img) {
  const size_t row_bytes = (static_cast<size_t>(img.width) * 3 + 3) & ~size_t{3};
  const std::uint32_t data_off = 14 + 40;
  std::vector<std::uint8_t> b;
  b.reserve(data_off + row_bytes * img.height);
  b.push_back('B');
  b.push_back('M');
  put_u32(b, static_cast<std::uint32_t>(data_off + row_bytes * img.height));
  put_u32(b, 0);
  put_u32(b, data_off);
  put_u32(b, 40);
  put_u32(b, static_cast<std::uint32_t>(img.width));
  put_u32(b, static_cast<std::uint32_t>(img.height));
  put_u16(b, 1);
  put_u16(b, 24);
  put_u32(b, 0);
  put_u32(b, static_cast<std::uint32_t>(row_bytes * img.height));
  put_u32(b, 2835);
  put_u32(b, 2835);
  put_u32(b, 0);
  put_u32(b, 0);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x) {
      const size_t i = img.idx(x, y);
      b.push_back(quantize_u8(img.b[i]));
      b.push_back(quantize_u8(img.g[i]));
      b.push_back(quantize_u8(img.r[i]));
    }
    for (size_t p = static_cast<size_t>(img.width) * 3; p < row_bytes; ++p)
      b.push_back(0);
  }
  return b;
}

// ---- PNM (P5 gray / P6 color, binary, maxval 255) ------------------------

inline size_t pnm_header(const std::vector<std::uint8_t>& b,
                         const std::string& name, char expect_kind, int& w,
                         int& h) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != expect_kind)
    throw DataError("not a binary PNM file: " + name);
  size_t pos = 2;
  int fields[3];
  for (int k = 0; k < 3; ++k) {
    while (pos < b.size() &&
           (std::isspace(b[pos]) || b[pos] == '#')) {
      if (b[pos] == '#')
        while (pos < b.size() && b[pos] != '\n') ++pos;
      else
        ++pos;
    }
    int v = 0;
    bool any = false;
    while (pos < b.size() && std::isdigit(b[pos])) {
      v = v * 10 + (b[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) throw DataError("malformed PNM header: " + name);
    fields[k] = v;
  }
  if (pos >= b.size() || !std::isspace(b[pos]))
    throw DataError("malformed PNM header: " + name);
  ++pos;  // single whitespace before raster
  w = fields[0];
  h = fields[1];
  if (w <= 0 || h <= 0) throw DataError("zero-sized PNM: " + name);
  if (fields[2] != 255)
    throw DataError("PNM maxval must be 255: " + name);
  return pos;
}

}  // namespace io_detail

// Loads PNG/BMP/PGM/PPM, dispatching on magic bytes. 3-channel files yield a
// ColorImage, 1-channel files a GrayImage with provenance "external".
inline LoadedImage load_image(const std::filesystem::path& path) {
  namespace d = io_detail;
  const auto bytes = d::read_all(path);
  const std::string name = path.string();
  if (bytes.size() < 8) throw DataError("truncated or empty file: " + name);

  static const std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a,
                                          0x1a, 0x0a};
  if (std::memcmp(bytes.data(), png_sig, 8) == 0) {
    auto f = d::open_file(path, "rb");
    std::vector<std::uint8_t> data;
    int w = 0, h = 0, channels = 0;
    if (!d::png_read_raw(f.get(), data, w, h, channels))
      throw DataError("unreadable or unsupported PNG: " + name);
    if (channels == 1) {
      GrayImage img(w, h, 0.0, {GraySource::External, false});
      for (size_t i = 0; i < img.size(); ++i) img.pix[i] = data[i];
      return img;
    }
    ColorImage img(w, h);
    for (size_t i = 0; i < img.size(); ++i) {
      img.r[i] = data[3 * i];
      img.g[i] = data[3 * i + 1];
      img.b[i] = data[3 * i + 2];
    }
    return img;
  }

  if (bytes[0] == 'B' && bytes[1] == 'M') return d::bmp_decode(bytes, name);

  if (bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    int w = 0, h = 0;
    const bool gray = bytes[1] == '5';
    const size_t off =
        d::pnm_header(bytes, name, gray ? '5' : '6', w, h);
    const size_t need = static_cast<size_t>(w) * h * (gray ? 1 : 3);
    if (bytes.size() < off + need)
      throw DataError("truncated PNM file: " + name);
    if (gray) {
      GrayImage img(w, h, 0.0, {GraySource::External, false});
      for (size_t i = 0; i < img.size(); ++i) img.pix[i] = bytes[off + i];
      return img;
    }
    ColorImage img(w, h);
    for (size_t i = 0; i < img.size(); ++i) {
      img.r[i] = bytes[off + 3 * i];
      img.g[i] = bytes[off + 3 * i + 1];
      img.b[i] = bytes[off + 3 * i + 2];
    }
    return img;
  }

  throw DataError("unsupported image format: " + name);
}

// Saves by extension: .png, .bmp, .pgm. Quantizes to 8 bits on the way out.
inline void save_image(const std::filesystem::path& path, const GrayImage& img) {
  namespace d = io_detail;
  imaging::detail::require_valid(img);
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == ".png") {
    std::vector<std::uint8_t> data(img.size());
    for (size_t i = 0; i < img.size(); ++i) data[i] = quantize_u8(img.pix[i]);
    auto f = d::open_file(path, "wb");
    if (!d::png_write_raw(f.get(), data, img.width, img.height, 1))
      throw DataError("PNG write failed: " + path.string());
  } else if (ext == ".bmp") {
    d::write_all(path, d::bmp_encode_gray(img));
  } else if (ext == ".pgm") {
    std::vector<std::uint8_t> b;
    std::string hdr = "P5\n" + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n255\n";
    b.assign(hdr.begin(), hdr.end());
    for (double v : img.pix) b.push_back(quantize_u8(v));
    d::write_all(path, b);
  } else {
    throw DataError("unsupported output extension: " + path.string());
  }
}

// Saves by extension: .png, .bmp, .ppm.
inline void save_image(const std::filesystem::path& path, const ColorImage& img) {
  namespace d = io_detail;
  imaging::detail::require_valid(img);
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == ".png") {
    std::vector<std::uint8_t> data(img.size() * 3);
    for (size_t i = 0; i < img.size(); ++i) {
      data[3 * i] = quantize_u8(img.r[i]);
      data[3 * i + 1] = quantize_u8(img.g[i]);
      data[3 * i + 2] = quantize_u8(img.b[i]);
    }
    auto f = d::open_file(path, "wb");
    if (!d::png_write_raw(f.get(), data, img.width, img.height, 3))
      throw DataError("PNG write failed: " + path.string());
  } else if (ext == ".bmp") {
    d::write_all(path, d::bmp_encode_color(img));
  } else if (ext == ".ppm") {
    std::vector<std::uint8_t> b;
    std::string hdr = "P6\n" + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n255\n";
    b.assign(hdr.begin(), hdr.end());
    for (size_t i = 0; i < img.size(); ++i) {
      b.push_back(quantize_u8(img.r[i]));
      b.push_back(quantize_u8(img.g[i]));
      b.push_back(quantize_u8(img.b[i]));
    }
    d::write_all(path, b);
  } else {
    throw DataError("unsupported output extension: " + path.string());
  }
}

}  // namespace rvm::imaging
