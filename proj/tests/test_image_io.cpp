#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "rvm/image_io.hpp"
#include "rvm/rng.hpp"

using namespace rvm;
using namespace rvm::imaging;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "rvm_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

GrayImage random_gray(int w, int h, std::uint64_t seed) {
  GrayImage img(w, h);
  Rng rng(seed);
  for (auto& v : img.pix) v = static_cast<double>(rng.uniform_int(0, 255));
  return img;
}

ColorImage random_color(int w, int h, std::uint64_t seed) {
  ColorImage img(w, h);
  Rng rng(seed);
  for (size_t i = 0; i < img.size(); ++i) {
    img.r[i] = rng.uniform_int(0, 255);
    img.g[i] = rng.uniform_int(0, 255);
    img.b[i] = rng.uniform_int(0, 255);
  }
  return img;
}

}  // namespace

TEST_CASE("gray round trip through every format") {
  const auto dir = temp_dir();
  const GrayImage img = random_gray(37, 23, 11);
  for (const char* ext : {".png", ".bmp", ".pgm"}) {
    const auto path = dir / (std::string("gray") + ext);
    save_image(path, img);
    const auto loaded = load_image(path);
    REQUIRE(std::holds_alternative<GrayImage>(loaded));
    const auto& back = std::get<GrayImage>(loaded);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.prov.tag() == "external");
    for (size_t i = 0; i < img.size(); ++i) CHECK(back.pix[i] == img.pix[i]);
  }
}

TEST_CASE("color round trip through every format") {
  const auto dir = temp_dir();
  const ColorImage img = random_color(19, 31, 5);
  for (const char* ext : {".png", ".bmp", ".ppm"}) {
    const auto path = dir / (std::string("color") + ext);
    save_image(path, img);
    const auto loaded = load_image(path);
    REQUIRE(std::holds_alternative<ColorImage>(loaded));
    const auto& back = std::get<ColorImage>(loaded);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (size_t i = 0; i < img.size(); ++i) {
      CHECK(back.r[i] == img.r[i]);
      CHECK(back.g[i] == img.g[i]);
      CHECK(back.b[i] == img.b[i]);
    }
  }
}

TEST_CASE("export quantization rounds half away from zero") {
  const auto dir = temp_dir();
  GrayImage img(2, 1);
  img.pix[0] = 100.5;
  img.pix[1] = 99.4999;
  const auto path = dir / "quant.pgm";
  save_image(path, img);
  const auto back = std::get<GrayImage>(load_image(path));
  CHECK(back.pix[0] == 101.0);
  CHECK(back.pix[1] == 99.0);
}

TEST_CASE("truncated and malformed files are rejected") {
  const auto dir = temp_dir();

  const auto png_path = dir / "trunc.png";
  save_image(png_path, random_gray(64, 64, 3));
  auto bytes = io_detail::read_all(png_path);
  bytes.resize(bytes.size() / 2);
  io_detail::write_all(png_path, bytes);
  CHECK_THROWS_AS(load_image(png_path), DataError);

  const auto junk = dir / "junk.png";
  std::ofstream(junk) << "not an image at all";
  CHECK_THROWS_AS(load_image(junk), DataError);

  const auto pgm = dir / "trunc.pgm";
  std::ofstream(pgm, std::ios::binary) << "P5\n10 10\n255\nxx";
  CHECK_THROWS_AS(load_image(pgm), DataError);

  CHECK_THROWS_AS(load_image(dir / "missing.png"), DataError);
}

TEST_CASE("pgm comments and dimensions parse") {
  const auto dir = temp_dir();
  const auto path = dir / "comment.pgm";
  std::ofstream out(path, std::ios::binary);
  out << "P5\n# a comment line\n3 2\n255\n";
  const char raster[6] = {0, 1, 2, 3, 4, 5};
  out.write(raster, 6);
  out.close();
  const auto img = std::get<GrayImage>(load_image(path));
  REQUIRE(img.width == 3);
  REQUIRE(img.height == 2);
  CHECK(img.at(2, 1) == 5.0);
}
