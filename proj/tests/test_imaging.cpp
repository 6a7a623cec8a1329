#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rvm/image.hpp"
#include "rvm/rng.hpp"

using namespace rvm;
using namespace rvm::imaging;

namespace {

ColorImage single_pixel(double r, double g, double b) {
  ColorImage img(1, 1);
  img.r[0] = r;
  img.g[0] = g;
  img.b[0] = b;
  return img;
}

}  // namespace

TEST_CASE("ordinary grayscale matches direct evaluation") {
  CHECK(to_gray_ordinary(single_pixel(100, 100, 100)).pix[0] ==
        Catch::Approx(100.0).margin(1e-12));
  CHECK(to_gray_ordinary(single_pixel(255, 0, 0)).pix[0] ==
        Catch::Approx(76.5).margin(1e-12));
  CHECK(to_gray_ordinary(single_pixel(0, 0, 255)).pix[0] ==
        Catch::Approx(28.05).margin(1e-12));
  CHECK(to_gray_ordinary(single_pixel(1, 2, 3)).prov.tag() == "ordinary");
}

TEST_CASE("luma grayscale fixed points and reference value") {
  GammaParams g{1.0 / 2.2};
  CHECK(to_gray_luma(single_pixel(255, 255, 255), g).pix[0] ==
        Catch::Approx(255.0).margin(1e-9));
  CHECK(to_gray_luma(single_pixel(0, 0, 0), g).pix[0] ==
        Catch::Approx(0.0).margin(1e-12));
  // equal channels reduce to the gamma map itself
  const double expected =
      static_cast<double>(oracle::gray_luma(100, 100, 100, 1.0L / 2.2L));
  CHECK(expected == Catch::Approx(166.63).margin(0.05));
  CHECK(to_gray_luma(single_pixel(100, 100, 100), g).pix[0] ==
        Catch::Approx(expected).margin(1e-9));
  CHECK(to_gray_luma(single_pixel(9, 9, 9), g).prov.tag() == "luma");
  CHECK_THROWS_AS(to_gray_luma(single_pixel(1, 1, 1), GammaParams{0.0}),
                  std::invalid_argument);
}

TEST_CASE("grayscale conversions agree with the scalar oracle on random input") {
  Rng rng(20240811);
  for (int i = 0; i < 2000; ++i) {
    const double r = rng.uniform(0.0, 255.0);
    const double g = rng.uniform(0.0, 255.0);
    const double b = rng.uniform(0.0, 255.0);
    const auto img = single_pixel(r, g, b);
    CHECK(to_gray_ordinary(img).pix[0] ==
          Catch::Approx(static_cast<double>(oracle::gray_ordinary(r, g, b)))
              .margin(1e-9));
    CHECK(to_gray_luma(img, GammaParams{1.0 / 2.2}).pix[0] ==
          Catch::Approx(
              static_cast<double>(oracle::gray_luma(r, g, b, 1.0L / 2.2L)))
              .margin(1e-9));
  }
}

TEST_CASE("grayscale conversions are monotone in each channel") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    double c[3] = {rng.uniform(0.0, 255.0), rng.uniform(0.0, 255.0),
                   rng.uniform(0.0, 255.0)};
    const int ch = rng.uniform_int(0, 2);
    double bumped[3] = {c[0], c[1], c[2]};
    bumped[ch] = std::min(255.0, bumped[ch] + rng.uniform(0.0, 50.0));
    const auto lo = single_pixel(c[0], c[1], c[2]);
    const auto hi = single_pixel(bumped[0], bumped[1], bumped[2]);
    CHECK(to_gray_ordinary(hi).pix[0] >= to_gray_ordinary(lo).pix[0]);
    CHECK(to_gray_luma(hi, {}).pix[0] >= to_gray_luma(lo, {}).pix[0]);
  }
}

TEST_CASE("invert endpoints, involution, provenance chain") {
  GrayImage img(40, 30, 0.0, {GraySource::Ordinary, false});
  Rng rng(99);
  // values on the 1/1024 grid: 255 - v is then exact in double
  for (auto& v : img.pix)
    v = static_cast<double>(rng.uniform_int(0, 255 * 1024)) / 1024.0;
  img.pix[0] = 0.0;
  img.pix[1] = 100.0;

  const GrayImage inv = invert(img);
  CHECK(inv.pix[0] == 255.0);
  CHECK(inv.pix[1] == 155.0);
  CHECK(inv.prov.tag() == "inverted-ordinary");

  const GrayImage back = invert(inv);
  CHECK(back.prov.tag() == "ordinary");
  for (size_t i = 0; i < img.size(); ++i) CHECK(back.pix[i] == img.pix[i]);

  // arbitrary reals: involutive to the last rounding step
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(0.0, 255.0);
    CHECK(255.0 - (255.0 - v) == Catch::Approx(v).margin(6e-14));
  }
}

TEST_CASE("downsample integer factor") {
  GrayImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y) = ((x + y) % 2) ? 255.0 : 0.0;
  const GrayImage one = downsample(img, 1, 1);
  REQUIRE(one.width == 1);
  REQUIRE(one.height == 1);
  CHECK(one.pix[0] == 127.5);  // exact: sum of 8-bit values over power-of-2 area

  GrayImage constant(1400, 900, 42.0);
  const GrayImage small = downsample(constant, 350, 225);
  REQUIRE(small.width == 350);
  REQUIRE(small.height == 225);
  for (double v : small.pix) CHECK(v == 42.0);
}

TEST_CASE("downsample non-integer factor keeps constants constant") {
  GrayImage img(10, 7, 13.25);
  const GrayImage out = downsample(img, 7, 5);
  REQUIRE(out.width == 7);
  REQUIRE(out.height == 5);
  for (double v : out.pix) CHECK(v == Catch::Approx(13.25).margin(1e-12));
}

TEST_CASE("downsample commutes with invert") {
  Rng rng(3);
  GrayImage img(32, 24);
  for (auto& v : img.pix) v = static_cast<double>(rng.uniform_int(0, 255));

  // power-of-two factor on 8-bit values: both routes are exact
  const GrayImage a = invert(downsample(img, 8, 6));
  const GrayImage b = downsample(invert(img), 8, 6);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a.pix[i] == b.pix[i]);

  // general factor: agreement to floating-point noise
  const GrayImage c = invert(downsample(img, 13, 9));
  const GrayImage d = downsample(invert(img), 13, 9);
  for (size_t i = 0; i < c.size(); ++i)
    CHECK(c.pix[i] == Catch::Approx(d.pix[i]).margin(1e-10));
}

TEST_CASE("downsample rejects upsampling") {
  GrayImage img(8, 8);
  CHECK_THROWS_AS(downsample(img, 16, 8), std::invalid_argument);
  CHECK_THROWS_AS(downsample(img, 8, 9), std::invalid_argument);
}
