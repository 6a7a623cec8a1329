#include <catch_amalgamated.hpp>

#include "rvm/features.hpp"
#include "rvm/synth.hpp"

using namespace rvm;
using namespace rvm::synth;

namespace {

// vertical bands, crest at the center column
HeightMap vertical_bands(int w, int h, double period) {
  HeightMap hm(w, h);
  const double cx = 0.5 * (w - 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      hm.at(x, y) = std::cos(kTwoPi * (x - cx) / period);
  return hm;
}

// circular cross-correlation lag (in pixels, within +/- period/2) between a
// contactless render and the contact render, averaged over interior rows
double bright_line_lag(const imaging::GrayImage& shaded,
                       const imaging::GrayImage& contact, double period) {
  const int x0 = 32, x1 = shaded.width - 32;
  const int half = static_cast<int>(period / 2);
  double best = 0.0, best_corr = -1e300;
  for (int lag = -half; lag <= half; ++lag) {
    double corr = 0.0;
    for (int y = 32; y < shaded.height - 32; ++y)
      for (int x = x0; x < x1; ++x)
        corr += (shaded.at(x, y) - 128.0) * (255.0 - contact.at(x + lag, y) - 128.0);
    if (corr > best_corr) {
      best_corr = corr;
      best = lag;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("pattern generation is deterministic and validates input") {
  const auto a = generate_ridge_pattern(PatternKind::Arch, 8.0, 160, 160, 7, 6);
  const auto b = generate_ridge_pattern(PatternKind::Arch, 8.0, 160, 160, 7, 6);
  CHECK(a.height_map.h == b.height_map.h);
  REQUIRE(a.truth.minutiae.size() == b.truth.minutiae.size());
  for (size_t i = 0; i < a.truth.minutiae.size(); ++i) {
    CHECK(a.truth.minutiae[i].x == b.truth.minutiae[i].x);
    CHECK(a.truth.minutiae[i].kind == b.truth.minutiae[i].kind);
  }
  CHECK_THROWS_AS(generate_ridge_pattern(PatternKind::Arch, 5.0, 160, 160, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_ridge_pattern(PatternKind::Arch, 8.0, 64, 160, 1),
                  std::invalid_argument);
}

TEST_CASE("ground truth structure per pattern kind") {
  const auto uniform =
      generate_ridge_pattern(PatternKind::Uniform, 8.0, 160, 160, 3, 0);
  CHECK(uniform.truth.minutiae.empty());
  CHECK(uniform.truth.singularities.empty());

  const auto core = generate_ridge_pattern(PatternKind::Core, 8.0, 192, 192, 3, 0);
  REQUIRE(core.truth.singularities.size() == 1);
  CHECK(core.truth.singularities[0].kind == features::SingularityKind::Core);
  CHECK(core.truth.singularities[0].index() == 0.5);

  const auto delta = generate_ridge_pattern(PatternKind::Delta, 8.0, 192, 192, 3, 0);
  REQUIRE(delta.truth.singularities.size() == 1);
  CHECK(delta.truth.singularities[0].kind == features::SingularityKind::Delta);
  CHECK(delta.truth.singularities[0].index() == -0.5);

  const auto whorl = generate_ridge_pattern(PatternKind::Whorl, 8.0, 192, 192, 11, 8);
  for (const auto& m : whorl.truth.minutiae) {
    CHECK(m.x >= 0);
    CHECK(m.x < 192);
    CHECK(m.y >= 0);
    CHECK(m.y < 192);
  }
  CHECK(whorl.truth.minutiae.size() >= 4);  // most injections materialize
}

TEST_CASE("height map values stay in [-1, 1] and follow the period") {
  const auto pat = generate_ridge_pattern(PatternKind::Uniform, 8.0, 160, 160, 5, 4);
  for (double v : pat.height_map.h) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  CHECK(pat.truth.period == 8.0);
  const double angle = pat.truth.orientation(80.0, 80.0);
  CHECK(angle >= 0.0);
  CHECK(angle < kPi);
}

TEST_CASE("contact rendering maps height to inverse intensity") {
  HeightMap hm(2, 2);
  hm.at(0, 0) = 1.0;    // crest
  hm.at(1, 0) = -1.0;   // valley floor
  hm.at(0, 1) = 0.0;    // flank
  hm.at(1, 1) = 0.5;
  const auto img = render_contact(hm);
  CHECK(img.at(0, 0) == 0.0);
  CHECK(img.at(1, 0) == 255.0);
  CHECK(img.at(0, 1) == 127.5);
  CHECK(img.at(1, 1) == Catch::Approx(63.75));
}

TEST_CASE("contactless rendering: overhead light is symmetric about the crest") {
  const auto hm = vertical_bands(161, 64, 8.0);
  const auto img = render_contactless(hm, {0.3, kPi / 2, 0.2, 2.0});
  const int cx = 80;  // crest column
  for (int d = 1; d < 40; ++d)
    CHECK(img.at(cx + d, 32) == Catch::Approx(img.at(cx - d, 32)).margin(1e-9));
}

TEST_CASE("contactless rendering: opposite azimuths mirror the slice") {
  const auto hm = vertical_bands(161, 64, 8.0);
  const auto east = render_contactless(hm, {0.0, kPi / 5, 0.2, 2.0});
  const auto west = render_contactless(hm, {kPi, kPi / 5, 0.2, 2.0});
  const int cx = 80;
  for (int d = 0; d < 40; ++d)
    CHECK(east.at(cx + d, 32) == Catch::Approx(west.at(cx - d, 32)).margin(1e-9));
  // the slice is genuinely asymmetric under oblique light
  double asym = 0.0;
  for (int d = 1; d < 40; ++d)
    asym = std::max(asym, std::fabs(east.at(cx + d, 32) - east.at(cx - d, 32)));
  CHECK(asym > 10.0);
}

TEST_CASE("contactless rendering: ambient 1 disables shading") {
  const auto hm = vertical_bands(64, 64, 8.0);
  const auto img = render_contactless(hm, {1.0, kPi / 4, 1.0, 2.0});
  for (double v : img.pix) CHECK(v == 255.0);
  CHECK_THROWS_AS(render_contactless(hm, {0.0, 0.0, 0.2, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(render_contactless(hm, {0.0, kPi / 4, 1.5, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("polarity reversal: the bright line tracks the lit flank") {
  // The same ridge geometry lit from the east and from the west: the bright
  // line sits on opposite flanks, so its lag against the contact render
  // changes sign. This is the measurable form of the reversal: a matcher that
  // reads bright lines as valleys will see the polarity flip between regions
  // lit from opposite sides.
  const auto hm = vertical_bands(256, 128, 8.0);
  const auto contact = render_contact(hm);
  const auto east = render_contactless(hm, {0.0, kPi / 5, 0.15, 2.5});
  const auto west = render_contactless(hm, {kPi, kPi / 5, 0.15, 2.5});
  const double lag_east = bright_line_lag(east, contact, 8.0);
  const double lag_west = bright_line_lag(west, contact, 8.0);
  CHECK(lag_east * lag_west < 0.0);  // opposite flanks
  CHECK(std::fabs(lag_east) >= 1.0);
  CHECK(std::fabs(lag_east) <= 3.0);  // about a quarter period
  CHECK(std::fabs(lag_west) >= 1.0);
  CHECK(std::fabs(lag_west) <= 3.0);
}

TEST_CASE("perturbation: identity, determinism, noise moments") {
  const auto pat = generate_ridge_pattern(PatternKind::Uniform, 8.0, 160, 160, 2, 4);
  const auto img = render_contact(pat.height_map);

  const auto same = perturb_impression(img, 5, 0.0, 0.0, 0.0);
  CHECK(same.pix == img.pix);

  const auto a = perturb_impression(img, 9, 3.0, 0.05, 4.0);
  const auto b = perturb_impression(img, 9, 3.0, 0.05, 4.0);
  CHECK(a.pix == b.pix);
  const auto c = perturb_impression(img, 10, 3.0, 0.05, 4.0);
  CHECK(a.pix != c.pix);

  imaging::GrayImage flat(200, 200, 128.0);
  const auto noisy = perturb_impression(flat, 3, 0.0, 0.0, 10.0);
  double mean = 0.0;
  for (double v : noisy.pix) mean += v;
  mean /= noisy.size();
  double var = 0.0;
  for (double v : noisy.pix) var += (v - mean) * (v - mean);
  var /= noisy.size();
  CHECK(mean == Catch::Approx(128.0).margin(1.0));
  CHECK(std::sqrt(var) == Catch::Approx(10.0).margin(1.5));
}

TEST_CASE("perturbation reports the transform it applied") {
  const auto pat = generate_ridge_pattern(PatternKind::Arch, 8.0, 160, 160, 4, 4);
  const auto img = render_contact(pat.height_map);
  RigidTransform tf;
  perturb_impression(img, 21, 5.0, 0.1, 0.0, &tf);
  CHECK(std::fabs(tf.dx) <= 5.0);
  CHECK(std::fabs(tf.rot) <= 0.1);
  // the map really is rigid: distances are preserved
  auto [x1, y1] = tf.apply(10.0, 20.0);
  auto [x2, y2] = tf.apply(50.0, 90.0);
  CHECK(std::hypot(x2 - x1, y2 - y1) ==
        Catch::Approx(std::hypot(40.0, 70.0)).margin(1e-9));
}

TEST_CASE("end-to-end recall of ground-truth minutiae through the pipeline") {
  int recovered = 0, gt_total = 0, spurious = 0, detected_total = 0;
  const PatternKind kinds[] = {PatternKind::Uniform, PatternKind::Arch,
                               PatternKind::Core, PatternKind::Whorl};
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto pat =
        generate_ridge_pattern(kinds[seed % 4], 8.0, 256, 256, seed, 8);
    gt_total += static_cast<int>(pat.truth.minutiae.size());
    const auto img = render_contact(pat.height_map);
    const auto er = enhance::enhance_pipeline(img);
    auto found = features::filter_spurious(
        features::extract_minutiae(er.maps, &er.field), er.maps, 6.0, 10.0);
    detected_total += static_cast<int>(found.size());
    for (const auto& gt : pat.truth.minutiae) {
      for (const auto& m : found)
        if (std::hypot(m.x - gt.x, m.y - gt.y) <= 8.0 && m.kind == gt.kind) {
          ++recovered;
          break;
        }
    }
    for (const auto& m : found) {
      double d_gt = 1e9, d_sing = 1e9;
      for (const auto& gt : pat.truth.minutiae)
        d_gt = std::min(d_gt, std::hypot(m.x - gt.x, m.y - gt.y));
      for (const auto& s : pat.truth.singularities)
        d_sing = std::min(d_sing, std::hypot(m.x - s.x, m.y - s.y));
      // ridge convergence around a singular point is real structure, not a
      // false detection
      if (d_gt > 8.0 && d_sing > 16.0) ++spurious;
    }
  }
  CHECK(recovered >= static_cast<int>(0.85 * gt_total));
  CHECK(spurious <= static_cast<int>(0.15 * detected_total));
}
