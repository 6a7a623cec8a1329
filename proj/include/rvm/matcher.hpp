#pragma once

#include "rvm/minutia.hpp"

namespace rvm::matcher {

// Cylinder-style local descriptors: each minutia owns an N_S x N_S x N_D grid
// of cells expressed in its own rotated frame, accumulating Gaussian
// spatial/angular contributions from neighboring minutiae. Local similarities
// are consolidated into a global score by greedy one-to-one top-pair
// averaging.

struct MatcherConfig {
  double radius = 70.0;        // cylinder radius, pixels
  int spatial_bins = 8;        // N_S
  int angular_bins = 6;        // N_D
  double sigma_s = 9.0;        // spatial kernel width, pixels
  double sigma_d = kPi / 4.0;  // angular kernel width, radians
  double min_valid_fraction = 0.25;
  int min_minutiae = 4;
  double top_pairs_fraction = 0.4;
  // contribution saturation sigmoid
  double sigmoid_tau = 8.0;
  double sigmoid_mu = 0.4;

  void validate() const {
    if (radius <= 0 || sigma_s <= 0 || sigma_d <= 0)
      throw std::invalid_argument("matcher lengths must be positive");
    if (spatial_bins < 2 || angular_bins < 2)
      throw std::invalid_argument("bin counts must be >= 2");
    if (min_valid_fraction < 0 || min_valid_fraction > 1)
      throw std::invalid_argument("min_valid_fraction out of range");
    if (min_minutiae < 1) throw std::invalid_argument("min_minutiae must be >= 1");
    if (top_pairs_fraction <= 0 || top_pairs_fraction > 1)
      throw std::invalid_argument("top_pairs_fraction out of (0, 1]");
  }
};

struct CylinderDescriptor {
  features::Minutia center;
  int spatial_bins = 0;
  int angular_bins = 0;
  std::vector<double> cells;        // contributions in [0, 1]
  std::vector<std::uint8_t> valid;  // invalid cells carry contribution 0
  double valid_fraction = 0.0;
};

// One descriptor per minutia that has at least two neighbors within
// radius + 3*sigma_s. Cell coordinates live in the center minutia's rotated
// frame, so descriptors are translation-invariant and rotation-covariant.
inline std::vector<CylinderDescriptor> build_cylinders(
    const features::Template& t, const MatcherConfig& cfg = {}) {
  cfg.validate();
  if (t.minutiae.empty())
    throw std::invalid_argument("template has no minutiae");

  const int ns = cfg.spatial_bins, nd = cfg.angular_bins;
  const double cell_step = 2.0 * cfg.radius / ns;
  const double ang_step = kTwoPi / nd;
  const double reach = cfg.radius + 3.0 * cfg.sigma_s;

  std::vector<CylinderDescriptor> out;
  for (size_t ci = 0; ci < t.minutiae.size(); ++ci) {
    const features::Minutia& center = t.minutiae[ci];
    std::vector<const features::Minutia*> neighbors;
    for (size_t k = 0; k < t.minutiae.size(); ++k) {
      if (k == ci) continue;
      const auto& n = t.minutiae[k];
      if (std::hypot(n.x - center.x, n.y - center.y) <= reach)
        neighbors.push_back(&n);
    }
    if (neighbors.size() < 2) continue;

    CylinderDescriptor d;
    d.center = center;
    d.spatial_bins = ns;
    d.angular_bins = nd;
    d.cells.assign(static_cast<size_t>(ns) * ns * nd, 0.0);
    d.valid.assign(d.cells.size(), 0);

    // angular part depends only on (k, neighbor)
    std::vector<double> ang(static_cast<size_t>(nd) * neighbors.size());
    for (size_t t = 0; t < neighbors.size(); ++t) {
      const double rel = wrap_pi(neighbors[t]->theta - center.theta);
      for (int k = 0; k < nd; ++k) {
        const double da = wrap_pi((k + 0.5) * ang_step - kPi - rel);
        ang[static_cast<size_t>(k) * neighbors.size() + t] =
            std::exp(-da * da / (2.0 * cfg.sigma_d * cfg.sigma_d));
      }
    }

    const double ct = std::cos(center.theta), st = std::sin(center.theta);
    int valid_count = 0;
    std::vector<double> spat(neighbors.size());
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < ns; ++j) {
        const double ox = (i + 0.5) * cell_step - cfg.radius;
        const double oy = (j + 0.5) * cell_step - cfg.radius;
        if (ox * ox + oy * oy > cfg.radius * cfg.radius) continue;
        // rotate the offset into image coordinates
        const double px = center.x + ct * ox - st * oy;
        const double py = center.y + st * ox + ct * oy;
        for (size_t t = 0; t < neighbors.size(); ++t) {
          const double ds2 = (px - neighbors[t]->x) * (px - neighbors[t]->x) +
                             (py - neighbors[t]->y) * (py - neighbors[t]->y);
          spat[t] = ds2 > 9.0 * cfg.sigma_s * cfg.sigma_s
                        ? 0.0
                        : std::exp(-ds2 / (2.0 * cfg.sigma_s * cfg.sigma_s));
        }
        for (int k = 0; k < nd; ++k) {
          const size_t cell = (static_cast<size_t>(i) * ns + j) * nd + k;
          d.valid[cell] = 1;
          ++valid_count;
          double acc = 0.0;
          for (size_t t = 0; t < neighbors.size(); ++t)
            acc += spat[t] * ang[static_cast<size_t>(k) * neighbors.size() + t];
          d.cells[cell] =
              1.0 / (1.0 + std::exp(-cfg.sigmoid_tau * (acc - cfg.sigmoid_mu)));
        }
      }
    d.valid_fraction = static_cast<double>(valid_count) /
                       static_cast<double>(d.cells.size());
    out.push_back(std::move(d));
  }
  return out;
}

// 1 - ||a - b|| / (||a|| + ||b||) over cells valid in both descriptors;
// 0 when the common valid fraction is too small or both norms vanish.
inline double local_similarity(const CylinderDescriptor& a,
                               const CylinderDescriptor& b,
                               const MatcherConfig& cfg = {}) {
  if (a.spatial_bins != b.spatial_bins || a.angular_bins != b.angular_bins ||
      a.cells.size() != b.cells.size())
    throw std::invalid_argument("descriptors built with different configs");

  double diff2 = 0.0, na2 = 0.0, nb2 = 0.0;
  size_t common = 0;
  for (size_t i = 0; i < a.cells.size(); ++i) {
    if (!a.valid[i] || !b.valid[i]) continue;
    ++common;
    const double av = a.cells[i], bv = b.cells[i];
    diff2 += (av - bv) * (av - bv);
    na2 += av * av;
    nb2 += bv * bv;
  }
  if (static_cast<double>(common) / static_cast<double>(a.cells.size()) <
      cfg.min_valid_fraction)
    return 0.0;
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  if (na + nb <= 0.0) return 0.0;
  return std::clamp(1.0 - std::sqrt(diff2) / (na + nb), 0.0, 1.0);
}

struct MatchResult {
  double score = 0.0;
  bool scorable = false;  // false: too few minutiae to score the pair
};

namespace detail {

inline bool canonical_before(const features::Template& a,
                             const features::Template& b) {
  if (a.source_id != b.source_id) return a.source_id < b.source_id;
  if (a.minutiae.size() != b.minutiae.size())
    return a.minutiae.size() < b.minutiae.size();
  for (size_t i = 0; i < a.minutiae.size(); ++i) {
    const auto& ma = a.minutiae[i];
    const auto& mb = b.minutiae[i];
    if (ma.x != mb.x) return ma.x < mb.x;
    if (ma.y != mb.y) return ma.y < mb.y;
    if (ma.theta != mb.theta) return ma.theta < mb.theta;
  }
  return false;  // identical content: order does not matter
}

}  // namespace detail

// A template with its descriptors prebuilt, for all-pairs workloads where
// rebuilding per pair would dominate.
struct TemplateDescriptors {
  features::Template tpl;
  std::vector<CylinderDescriptor> descriptors;
};

inline TemplateDescriptors prepare_template(const features::Template& t,
                                            const MatcherConfig& cfg = {}) {
  TemplateDescriptors td;
  td.tpl = t;
  if (!t.minutiae.empty()) td.descriptors = build_cylinders(t, cfg);
  return td;
}

// Global score: all pairwise local similarities, greedy one-to-one selection
// in descending similarity, mean over the top ceil(f * min(n_p, n_g)) pairs.
// Arguments are canonicalized first, so match(p, g) == match(g, p) exactly.
inline MatchResult match_prepared(const TemplateDescriptors& p,
                                  const TemplateDescriptors& g,
                                  const MatcherConfig& cfg = {}) {
  cfg.validate();
  const bool swap = detail::canonical_before(g.tpl, p.tpl);
  const auto& da = swap ? g.descriptors : p.descriptors;
  const auto& db = swap ? p.descriptors : g.descriptors;

  const int na = static_cast<int>(da.size());
  const int nb = static_cast<int>(db.size());
  if (na < cfg.min_minutiae || nb < cfg.min_minutiae) return {0.0, false};

  struct Pair {
    double sim;
    int ia, ib;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<size_t>(na) * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      pairs.push_back({local_similarity(da[i], db[j], cfg), i, j});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    if (x.ia != y.ia) return x.ia < y.ia;
    return x.ib < y.ib;
  });

  const int want = static_cast<int>(
      std::ceil(cfg.top_pairs_fraction * std::min(na, nb)));
  std::vector<bool> used_a(na, false), used_b(nb, false);
  double sum = 0.0;
  int taken = 0;
  for (const auto& pr : pairs) {
    if (taken == want) break;
    if (used_a[pr.ia] || used_b[pr.ib]) continue;
    used_a[pr.ia] = true;
    used_b[pr.ib] = true;
    sum += pr.sim;
    ++taken;
  }
  return {taken > 0 ? sum / taken : 0.0, true};
}

inline MatchResult match_templates(const features::Template& p,
                                   const features::Template& g,
                                   const MatcherConfig& cfg = {}) {
  return match_prepared(prepare_template(p, cfg), prepare_template(g, cfg),
                        cfg);
}

}  // namespace rvm::matcher
