#pragma once

// Independent oracles used by the tests. These stay deliberately naive and
// separate from the library implementations they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Eq-style scalar grayscale conversions, long double, different formulation.
inline long double gray_ordinary(long double r, long double g, long double b) {
  return (30.0L * r + 59.0L * g + 11.0L * b) / 100.0L;
}

inline long double gray_luma(long double r, long double g, long double b,
                             long double exponent) {
  auto enc = [&](long double v) {
    return 255.0L * std::pow(v / 255.0L, exponent);
  };
  return (2126.0L * enc(r) + 7152.0L * enc(g) + 722.0L * enc(b)) / 10000.0L;
}

// Brute-force EER: evaluate FAR/FRR at every distinct score plus midpoints
// (acceptance rule: score >= threshold), then take the crossing, linearly
// interpolated between the two candidates where FAR - FRR changes sign.
inline double brute_force_eer(std::vector<double> genuine,
                              std::vector<double> imposter) {
  std::vector<double> all;
  all.reserve(genuine.size() + imposter.size());
  all.insert(all.end(), genuine.begin(), genuine.end());
  all.insert(all.end(), imposter.begin(), imposter.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> candidates;
  candidates.push_back(all.back() + 1.0);  // reject everything
  for (size_t i = all.size(); i-- > 0;) {
    if (i + 1 < all.size()) candidates.push_back((all[i] + all[i + 1]) / 2.0);
    candidates.push_back(all[i]);
  }

  auto rate_at = [](const std::vector<double>& v, double t) {
    size_t n = 0;
    for (double s : v)
      if (s >= t) ++n;
    return static_cast<double>(n) / static_cast<double>(v.size());
  };

  double prev_far = 0.0, prev_frr = 1.0;
  for (double t : candidates) {
    const double far = rate_at(imposter, t);
    const double frr = 1.0 - rate_at(genuine, t);
    if (far == frr) return far;
    if (far - frr > 0.0) {
      const double denom = (far - prev_far) - (frr - prev_frr);
      const double u = (prev_frr - prev_far) / denom;
      return prev_far + u * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
  }
  return 1.0;
}

// Winding of an orientation field (angles mod pi) around a circle of sample
// points; returns the summed principal-value differences.
template <typename OrientationFn>
double loop_orientation_sum(OrientationFn&& theta, double cx, double cy,
                            double radius, int samples = 720) {
  const double pi = 3.14159265358979323846;
  double sum = 0.0;
  double prev = theta(cx + radius, cy);
  for (int i = 1; i <= samples; ++i) {
    const double a = 2.0 * pi * i / samples;
    const double cur = theta(cx + radius * std::cos(a), cy + radius * std::sin(a));
    double d = std::fmod(cur - prev, pi);
    if (d <= -pi / 2) d += pi;
    if (d > pi / 2) d -= pi;
    sum += d;
    prev = cur;
  }
  return sum;
}

// Number of connected runs of set neighbors around the 8-ring, computed by
// explicit run-length walking (independent of the crossing-number formula).
inline int ring_runs(const bool bits[8]) {
  int runs = 0;
  for (int i = 0; i < 8; ++i)
    if (bits[i] && !bits[(i + 7) % 8]) ++runs;
  return runs;
}

}  // namespace oracle
