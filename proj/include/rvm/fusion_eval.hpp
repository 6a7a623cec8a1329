#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <span>

#include "rvm/common.hpp"

namespace rvm::eval {

enum class ScoreChannel { Ridge, Valley, Fused };

inline std::string channel_name(ScoreChannel c) {
  switch (c) {
    case ScoreChannel::Ridge: return "ridge";
    case ScoreChannel::Valley: return "valley";
    case ScoreChannel::Fused: return "fused";
  }
  return "?";
}

struct ScoreRecord {
  std::string probe_id;
  std::string gallery_id;
  bool genuine = false;
  double score = 0.0;
  bool scorable = true;  // false: the matcher could not score the pair
};

struct ScoreSet {
  std::vector<ScoreRecord> records;
  ScoreChannel channel = ScoreChannel::Ridge;
};

struct PairLabel {
  std::size_t probe_index = 0;
  std::size_t gallery_index = 0;
  bool genuine = false;
};

// An id plus the (subject, finger) class label it belongs to.
struct ClassedId {
  std::string id;
  std::string class_key;
};

struct PairCounts {
  long long genuine = 0;
  long long imposter = 0;
};

// Closed form for c classes of s samples each.
inline PairCounts expected_pair_counts(long long classes, long long samples) {
  PairCounts pc;
  pc.genuine = classes * (samples * (samples - 1) / 2);
  const long long total = classes * samples;
  pc.imposter = total * (total - 1) / 2 - pc.genuine;
  return pc;
}

// Streams every unordered pair (i < j) once. Throws on duplicate ids.
template <typename Fn>
void for_each_pair(std::span<const ClassedId> ids, Fn&& fn) {
  std::set<std::string_view> seen;
  for (const auto& e : ids)
    if (!seen.insert(e.id).second)
      throw DataError("duplicate id in manifest: " + e.id);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      fn(PairLabel{i, j, ids[i].class_key == ids[j].class_key});
}

inline std::vector<PairLabel> enumerate_pairs(std::span<const ClassedId> ids) {
  std::vector<PairLabel> out;
  out.reserve(ids.size() * (ids.size() - 1) / 2);
  for_each_pair(ids, [&](const PairLabel& p) { out.push_back(p); });
  return out;
}

inline PairCounts count_pairs(std::span<const ClassedId> ids) {
  PairCounts pc;
  for_each_pair(ids, [&](const PairLabel& p) {
    if (p.genuine)
      ++pc.genuine;
    else
      ++pc.imposter;
  });
  return pc;
}

// Min-max normalization to [0, 1] over the whole set; rank-preserving.
inline ScoreSet normalize_scores(const ScoreSet& s) {
  if (s.records.size() < 2)
    throw std::invalid_argument("need at least two scores to normalize");
  double lo = s.records.front().score, hi = lo;
  for (const auto& r : s.records) {
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  if (hi <= lo)
    throw std::invalid_argument("cannot min-max normalize equal scores");
  ScoreSet out = s;
  const double span = hi - lo;
  for (auto& r : out.records) r.score = (r.score - lo) / span;
  return out;
}

// Weighted sum fusion: w*a + (1-w)*b per pair. Pair sets must agree.
inline ScoreSet fuse_scores(const ScoreSet& a, const ScoreSet& b, double w = 0.5) {
  if (w < 0.0 || w > 1.0) throw std::invalid_argument("weight out of [0, 1]");
  if (a.channel == b.channel)
    throw std::invalid_argument("fusing a channel with itself");
  if (a.records.size() != b.records.size())
    throw std::invalid_argument("fused score sets cover different pairs");
  ScoreSet out;
  out.channel = ScoreChannel::Fused;
  out.records.reserve(a.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    const auto& ra = a.records[i];
    const auto& rb = b.records[i];
    if (ra.probe_id != rb.probe_id || ra.gallery_id != rb.gallery_id ||
        ra.genuine != rb.genuine)
      throw std::invalid_argument("fused score sets cover different pairs");
    ScoreRecord r = ra;
    r.score = w * ra.score + (1.0 - w) * rb.score;
    r.scorable = ra.scorable && rb.scorable;
    out.records.push_back(std::move(r));
  }
  return out;
}

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;
  double gar = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // decreasing threshold; FAR/GAR non-decreasing
  long long genuine_count = 0;
  long long imposter_count = 0;
};

// Acceptance rule is score >= threshold; thresholds sweep +inf plus every
// distinct score, in decreasing order.
inline RocCurve compute_roc(const ScoreSet& s) {
  std::vector<double> genuine, imposter;
  for (const auto& r : s.records)
    (r.genuine ? genuine : imposter).push_back(r.score);
  if (genuine.empty() || imposter.empty())
    throw std::invalid_argument("ROC needs both genuine and imposter scores");
  std::sort(genuine.begin(), genuine.end());
  std::sort(imposter.begin(), imposter.end());

  std::vector<double> thresholds;
  thresholds.reserve(s.records.size());
  for (const auto& r : s.records) thresholds.push_back(r.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  RocCurve curve;
  curve.genuine_count = static_cast<long long>(genuine.size());
  curve.imposter_count = static_cast<long long>(imposter.size());
  auto at_least = [](const std::vector<double>& v, double t) {
    return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), t));
  };
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (double t : thresholds)
    curve.points.push_back({t, at_least(imposter, t) / imposter.size(),
                            at_least(genuine, t) / genuine.size()});
  return curve;
}

// EER: the value where FAR equals FRR. An exact crossing point is returned
// as-is; otherwise the two adjacent operating points where FAR - FRR changes
// sign are linearly interpolated.
inline double compute_eer(const RocCurve& curve) {
  const auto& pts = curve.points;
  if (pts.empty()) throw std::invalid_argument("empty ROC");
  for (const auto& p : pts)
    if (p.far == 1.0 - p.gar) return p.far;
  for (size_t i = 1; i < pts.size(); ++i) {
    const double d0 = pts[i - 1].far - (1.0 - pts[i - 1].gar);
    const double d1 = pts[i].far - (1.0 - pts[i].gar);
    if (d0 < 0.0 && d1 > 0.0) {
      const double far0 = pts[i - 1].far, frr0 = 1.0 - pts[i - 1].gar;
      const double far1 = pts[i].far, frr1 = 1.0 - pts[i].gar;
      const double denom = (far1 - far0) - (frr1 - frr0);
      const double t = (frr0 - far0) / denom;
      return far0 + t * (far1 - far0);
    }
  }
  // degenerate single-sided curves
  return pts.back().far - (1.0 - pts.back().gar) < 0.0 ? 1.0 : 0.0;
}

// GAR at the step-function operating point: the largest acceptance region
// whose FAR still stays at or below the target. Targets below 1/imposters
// are unmeasurable.
inline std::optional<double> gar_at_far(const RocCurve& curve,
                                        double far_target) {
  if (!(far_target > 0.0 && far_target <= 1.0))
    throw std::invalid_argument("far_target must lie in (0, 1]");
  if (far_target < 1.0 / static_cast<double>(curve.imposter_count))
    return std::nullopt;
  std::optional<double> best;
  for (const auto& p : curve.points)
    if (p.far <= far_target) best = p.gar;
  return best;
}

struct EvalReport {
  double eer = 0.0;
  RocCurve roc;
  std::vector<std::pair<double, std::optional<double>>> gar_at_far_targets;
  long long genuine_count = 0;
  long long imposter_count = 0;
  long long unscorable = 0;
};

inline EvalReport evaluate(const ScoreSet& s,
                           const std::vector<double>& far_targets) {
  EvalReport rep;
  rep.roc = compute_roc(s);
  rep.eer = compute_eer(rep.roc);
  rep.genuine_count = rep.roc.genuine_count;
  rep.imposter_count = rep.roc.imposter_count;
  for (const auto& r : s.records)
    if (!r.scorable) ++rep.unscorable;
  for (double t : far_targets)
    rep.gar_at_far_targets.emplace_back(t, gar_at_far(rep.roc, t));
  return rep;
}

// ---- score / ROC CSV ------------------------------------------------------

namespace csv_detail {
inline std::string fmt_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<size_t>(n));
}
inline void check_id(const std::string& id) {
  if (id.find_first_of(",\n\r") != std::string::npos)
    throw DataError("id contains CSV delimiters: " + id);
}
}  // namespace csv_detail

inline void save_scores_csv(const std::filesystem::path& path,
                            const ScoreSet& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write scores: " + path.string());
  out << "probe_id,gallery_id,genuine,score\n";
  for (const auto& r : s.records) {
    csv_detail::check_id(r.probe_id);
    csv_detail::check_id(r.gallery_id);
    out << r.probe_id << ',' << r.gallery_id << ',' << (r.genuine ? 1 : 0)
        << ',' << csv_detail::fmt_double(r.score) << '\n';
  }
  if (!out) throw DataError("score write failed: " + path.string());
}

inline ScoreSet load_scores_csv(const std::filesystem::path& path,
                                ScoreChannel channel) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scores: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "probe_id,gallery_id,genuine,score")
    throw DataError("bad score CSV header: " + path.string());
  ScoreSet s;
  s.channel = channel;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ScoreRecord r;
    size_t p1 = line.find(',');
    size_t p2 = p1 == std::string::npos ? p1 : line.find(',', p1 + 1);
    size_t p3 = p2 == std::string::npos ? p2 : line.find(',', p2 + 1);
    if (p3 == std::string::npos)
      throw DataError("bad score row at line " + std::to_string(lineno) +
                      ": " + path.string());
    r.probe_id = line.substr(0, p1);
    r.gallery_id = line.substr(p1 + 1, p2 - p1 - 1);
    const std::string genuine = line.substr(p2 + 1, p3 - p2 - 1);
    if (genuine != "0" && genuine != "1")
      throw DataError("bad genuine flag at line " + std::to_string(lineno));
    r.genuine = genuine == "1";
    try {
      r.score = std::stod(line.substr(p3 + 1));
    } catch (const std::exception&) {
      throw DataError("bad score value at line " + std::to_string(lineno));
    }
    s.records.push_back(std::move(r));
  }
  return s;
}

inline void save_roc_csv(const std::filesystem::path& path,
                         const RocCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ROC: " + path.string());
  out << "threshold,far,gar\n";
  for (const auto& p : curve.points)
    out << (std::isinf(p.threshold) ? std::string("inf")
                                    : csv_detail::fmt_double(p.threshold))
        << ',' << csv_detail::fmt_double(p.far) << ','
        << csv_detail::fmt_double(p.gar) << '\n';
  if (!out) throw DataError("ROC write failed: " + path.string());
}

}  // namespace rvm::eval
