#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "rvm/features.hpp"
#include "rvm/fusion_eval.hpp"
#include "rvm/image_io.hpp"
#include "rvm/manifest.hpp"
#include "rvm/matcher.hpp"
#include "rvm/template_io.hpp"

namespace rvm::pipeline {

struct ExperimentConfig {
  imaging::GraySource grayscale = imaging::GraySource::Ordinary;
  double gamma_exponent = 1.0 / 2.2;
  bool channel_ridge = true;
  bool channel_valley = false;
  bool channel_fused = false;
  double fusion_weight = 0.5;
  matcher::MatcherConfig matcher;
  enhance::EnhanceParams enhance;
  features::FilterParams filter;
  std::vector<double> far_targets{0.01, 0.001};
  int workers = 0;  // 0: hardware concurrency
  std::filesystem::path output_dir = "out";
  bool resume = true;

  void validate() const {
    if (!(channel_ridge || channel_valley || channel_fused))
      throw std::invalid_argument("at least one channel must be selected");
    if (channel_fused && !(channel_ridge && channel_valley))
      throw std::invalid_argument("fused channel requires ridge and valley");
    if (fusion_weight < 0.0 || fusion_weight > 1.0)
      throw std::invalid_argument("fusion weight out of [0, 1]");
    for (double t : far_targets)
      if (!(t > 0.0 && t <= 1.0))
        throw std::invalid_argument("FAR targets must lie in (0, 1]");
    if (!(gamma_exponent > 0.0))
      throw std::invalid_argument("gamma exponent must be positive");
    if (workers < 0) throw std::invalid_argument("negative worker count");
    matcher.validate();
  }
};

// ---- config file (JSON) ---------------------------------------------------

namespace cfg_detail {

using nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void check_keys(const json& j, std::initializer_list<const char*> known,
                       const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw DataError("unknown config key: " + scope + it.key());
  }
}

}  // namespace cfg_detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using cfg_detail::maybe;
  ExperimentConfig c;
  cfg_detail::check_keys(
      j,
      {"grayscale", "gamma_exponent", "channels", "fusion_weight", "matcher",
       "enhance", "filter", "far_targets", "workers", "output_dir"},
      "");
  if (j.contains("grayscale")) {
    const std::string g = j.at("grayscale").get<std::string>();
    if (g == "ordinary")
      c.grayscale = imaging::GraySource::Ordinary;
    else if (g == "luma")
      c.grayscale = imaging::GraySource::Luma;
    else
      throw DataError("grayscale must be 'ordinary' or 'luma'");
  }
  maybe(j, "gamma_exponent", c.gamma_exponent);
  if (j.contains("channels")) {
    c.channel_ridge = c.channel_valley = c.channel_fused = false;
    for (const auto& ch : j.at("channels")) {
      const std::string name = ch.get<std::string>();
      if (name == "ridge")
        c.channel_ridge = true;
      else if (name == "valley")
        c.channel_valley = true;
      else if (name == "fused")
        c.channel_fused = true;
      else
        throw DataError("unknown channel: " + name);
    }
  }
  maybe(j, "fusion_weight", c.fusion_weight);
  maybe(j, "far_targets", c.far_targets);
  maybe(j, "workers", c.workers);
  if (j.contains("output_dir"))
    c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("matcher")) {
    const auto& m = j.at("matcher");
    cfg_detail::check_keys(m,
                           {"radius", "spatial_bins", "angular_bins", "sigma_s",
                            "sigma_d", "min_valid_fraction", "min_minutiae",
                            "top_pairs_fraction"},
                           "matcher.");
    maybe(m, "radius", c.matcher.radius);
    maybe(m, "spatial_bins", c.matcher.spatial_bins);
    maybe(m, "angular_bins", c.matcher.angular_bins);
    maybe(m, "sigma_s", c.matcher.sigma_s);
    maybe(m, "sigma_d", c.matcher.sigma_d);
    maybe(m, "min_valid_fraction", c.matcher.min_valid_fraction);
    maybe(m, "min_minutiae", c.matcher.min_minutiae);
    maybe(m, "top_pairs_fraction", c.matcher.top_pairs_fraction);
  }
  if (j.contains("enhance")) {
    const auto& e = j.at("enhance");
    cfg_detail::check_keys(e,
                           {"block_size", "target_mean", "target_var",
                            "segment_var_threshold", "min_coherence",
                            "freq_window", "min_period", "max_period",
                            "gabor_sigma_factor"},
                           "enhance.");
    maybe(e, "block_size", c.enhance.block_size);
    maybe(e, "target_mean", c.enhance.target_mean);
    maybe(e, "target_var", c.enhance.target_var);
    maybe(e, "segment_var_threshold", c.enhance.segment_var_threshold);
    maybe(e, "min_coherence", c.enhance.min_coherence);
    maybe(e, "freq_window", c.enhance.freq_window);
    maybe(e, "min_period", c.enhance.min_period);
    maybe(e, "max_period", c.enhance.max_period);
    maybe(e, "gabor_sigma_factor", c.enhance.gabor_sigma_factor);
  }
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    cfg_detail::check_keys(f, {"d_min", "border"}, "filter.");
    maybe(f, "d_min", c.filter.d_min);
    maybe(f, "border", c.filter.border);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config parse error: " + std::string(e.what()));
  }
  return config_from_json(j);
}

// ---- extraction -----------------------------------------------------------

// Turns a grayscale image into a template. Valley templates must come from
// inverted images (and ridge templates from non-inverted ones); the
// provenance chain is how the bookkeeping is enforced.
inline features::Template extract_template(const imaging::GrayImage& gray,
                                           features::Channel channel,
                                           const std::string& source_id,
                                           const enhance::EnhanceParams& ep,
                                           const features::FilterParams& fp) {
  if ((channel == features::Channel::Valley) != gray.prov.inverted)
    throw std::invalid_argument(
        "channel/provenance mismatch: valley templates require inverted input");
  enhance::EnhanceResult er = enhance::enhance_pipeline(gray, ep);
  auto minutiae = features::extract_minutiae(er.maps, &er.field);
  minutiae = features::filter_spurious(minutiae, er.maps, fp.d_min, fp.border);
  auto singularities = features::detect_singularities(er.field, er.maps.mask);
  return features::build_template(std::move(minutiae), std::move(singularities),
                                  gray.width, gray.height, channel, source_id);
}

// Grayscale conversion step used for color inputs; gray files pass through.
inline imaging::GrayImage to_working_gray(const imaging::LoadedImage& img,
                                          const ExperimentConfig& cfg) {
  if (std::holds_alternative<imaging::GrayImage>(img))
    return std::get<imaging::GrayImage>(img);
  const auto& color = std::get<imaging::ColorImage>(img);
  if (cfg.grayscale == imaging::GraySource::Luma)
    return imaging::to_gray_luma(color, {cfg.gamma_exponent});
  return imaging::to_gray_ordinary(color);
}

namespace detail {

inline std::uint64_t fnv1a64(const void* data, size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_str(const std::string& s, std::uint64_t h) {
  return fnv1a64(s.data(), s.size(), h);
}

// Content hash of (image bytes, extraction-relevant config, channel).
inline std::string template_cache_key(const std::filesystem::path& image,
                                      features::Channel channel,
                                      const ExperimentConfig& cfg) {
  std::ifstream in(image, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + image.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  std::uint64_t h = fnv1a64(bytes.data(), bytes.size());

  char buf[512];
  const auto& e = cfg.enhance;
  const auto& f = cfg.filter;
  const int n = std::snprintf(
      buf, sizeof buf,
      "|%d|%.17g|%s|%d|%.17g|%.17g|%.17g|%.17g|%d|%.17g|%.17g|%.17g|%.17g|%.17g",
      static_cast<int>(cfg.grayscale), cfg.gamma_exponent,
      features::channel_name(channel).c_str(), e.block_size, e.target_mean,
      e.target_var, e.segment_var_threshold, e.min_coherence, e.freq_window,
      e.min_period, e.max_period, e.gabor_sigma_factor, f.d_min, f.border);
  h = fnv1a64(buf, static_cast<size_t>(n), h);

  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

// Index-pulling worker pool; results land in caller-owned slots, so output
// order is independent of scheduling.
template <typename Fn>
void parallel_for(size_t n, int workers, Fn&& fn) {
  if (workers <= 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, 64));
  if (workers == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> threads;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&] {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// ---- experiment -----------------------------------------------------------

struct ExperimentResult {
  std::map<eval::ScoreChannel, eval::EvalReport> reports;
  std::map<eval::ScoreChannel, std::filesystem::path> score_files;
  std::vector<std::string> failures;  // images that failed extraction
};

namespace detail {

inline void report_to_json(nlohmann::json& j, const std::string& channel,
                           const eval::EvalReport& rep) {
  j["channel"] = channel;
  j["eer"] = rep.eer;
  nlohmann::json gar = nlohmann::json::object();
  for (const auto& [target, value] : rep.gar_at_far_targets) {
    char key[32];
    std::snprintf(key, sizeof key, "%g", target);
    if (value)
      gar[key] = *value;
    else
      gar[key] = nullptr;  // below the measurable floor
  }
  j["gar_at_far"] = gar;
  j["counts"] = {{"genuine", rep.genuine_count},
                 {"imposter", rep.imposter_count},
                 {"unscorable", rep.unscorable}};
  j["conventions"] = {
      {"acceptance", "score >= threshold"},
      {"eer", "linear interpolation between adjacent operating points"},
      {"gar_at_far", "step function, no interpolation"},
      {"unscorable_pairs", "scored 0 and included"},
      {"normalization", "min-max over the full score set before fusion"}};
}

}  // namespace detail

// Writes per-channel report JSON + ROC CSV and a one-row-per-channel summary
// table. The fused row carries relative-improvement columns against each
// single channel ((old - new) / old).
inline void emit_report(
    const std::vector<std::pair<eval::ScoreChannel, eval::EvalReport>>& reports,
    const std::filesystem::path& out_dir) {
  if (reports.empty()) throw std::invalid_argument("no reports to emit");
  std::filesystem::create_directories(out_dir);

  for (const auto& [channel, rep] : reports) {
    const std::string name = eval::channel_name(channel);
    nlohmann::json j;
    detail::report_to_json(j, name, rep);
    std::ofstream out(out_dir / ("report_" + name + ".json"), std::ios::binary);
    if (!out) throw DataError("cannot write report JSON");
    out << j.dump(2) << '\n';
    eval::save_roc_csv(out_dir / ("roc_" + name + ".csv"), rep.roc);
  }

  const eval::EvalReport* ridge = nullptr;
  const eval::EvalReport* valley = nullptr;
  for (const auto& [channel, rep] : reports) {
    if (channel == eval::ScoreChannel::Ridge) ridge = &rep;
    if (channel == eval::ScoreChannel::Valley) valley = &rep;
  }

  std::ofstream sum(out_dir / "summary.csv", std::ios::binary);
  if (!sum) throw DataError("cannot write summary.csv");
  sum << "channel,eer";
  if (!reports.empty())
    for (const auto& [target, _] : reports.front().second.gar_at_far_targets) {
      char key[48];
      std::snprintf(key, sizeof key, ",gar_at_far_%g", target);
      sum << key;
    }
  sum << ",genuine,imposter,unscorable,eer_improvement_vs_ridge,"
         "eer_improvement_vs_valley\n";
  for (const auto& [channel, rep] : reports) {
    sum << eval::channel_name(channel) << ','
        << eval::csv_detail::fmt_double(rep.eer);
    for (const auto& [_, value] : rep.gar_at_far_targets) {
      sum << ',';
      if (value) sum << eval::csv_detail::fmt_double(*value);
    }
    sum << ',' << rep.genuine_count << ',' << rep.imposter_count << ','
        << rep.unscorable;
    if (channel == eval::ScoreChannel::Fused && ridge && ridge->eer > 0.0)
      sum << ','
          << eval::csv_detail::fmt_double((ridge->eer - rep.eer) / ridge->eer);
    else
      sum << ',';
    if (channel == eval::ScoreChannel::Fused && valley && valley->eer > 0.0)
      sum << ','
          << eval::csv_detail::fmt_double((valley->eer - rep.eer) / valley->eer);
    else
      sum << ',';
    sum << '\n';
  }
}

// Full experiment: per-image grayscale conversion, optional inversion,
// enhancement and template extraction (cached to disk), all-to-all scoring
// per channel, score CSVs, fusion, and reports. Resumable from cached
// templates and score CSVs; byte-identical output for any worker count.
inline ExperimentResult run_experiment(const DatasetManifest& manifest,
                                       const ExperimentConfig& cfg) {
  cfg.validate();
  if (manifest.entries.size() < 2)
    throw DataError("experiment needs at least two images");
  std::filesystem::create_directories(cfg.output_dir);
  const auto template_dir = cfg.output_dir / "templates";
  std::filesystem::create_directories(template_dir);

  ExperimentResult result;
  std::mutex failures_mutex;

  const bool want_valley = cfg.channel_valley || cfg.channel_fused;
  const bool want_ridge = cfg.channel_ridge || cfg.channel_fused;
  std::vector<features::Channel> channels;
  if (want_ridge) channels.push_back(features::Channel::Ridge);
  if (want_valley) channels.push_back(features::Channel::Valley);

  // template extraction (or cache load), fanned out per image x channel
  const size_t n_img = manifest.entries.size();
  std::map<features::Channel, std::vector<features::Template>> templates;
  for (auto ch : channels)
    templates[ch].resize(n_img);

  std::vector<std::pair<size_t, features::Channel>> jobs;
  for (auto ch : channels)
    for (size_t i = 0; i < n_img; ++i) jobs.emplace_back(i, ch);

  detail::parallel_for(jobs.size(), cfg.workers, [&](size_t job) {
    const auto [i, channel] = jobs[job];
    const auto& entry = manifest.entries[i];
    const std::string key = detail::template_cache_key(entry.path, channel, cfg);
    const auto cached =
        template_dir / (entry.id() + "_" + features::channel_name(channel) +
                        "_" + key + ".rvt");
    features::Template& slot = templates[channel][i];
    if (cfg.resume && std::filesystem::exists(cached)) {
      slot = features::load_template(cached);
      slot.source_id = entry.id();
      return;
    }
    try {
      imaging::GrayImage gray = to_working_gray(imaging::load_image(entry.path), cfg);
      if (channel == features::Channel::Valley) gray = imaging::invert(gray);
      slot = extract_template(gray, channel, entry.id(), cfg.enhance, cfg.filter);
    } catch (const std::exception& e) {
      std::lock_guard lock(failures_mutex);
      result.failures.push_back(entry.id() + " (" +
                                features::channel_name(channel) + "): " +
                                e.what());
      slot = features::Template{};
      slot.width = 1;
      slot.height = 1;
      slot.channel = channel;
      slot.source_id = entry.id();
    }
    features::save_template(cached, slot);
  });

  // all-to-all scoring per channel
  const auto ids = manifest.classed_ids();
  const auto pairs = eval::enumerate_pairs(ids);

  std::map<eval::ScoreChannel, eval::ScoreSet> scores;
  auto score_channel = [&](features::Channel fc, eval::ScoreChannel sc) {
    const auto csv_path = cfg.output_dir /
                          (eval::channel_name(sc) + "_scores.csv");
    if (cfg.resume && std::filesystem::exists(csv_path)) {
      scores[sc] = eval::load_scores_csv(csv_path, sc);
      if (scores[sc].records.size() != pairs.size())
        throw DataError("stale score CSV (pair count mismatch): " +
                        csv_path.string());
      result.score_files[sc] = csv_path;
      return;
    }
    const auto& tpl = templates[fc];
    std::vector<matcher::TemplateDescriptors> prepared(tpl.size());
    detail::parallel_for(tpl.size(), cfg.workers, [&](size_t i) {
      prepared[i] = matcher::prepare_template(tpl[i], cfg.matcher);
    });
    eval::ScoreSet set;
    set.channel = sc;
    set.records.resize(pairs.size());
    detail::parallel_for(pairs.size(), cfg.workers, [&](size_t k) {
      const auto& p = pairs[k];
      const auto r = matcher::match_prepared(prepared[p.probe_index],
                                             prepared[p.gallery_index],
                                             cfg.matcher);
      auto& rec = set.records[k];
      rec.probe_id = ids[p.probe_index].id;
      rec.gallery_id = ids[p.gallery_index].id;
      rec.genuine = p.genuine;
      rec.score = r.score;
      rec.scorable = r.scorable;
    });
    eval::save_scores_csv(csv_path, set);
    scores[sc] = std::move(set);
    result.score_files[sc] = csv_path;
  };

  if (want_ridge) score_channel(features::Channel::Ridge, eval::ScoreChannel::Ridge);
  if (want_valley)
    score_channel(features::Channel::Valley, eval::ScoreChannel::Valley);

  if (cfg.channel_fused) {
    const auto fused = eval::fuse_scores(
        eval::normalize_scores(scores[eval::ScoreChannel::Ridge]),
        eval::normalize_scores(scores[eval::ScoreChannel::Valley]),
        cfg.fusion_weight);
    const auto csv_path = cfg.output_dir / "fused_scores.csv";
    eval::save_scores_csv(csv_path, fused);
    scores[eval::ScoreChannel::Fused] = fused;
    result.score_files[eval::ScoreChannel::Fused] = csv_path;
  }

  std::vector<std::pair<eval::ScoreChannel, eval::EvalReport>> reports;
  for (auto sc : {eval::ScoreChannel::Ridge, eval::ScoreChannel::Valley,
                  eval::ScoreChannel::Fused}) {
    const bool requested = (sc == eval::ScoreChannel::Ridge && cfg.channel_ridge) ||
                           (sc == eval::ScoreChannel::Valley && cfg.channel_valley) ||
                           (sc == eval::ScoreChannel::Fused && cfg.channel_fused);
    if (!requested) continue;
    reports.emplace_back(sc, eval::evaluate(scores[sc], cfg.far_targets));
    result.reports[sc] = reports.back().second;
  }
  emit_report(reports, cfg.output_dir);
  return result;
}

}  // namespace rvm::pipeline
