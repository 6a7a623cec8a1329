// rvm: contactless fingerprint toolkit CLI.
//
// Subcommands: convert, extract, match, synth, run, report.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

#include "rvm/debug_dump.hpp"
#include "rvm/experiment.hpp"
#include "rvm/synth.hpp"

namespace {

using namespace rvm;

struct ConvertArgs {
  std::string in, out;
  std::string grayscale = "ordinary";
  double gamma = 1.0 / 2.2;
  bool do_invert = false;
  int resize_w = 0, resize_h = 0;
};

int run_convert(const ConvertArgs& a) {
  const auto loaded = imaging::load_image(a.in);
  imaging::GrayImage gray;
  if (std::holds_alternative<imaging::ColorImage>(loaded)) {
    const auto& color = std::get<imaging::ColorImage>(loaded);
    gray = a.grayscale == "luma"
               ? imaging::to_gray_luma(color, {a.gamma})
               : imaging::to_gray_ordinary(color);
  } else {
    gray = std::get<imaging::GrayImage>(loaded);
  }
  if (a.resize_w > 0 && a.resize_h > 0)
    gray = imaging::downsample(gray, a.resize_w, a.resize_h);
  if (a.do_invert) gray = imaging::invert(gray);
  imaging::save_image(a.out, gray);
  std::cout << "wrote " << a.out << " (" << gray.width << "x" << gray.height
            << ", " << gray.prov.tag() << ")\n";
  return 0;
}

struct ExtractArgs {
  std::string in, out;
  std::string config;
  std::string grayscale = "ordinary";
  double gamma = 1.0 / 2.2;
  bool do_invert = false;
  std::string debug_dir;
};

int run_extract(const ExtractArgs& a) {
  pipeline::ExperimentConfig cfg;
  if (!a.config.empty()) cfg = pipeline::load_config(a.config);
  cfg.grayscale = a.grayscale == "luma" ? imaging::GraySource::Luma
                                        : imaging::GraySource::Ordinary;
  cfg.gamma_exponent = a.gamma;

  imaging::GrayImage gray =
      pipeline::to_working_gray(imaging::load_image(a.in), cfg);
  if (a.do_invert) gray = imaging::invert(gray);
  const auto channel =
      a.do_invert ? features::Channel::Valley : features::Channel::Ridge;
  const std::string source_id = std::filesystem::path(a.out).stem().string();

  if (!a.debug_dir.empty()) {
    std::filesystem::create_directories(a.debug_dir);
    const std::filesystem::path dd = a.debug_dir;
    auto er = enhance::enhance_pipeline(gray, cfg.enhance);
    debug::save_orientation_csv(dd / "orientation.csv", er.field);
    debug::save_binary_image(dd / "binary.png", er.maps.binary);
    debug::save_binary_image(dd / "skeleton.png", er.maps.skeleton);
    auto minutiae = features::extract_minutiae(er.maps, &er.field);
    minutiae = features::filter_spurious(minutiae, er.maps, cfg.filter.d_min,
                                         cfg.filter.border);
    auto tpl = features::build_template(
        std::move(minutiae),
        features::detect_singularities(er.field, er.maps.mask), gray.width,
        gray.height, channel, source_id);
    debug::save_overlay(dd / "overlay.png", gray, tpl);
    features::save_template(a.out, tpl);
    std::cout << "wrote " << a.out << " (" << tpl.minutiae.size()
              << " minutiae, debug in " << a.debug_dir << ")\n";
    return 0;
  }

  const auto tpl = pipeline::extract_template(gray, channel, source_id,
                                              cfg.enhance, cfg.filter);
  features::save_template(a.out, tpl);
  std::cout << "wrote " << a.out << " (" << tpl.minutiae.size()
            << " minutiae, " << tpl.singularities.size()
            << " singularities)\n";
  return 0;
}

struct MatchArgs {
  std::string probe, gallery, config;
};

int run_match(const MatchArgs& a) {
  matcher::MatcherConfig mc;
  if (!a.config.empty()) mc = pipeline::load_config(a.config).matcher;
  const auto p = features::load_template(a.probe);
  const auto g = features::load_template(a.gallery);
  const auto r = matcher::match_templates(p, g, mc);
  if (!r.scorable) {
    std::cout << "unscorable (too few minutiae); score 0\n";
    return 0;
  }
  std::printf("%.17g\n", r.score);
  return 0;
}

struct SynthArgs {
  std::string out;
  int fingers = 10;
  int impressions = 3;
  std::uint64_t seed = 1;
  double period = 8.0;
  int width = 288, height = 288;
  int minutiae = 12;
  std::string style = "contactless";
  double azimuth = 0.9, elevation = 0.6, ambient = 0.25, ridge_height = 2.0;
  double max_shift = 5.0, max_rot = 0.08, noise = 6.0;
};

nlohmann::json truth_to_json(const synth::GroundTruth& truth,
                             const synth::RigidTransform* tf) {
  nlohmann::json j;
  j["period"] = truth.period;
  j["minutiae"] = nlohmann::json::array();
  for (const auto& m : truth.minutiae) {
    double x = m.x, y = m.y, theta = m.theta;
    if (tf) {
      std::tie(x, y) = tf->apply(x, y);
      theta = wrap_two_pi(theta + tf->rot);
    }
    j["minutiae"].push_back(
        {{"x", x},
         {"y", y},
         {"theta", theta},
         {"kind", m.kind == features::MinutiaKind::Ending ? "ending"
                                                          : "bifurcation"}});
  }
  j["singularities"] = nlohmann::json::array();
  for (const auto& s : truth.singularities) {
    double x = s.x, y = s.y;
    if (tf) std::tie(x, y) = tf->apply(x, y);
    j["singularities"].push_back(
        {{"x", x},
         {"y", y},
         {"kind", s.kind == features::SingularityKind::Core ? "core"
                                                            : "delta"}});
  }
  return j;
}

int run_synth(const SynthArgs& a) {
  std::filesystem::create_directories(a.out);
  const synth::PatternKind kinds[] = {
      synth::PatternKind::Uniform, synth::PatternKind::Arch,
      synth::PatternKind::Core, synth::PatternKind::Whorl,
      synth::PatternKind::Delta};
  const synth::IlluminationParams light{a.azimuth, a.elevation, a.ambient,
                                        a.ridge_height};
  for (int f = 0; f < a.fingers; ++f) {
    const auto pattern = synth::generate_ridge_pattern(
        kinds[f % 5], a.period, a.width, a.height, a.seed + 977 * f,
        a.minutiae);
    const imaging::GrayImage base =
        a.style == "contact" ? synth::render_contact(pattern.height_map)
                             : synth::render_contactless(pattern.height_map,
                                                         light);
    for (int k = 1; k <= a.impressions; ++k) {
      synth::RigidTransform tf;
      const auto img = synth::perturb_impression(
          base, a.seed + 977 * f + 131 * k, a.max_shift, a.max_rot, a.noise,
          &tf);
      char name[64];
      std::snprintf(name, sizeof name, "s%03d_1_%d", f + 1, k);
      const auto img_path =
          std::filesystem::path(a.out) / (std::string(name) + ".png");
      imaging::save_image(img_path, img);
      std::ofstream gt(std::filesystem::path(a.out) /
                       (std::string(name) + ".gt.json"));
      gt << truth_to_json(pattern.truth, &tf).dump(2) << '\n';
    }
  }
  std::cout << "wrote " << a.fingers * a.impressions << " images to " << a.out
            << '\n';
  return 0;
}

struct RunArgs {
  std::string data;
  std::string pattern = "{subject}_{finger}_{sample}";
  std::string config;
  std::string out;
  int workers = -1;
};

int run_run(const RunArgs& a) {
  pipeline::ExperimentConfig cfg;
  if (!a.config.empty()) cfg = pipeline::load_config(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.workers >= 0) cfg.workers = a.workers;

  const auto manifest = pipeline::ingest(a.data, a.pattern);
  for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "manifest: " << manifest.entries.size() << " images\n";

  const auto result = pipeline::run_experiment(manifest, cfg);
  for (const auto& f : result.failures)
    std::cerr << "warning: extraction failed for " << f << '\n';
  for (const auto& [channel, rep] : result.reports) {
    std::cout << eval::channel_name(channel) << ": EER "
              << rep.eer * 100.0 << "%";
    for (const auto& [target, gar] : rep.gar_at_far_targets) {
      std::cout << ", GAR@FAR=" << target << " ";
      if (gar)
        std::cout << *gar * 100.0 << "%";
      else
        std::cout << "n/a";
    }
    std::cout << " (" << rep.genuine_count << " genuine, "
              << rep.imposter_count << " imposter)\n";
  }
  std::cout << "reports in " << cfg.output_dir.string() << '\n';
  return 0;
}

struct ReportArgs {
  std::string scores;
  std::string scores2;
  double fuse_weight = 0.5;
  std::string out = "report";
  std::vector<double> far_targets{0.01, 0.001};
};

int run_report(const ReportArgs& a) {
  std::vector<std::pair<eval::ScoreChannel, eval::EvalReport>> reports;
  const auto first =
      eval::load_scores_csv(a.scores, eval::ScoreChannel::Ridge);
  reports.emplace_back(eval::ScoreChannel::Ridge,
                       eval::evaluate(first, a.far_targets));
  if (!a.scores2.empty()) {
    const auto second =
        eval::load_scores_csv(a.scores2, eval::ScoreChannel::Valley);
    reports.emplace_back(eval::ScoreChannel::Valley,
                         eval::evaluate(second, a.far_targets));
    const auto fused =
        eval::fuse_scores(eval::normalize_scores(first),
                          eval::normalize_scores(second), a.fuse_weight);
    reports.emplace_back(eval::ScoreChannel::Fused,
                         eval::evaluate(fused, a.far_targets));
  }
  pipeline::emit_report(reports, a.out);
  for (const auto& [channel, rep] : reports)
    std::cout << eval::channel_name(channel) << ": EER " << rep.eer * 100.0
              << "%\n";
  std::cout << "reports in " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rvm: ridge-valley contactless fingerprint toolkit"};
  app.require_subcommand(1);

  ConvertArgs conv;
  auto* c_conv = app.add_subcommand("convert",
                                    "grayscale/invert/resize an image");
  c_conv->add_option("--in", conv.in, "input image")->required();
  c_conv->add_option("--out", conv.out, "output image")->required();
  c_conv->add_option("--grayscale", conv.grayscale, "ordinary|luma")
      ->check(CLI::IsMember({"ordinary", "luma"}));
  c_conv->add_option("--gamma", conv.gamma, "gamma exponent for luma");
  c_conv->add_flag("--invert", conv.do_invert, "photometric complement");
  c_conv->add_option("--resize-width", conv.resize_w, "downsample target width");
  c_conv->add_option("--resize-height", conv.resize_h,
                     "downsample target height");

  ExtractArgs ext;
  auto* c_ext = app.add_subcommand("extract", "image -> minutiae template");
  c_ext->add_option("--in", ext.in, "input image")->required();
  c_ext->add_option("--out", ext.out, "output template (.rvt)")->required();
  c_ext->add_option("--config", ext.config, "experiment config JSON");
  c_ext->add_option("--grayscale", ext.grayscale, "ordinary|luma")
      ->check(CLI::IsMember({"ordinary", "luma"}));
  c_ext->add_option("--gamma", ext.gamma, "gamma exponent for luma");
  c_ext->add_flag("--invert", ext.do_invert,
                  "invert first (valley-channel template)");
  c_ext->add_option("--debug-dir", ext.debug_dir,
                    "dump orientation CSV, binary/skeleton and overlay here");

  MatchArgs mat;
  auto* c_mat = app.add_subcommand("match", "score two templates");
  c_mat->add_option("--probe", mat.probe, "probe template")->required();
  c_mat->add_option("--gallery", mat.gallery, "gallery template")->required();
  c_mat->add_option("--config", mat.config, "experiment config JSON");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "generate a synthetic corpus");
  c_syn->add_option("--out", syn.out, "output directory")->required();
  c_syn->add_option("--fingers", syn.fingers, "distinct fingers");
  c_syn->add_option("--impressions", syn.impressions, "impressions per finger");
  c_syn->add_option("--seed", syn.seed, "base seed");
  c_syn->add_option("--period", syn.period, "ridge period, pixels");
  c_syn->add_option("--width", syn.width, "image width");
  c_syn->add_option("--height", syn.height, "image height");
  c_syn->add_option("--minutiae", syn.minutiae, "injected minutiae per finger");
  c_syn->add_option("--style", syn.style, "contact|contactless")
      ->check(CLI::IsMember({"contact", "contactless"}));
  c_syn->add_option("--azimuth", syn.azimuth, "light azimuth, radians");
  c_syn->add_option("--elevation", syn.elevation, "light elevation, radians");
  c_syn->add_option("--ambient", syn.ambient, "ambient term [0,1]");
  c_syn->add_option("--ridge-height", syn.ridge_height, "profile amplitude");
  c_syn->add_option("--max-shift", syn.max_shift, "impression shift, pixels");
  c_syn->add_option("--max-rot", syn.max_rot, "impression rotation, radians");
  c_syn->add_option("--noise", syn.noise, "impression noise sigma");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "full verification experiment");
  c_run->add_option("--data", run.data, "dataset directory")->required();
  c_run->add_option("--pattern", run.pattern, "filename pattern");
  c_run->add_option("--config", run.config, "experiment config JSON");
  c_run->add_option("--out", run.out, "output directory (overrides config)");
  c_run->add_option("--workers", run.workers, "worker threads (0 = auto)");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "recompute metrics from score CSVs");
  c_rep->add_option("--scores", rep.scores, "score CSV")->required();
  c_rep->add_option("--scores2", rep.scores2,
                    "second channel CSV (enables fusion)");
  c_rep->add_option("--fuse-weight", rep.fuse_weight, "fusion weight w");
  c_rep->add_option("--out", rep.out, "output directory");
  c_rep->add_option("--far", rep.far_targets, "GAR@FAR targets");

  try {
    app.parse(argc, argv);
    if (*c_conv) return run_convert(conv);
    if (*c_ext) return run_extract(ext);
    if (*c_mat) return run_match(mat);
    if (*c_syn) return run_synth(syn);
    if (*c_run) return run_run(run);
    if (*c_rep) return run_report(rep);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const rvm::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
