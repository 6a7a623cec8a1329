#pragma once

#include <filesystem>
#include <regex>

#include "rvm/common.hpp"
#include "rvm/fusion_eval.hpp"

namespace rvm::pipeline {

struct ManifestEntry {
  std::filesystem::path path;
  std::string subject;
  std::string finger;
  int sample = 0;

  std::string id() const {
    return subject + "_" + finger + "_" + std::to_string(sample);
  }
  // \x1f keeps "a_b" + "c" distinct from "a" + "b_c"
  std::string class_key() const { return subject + '\x1f' + finger; }
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;  // skipped files

  std::vector<eval::ClassedId> classed_ids() const {
    std::vector<eval::ClassedId> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) ids.push_back({e.id(), e.class_key()});
    return ids;
  }
};

namespace detail {

struct FilenamePattern {
  std::regex re;
  int subject_group = 0, finger_group = 0, sample_group = 0;
};

// Pattern strings like "{subject}_{finger}_{sample}"; literal characters are
// matched verbatim, {sample} must be numeric.
inline FilenamePattern compile_pattern(const std::string& pattern) {
  FilenamePattern fp;
  std::string re;
  int group = 0;
  for (size_t i = 0; i < pattern.size();) {
    if (pattern[i] == '{') {
      const size_t end = pattern.find('}', i);
      if (end == std::string::npos)
        throw DataError("unterminated field in pattern: " + pattern);
      const std::string field = pattern.substr(i + 1, end - i - 1);
      ++group;
      if (field == "subject") {
        fp.subject_group = group;
        re += "(.+?)";
      } else if (field == "finger") {
        fp.finger_group = group;
        re += "(.+?)";
      } else if (field == "sample") {
        fp.sample_group = group;
        re += "([0-9]+)";
      } else {
        throw DataError("unknown pattern field: {" + field + "}");
      }
      i = end + 1;
    } else {
      if (std::string("\\^$.|?*+()[]{}").find(pattern[i]) != std::string::npos)
        re += '\\';
      re += pattern[i];
      ++i;
    }
  }
  if (!fp.subject_group || !fp.finger_group || !fp.sample_group)
    throw DataError("pattern must contain {subject}, {finger} and {sample}");
  fp.re = std::regex(re);
  return fp;
}

inline bool known_image_extension(std::string ext) {
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  return ext == ".png" || ext == ".bmp" || ext == ".pgm" || ext == ".ppm";
}

}  // namespace detail

// Builds a manifest from filenames of the form the pattern describes.
// Non-image files are skipped with a warning; unparseable image names and
// duplicate (subject, finger, sample) triples are errors.
inline DatasetManifest ingest(const std::filesystem::path& root,
                              const std::string& pattern =
                                  "{subject}_{finger}_{sample}") {
  if (!std::filesystem::is_directory(root))
    throw DataError("dataset root is not a directory: " + root.string());
  const auto fp = detail::compile_pattern(pattern);

  DatasetManifest m;
  m.root = root;
  std::vector<std::filesystem::path> files;
  for (const auto& de : std::filesystem::directory_iterator(root))
    if (de.is_regular_file()) files.push_back(de.path());
  std::sort(files.begin(), files.end());

  for (const auto& path : files) {
    if (!detail::known_image_extension(path.extension().string())) {
      m.warnings.push_back("skipped non-image file: " + path.filename().string());
      continue;
    }
    const std::string stem = path.stem().string();
    std::smatch match;
    if (!std::regex_match(stem, match, fp.re))
      throw DataError("filename does not match pattern '" + pattern +
                      "': " + path.filename().string());
    ManifestEntry e;
    e.path = path;
    e.subject = match[fp.subject_group].str();
    e.finger = match[fp.finger_group].str();
    e.sample = std::stoi(match[fp.sample_group].str());
    m.entries.push_back(std::move(e));
  }

  std::sort(m.entries.begin(), m.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) {
              if (a.subject != b.subject) return a.subject < b.subject;
              if (a.finger != b.finger) return a.finger < b.finger;
              return a.sample < b.sample;
            });
  for (size_t i = 1; i < m.entries.size(); ++i) {
    const auto& p = m.entries[i - 1];
    const auto& c = m.entries[i];
    if (p.subject == c.subject && p.finger == c.finger && p.sample == c.sample)
      throw DataError("duplicate (subject, finger, sample): " + c.id());
  }
  return m;
}

}  // namespace rvm::pipeline
