#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rvm/minutia.hpp"

namespace rvm::features {

// RVT1 text format:
//   RVT1
//   <width> <height> <ridge|valley>
//   <N>
//   <x> <y> <theta_radians> <E|B> <quality>   (N lines)
//   <M>
//   <x> <y> <C|D>                              (M lines)

namespace io_detail {
inline std::string fmt_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<size_t>(n));
}
}  // namespace io_detail

inline std::string serialize_template(const Template& t) {
  std::ostringstream out;
  out << "RVT1\n";
  out << t.width << ' ' << t.height << ' ' << channel_name(t.channel) << '\n';
  out << t.minutiae.size() << '\n';
  for (const auto& m : t.minutiae)
    out << io_detail::fmt_double(m.x) << ' ' << io_detail::fmt_double(m.y)
        << ' ' << io_detail::fmt_double(m.theta) << ' '
        << (m.kind == MinutiaKind::Ending ? 'E' : 'B') << ' '
        << io_detail::fmt_double(m.quality) << '\n';
  out << t.singularities.size() << '\n';
  for (const auto& s : t.singularities)
    out << io_detail::fmt_double(s.x) << ' ' << io_detail::fmt_double(s.y)
        << ' ' << (s.kind == SingularityKind::Core ? 'C' : 'D') << '\n';
  return out.str();
}

inline Template parse_template(const std::string& text,
                               const std::string& source_id) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line))
      throw DataError("template truncated at line " + std::to_string(lineno + 1));
    ++lineno;
    return line;
  };

  if (next_line() != "RVT1") throw DataError("bad template magic");
  Template t;
  t.source_id = source_id;
  {
    std::istringstream hdr(next_line());
    std::string channel;
    if (!(hdr >> t.width >> t.height >> channel) || t.width <= 0 ||
        t.height <= 0)
      throw DataError("bad template header at line 2");
    if (channel == "ridge")
      t.channel = Channel::Ridge;
    else if (channel == "valley")
      t.channel = Channel::Valley;
    else
      throw DataError("unknown channel '" + channel + "' at line 2");
  }
  long n = 0;
  {
    std::istringstream cnt(next_line());
    if (!(cnt >> n) || n < 0) throw DataError("bad minutiae count");
  }
  t.minutiae.reserve(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    std::istringstream row(next_line());
    Minutia m;
    char kind = 0;
    if (!(row >> m.x >> m.y >> m.theta >> kind >> m.quality) ||
        (kind != 'E' && kind != 'B'))
      throw DataError("bad minutia at line " + std::to_string(lineno));
    m.kind = kind == 'E' ? MinutiaKind::Ending : MinutiaKind::Bifurcation;
    t.minutiae.push_back(m);
  }
  long m_count = 0;
  {
    std::istringstream cnt(next_line());
    if (!(cnt >> m_count) || m_count < 0)
      throw DataError("bad singularity count");
  }
  for (long i = 0; i < m_count; ++i) {
    std::istringstream row(next_line());
    Singularity s;
    char kind = 0;
    if (!(row >> s.x >> s.y >> kind) || (kind != 'C' && kind != 'D'))
      throw DataError("bad singularity at line " + std::to_string(lineno));
    s.kind = kind == 'C' ? SingularityKind::Core : SingularityKind::Delta;
    t.singularities.push_back(s);
  }
  return t;
}

inline void save_template(const std::filesystem::path& path, const Template& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write template: " + path.string());
  out << serialize_template(t);
  if (!out) throw DataError("template write failed: " + path.string());
}

inline Template load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open template: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_template(buf.str(), path.stem().string());
}

}  // namespace rvm::features
