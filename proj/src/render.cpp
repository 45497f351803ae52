#include "wildfire/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace wildfire {

namespace fs = std::filesystem;

void write_pgm(std::ostream& os, const FireMap& map) {
  os << "P5 " << map.width << ' ' << map.height << " 255\n";
  for (double g : map.intensity) {
    const double v = std::clamp(g / 3.0, 0.0, 1.0);
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
  }
}

void write_sortie_svg(std::ostream& os, const EpisodeTrace& trace) {
  constexpr int px = 20;
  const int w = std::max(1, trace.width) * px;
  const int h = std::max(1, trace.height) * px;
  auto centre = [&](int c) { return c * px + px / 2; };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  for (const auto& p : trace.periods) {
    os << "<g id=\"period-" << p.t << "\">\n";
    for (const auto& f : p.fires)
      os << "<circle class=\"fire\" cx=\"" << centre(f.x) << "\" cy=\"" << centre(f.y)
         << "\" r=\"" << px / 3 << "\" fill=\"orangered\" fill-opacity=\"0.4\"/>\n";
    const auto& d = p.decision;
    for (int i = 0; i < d.fires; ++i)
      for (int j = 0; j < d.bases; ++j)
        for (int l = 0; l < d.drones; ++l) {
          if (!d.at(i, j, l)) continue;
          const auto& b = trace.bases[j];
          const auto& f = p.fires[i];
          os << "<line class=\"sortie\" data-drone=\"" << l << "\" x1=\"" << centre(b.x)
             << "\" y1=\"" << centre(b.y) << "\" x2=\"" << centre(f.x) << "\" y2=\"" << centre(f.y)
             << "\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n";
        }
    os << "</g>\n";
  }
  for (std::size_t j = 0; j < trace.bases.size(); ++j) {
    const auto& b = trace.bases[j];
    os << "<rect class=\"base\" x=\"" << b.x * px + 2 << "\" y=\"" << b.y * px + 2
       << "\" width=\"" << px - 4 << "\" height=\"" << px - 4 << "\" fill=\"black\"/>\n";
  }
  os << "</svg>\n";
}

RenderSummary render(const EpisodeTrace& trace, const std::string& out_dir,
                     const std::string& prefix) {
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "frames", ec);
  if (!ec) fs::create_directories(fs::path(out_dir) / "paths", ec);
  if (ec) throw std::runtime_error("cannot create '" + out_dir + "': " + ec.message());

  RenderSummary out;
  for (const auto& p : trace.periods) {
    char name[64];
    std::snprintf(name, sizeof name, "_t%02d.pgm", p.t);
    const auto path = fs::path(out_dir) / "frames" / (prefix + name);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_pgm(f, p.map);
    ++out.frames;
    out.sorties += p.decision.assignments();
  }
  const auto svg = fs::path(out_dir) / "paths" / (prefix + ".svg");
  std::ofstream f(svg);
  if (!f) throw std::runtime_error("cannot write '" + svg.string() + "'");
  write_sortie_svg(f, trace);
  return out;
}

}  // namespace wildfire
