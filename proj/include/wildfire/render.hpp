#pragma once

#include <iosfwd>
#include <string>

#include "wildfire/rollout.hpp"

namespace wildfire {

// Binary greyscale frame, brightness proportional to intensity (cap 3).
void write_pgm(std::ostream& os, const FireMap& map);

// Bases, fire points and one straight line per sortie, grouped per period.
void write_sortie_svg(std::ostream& os, const EpisodeTrace& trace);

struct RenderSummary {
  int frames = 0;
  int sorties = 0;
};

// Writes <out>/frames/<prefix>_tNN.pgm and <out>/paths/<prefix>.svg.
// Throws std::runtime_error if the directory cannot be written.
RenderSummary render(const EpisodeTrace& trace, const std::string& out_dir,
                     const std::string& prefix = "episode");

}  // namespace wildfire
