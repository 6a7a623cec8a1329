#pragma once

#include <string>
#include <vector>

#include "rvm/common.hpp"

namespace rvm::features {

enum class MinutiaKind { Ending, Bifurcation };
enum class SingularityKind { Core, Delta };
enum class Channel { Ridge, Valley };

inline MinutiaKind opposite(MinutiaKind k) {
  return k == MinutiaKind::Ending ? MinutiaKind::Bifurcation
                                  : MinutiaKind::Ending;
}

struct Minutia {
  double x = 0;  // column
  double y = 0;  // row
  double theta = 0;  // ridge direction at the minutia, [0, 2*pi)
  MinutiaKind kind = MinutiaKind::Ending;
  double quality = 1.0;  // [0, 1]
};

struct Singularity {
  double x = 0;
  double y = 0;
  SingularityKind kind = SingularityKind::Core;

  // +1/2 for cores, -1/2 for deltas; kept consistent with kind.
  double index() const { return kind == SingularityKind::Core ? 0.5 : -0.5; }
};

struct Template {
  std::vector<Minutia> minutiae;
  std::vector<Singularity> singularities;
  int width = 0;
  int height = 0;
  Channel channel = Channel::Ridge;
  std::string source_id;
};

inline std::string channel_name(Channel c) {
  return c == Channel::Ridge ? "ridge" : "valley";
}

}  // namespace rvm::features
