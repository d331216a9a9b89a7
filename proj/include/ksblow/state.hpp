#pragma once

#include "ksblow/grid.hpp"

namespace ksblow {

/// Cell density u and chemoattractant v at time t.
struct RadialState {
  RadialField u;
  RadialField v;
  double t = 0.0;
  double dt = 0.0;
  long step_count = 0;

  const RadialMesh& mesh() const { return *u.mesh; }
};

}  // namespace ksblow
