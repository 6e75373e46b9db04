#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "reach_al/kinematics.hpp"

namespace reach_al::oracles {

/// Cartesian length of one grid step: the largest displacement a single joint
/// step of the brute-force grid can cause.
inline double grid_step_length(const ManipulatorParams& m, int steps) {
  const double n = steps - 1;
  const double rho_max = m.upper_link + m.tool_offset;
  return std::max({m.aisle_travel.span() / n, m.approach_travel.span() / n,
                   rho_max * m.yaw_limits.span() / n, m.upper_link * m.pitch_limits.span() / n});
}

/// True when some point within `radius` of p gets the opposite analytic label,
/// probed on a Fibonacci sphere at several radii.
inline bool near_analytic_boundary(const ArmPoint& p, const ManipulatorParams& m, double radius,
                                   int directions = 400, int shells = 6) {
  const bool here = is_reachable(p, m).reachable;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int s = 1; s <= shells; ++s) {
    const double r = radius * s / shells;
    for (int i = 0; i < directions; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / directions;
      const double rr = std::sqrt(1.0 - z * z);
      const double a = golden * i;
      const ArmPoint q{p.x + r * rr * std::cos(a), p.y + r * rr * std::sin(a), p.z + r * z};
      if (is_reachable(q, m).reachable != here) return true;
    }
  }
  return false;
}

struct Box {
  ArmPoint lo, hi;
};

/// Axis-aligned bounding box of a point set.
inline Box bounding_box(const std::vector<ArmPoint>& pts) {
  Box b{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
  for (const auto& p : pts) {
    b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y), std::min(b.lo.z, p.z)};
    b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y), std::max(b.hi.z, p.z)};
  }
  return b;
}

}  // namespace reach_al::oracles
