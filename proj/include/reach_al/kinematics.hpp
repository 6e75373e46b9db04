#pragma once

// Kinematic model of the 5-DOF harvesting arm: two prismatic carriage joints
// (aisle and wall-approach), base yaw, shoulder pitch and a wrist roll that
// does not move the tool centre. The end-effector is held horizontal, which
// adds a fixed radial offset after the upper link.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "reach_al/error.hpp"

namespace reach_al {

constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Closed interval [min, max].
struct Range {
  double min = 0.0;
  double max = 0.0;

  [[nodiscard]] double span() const noexcept { return max - min; }
  [[nodiscard]] bool contains(double v, double slack = 0.0) const noexcept {
    return v >= min - slack && v <= max + slack;
  }
  [[nodiscard]] double clamp(double v) const noexcept { return std::clamp(v, min, max); }
  /// Grid value i of n evenly spaced samples including both ends.
  [[nodiscard]] double grid(int i, int n) const noexcept {
    return n <= 1 ? min : min + span() * static_cast<double>(i) / static_cast<double>(n - 1);
  }

  friend bool operator==(const Range&, const Range&) = default;
};

struct ManipulatorParams {
  double upper_link = 0.7;        ///< shoulder-to-wrist length (m)
  double tool_offset = 0.25;      ///< horizontal end-effector offset (m)
  double shoulder_height = 0.5;   ///< shoulder above the arm-frame origin (m)
  Range aisle_travel{-0.5, 0.5};  ///< prismatic joint along the aisle (m)
  Range approach_travel{0.0, 0.6};  ///< prismatic joint toward the wall (m)
  Range yaw_limits{deg_to_rad(-80.0), deg_to_rad(80.0)};
  Range pitch_limits{deg_to_rad(-45.0), deg_to_rad(60.0)};
  /// Minimum horizontal distance between the target and the carriage column (m).
  double collision_margin = 0.15;

  void validate() const {
    auto check_range = [](const Range& r, const char* name) {
      if (!(r.min <= r.max) || !std::isfinite(r.min) || !std::isfinite(r.max))
        throw ConfigError(std::string("invalid range for ") + name);
    };
    check_range(aisle_travel, "aisle travel");
    check_range(approach_travel, "approach travel");
    check_range(yaw_limits, "yaw limits");
    check_range(pitch_limits, "pitch limits");
    if (!(upper_link > 0.0)) throw ConfigError("upper link length must be positive");
    if (!(tool_offset >= 0.0)) throw ConfigError("tool offset must be non-negative");
    if (!(collision_margin >= 0.0)) throw ConfigError("collision margin must be non-negative");
    if (!std::isfinite(shoulder_height)) throw ConfigError("shoulder height must be finite");
    const double half_pi = std::numbers::pi / 2.0;
    if (!(pitch_limits.min > -half_pi && pitch_limits.max < half_pi))
      throw ConfigError("pitch limits must lie strictly inside (-90deg, 90deg)");
  }

  friend bool operator==(const ManipulatorParams&, const ManipulatorParams&) = default;
};

struct JointConfig {
  double aisle = 0.0;     ///< d1 (m)
  double approach = 0.0;  ///< d2 (m)
  double yaw = 0.0;       ///< base yaw (rad)
  double pitch = 0.0;     ///< shoulder pitch (rad)
  double roll = 0.0;      ///< wrist roll (rad); never affects position

  friend bool operator==(const JointConfig&, const JointConfig&) = default;
};

/// Cartesian point in the manipulator base frame (m).
struct ArmPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  [[nodiscard]] double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
  [[nodiscard]] bool finite() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
  friend bool operator==(const ArmPoint&, const ArmPoint&) = default;
};

inline double distance(const ArmPoint& a, const ArmPoint& b) noexcept {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

/// Horizontal reach from the carriage column for a given pitch.
inline double radial_reach(double pitch, const ManipulatorParams& params) noexcept {
  return params.upper_link * std::cos(pitch) + params.tool_offset;
}

/// Joint limits are not enforced here.
inline ArmPoint forward_kinematics(const JointConfig& q, const ManipulatorParams& params) noexcept {
  const double rho = radial_reach(q.pitch, params);
  return {q.approach + rho * std::cos(q.yaw), q.aisle + rho * std::sin(q.yaw),
          params.shoulder_height + params.upper_link * std::sin(q.pitch)};
}

inline bool within_limits(const JointConfig& q, const ManipulatorParams& params,
                          double slack = 0.0) noexcept {
  return params.aisle_travel.contains(q.aisle, slack) &&
         params.approach_travel.contains(q.approach, slack) &&
         params.yaw_limits.contains(q.yaw, slack) && params.pitch_limits.contains(q.pitch, slack);
}

struct Reachability {
  bool reachable = false;
  std::optional<JointConfig> witness;

  explicit operator bool() const noexcept { return reachable; }
};

namespace detail {

// Slack applied to the carriage rectangle when testing candidate yaw angles;
// witnesses are clamped back inside afterwards, so the FK error stays below it.
inline constexpr double kRectSlack = 1e-12;

struct CarriageAtYaw {
  double aisle;
  double approach;
};

inline CarriageAtYaw carriage_for_yaw(const ArmPoint& p, double rho, double yaw) noexcept {
  return {p.y - rho * std::sin(yaw), p.x - rho * std::cos(yaw)};
}

inline bool carriage_feasible(const ArmPoint& p, double rho, double yaw,
                              const ManipulatorParams& params) noexcept {
  const auto c = carriage_for_yaw(p, rho, yaw);
  return params.aisle_travel.contains(c.aisle, kRectSlack) &&
         params.approach_travel.contains(c.approach, kRectSlack);
}

// Yaw angles at which the carriage position crosses one of the four rectangle
// edges: x - rho*cos(yaw) = edge gives cos(yaw) = (x - edge)/rho, and
// similarly sin(yaw) = (y - edge)/rho for the aisle edges.
inline void push_edge_crossings(std::vector<double>& out, const ArmPoint& p, double rho,
                                const ManipulatorParams& params) {
  auto add_periodic = [&out](double a) {
    out.push_back(a);
    out.push_back(a + 2.0 * std::numbers::pi);
    out.push_back(a - 2.0 * std::numbers::pi);
  };
  for (double edge : {params.approach_travel.min, params.approach_travel.max}) {
    const double c = (p.x - edge) / rho;
    if (c < -1.0 - 1e-12 || c > 1.0 + 1e-12) continue;
    const double a = std::acos(std::clamp(c, -1.0, 1.0));
    add_periodic(a);
    add_periodic(-a);
  }
  for (double edge : {params.aisle_travel.min, params.aisle_travel.max}) {
    const double s = (p.y - edge) / rho;
    if (s < -1.0 - 1e-12 || s > 1.0 + 1e-12) continue;
    const double a = std::asin(std::clamp(s, -1.0, 1.0));
    add_periodic(a);
    add_periodic(std::numbers::pi - a);
  }
}

}  // namespace detail

/// Closed-form reachability test, used as the labelling oracle.
///
/// Pitch is fixed by the target height, which fixes the horizontal reach rho.
/// The carriage must then sit on the circle of radius rho around the target's
/// (x, y), inside the travel rectangle, at a bearing inside the yaw limits.
/// The feasible yaw set is a union of intervals whose ends are the yaw limits
/// and the edge crossings; each piece is classified at its midpoint.
///
/// The witness minimises |yaw|, then the aisle travel, then the approach travel.
inline Reachability is_reachable(const ArmPoint& p, const ManipulatorParams& params) {
  if (!p.finite()) return {};
  const double s = (p.z - params.shoulder_height) / params.upper_link;
  if (s < -1.0 || s > 1.0) return {};
  const double pitch_raw = std::asin(s);
  if (!params.pitch_limits.contains(pitch_raw, 1e-12)) return {};
  const double pitch = params.pitch_limits.clamp(pitch_raw);
  const double rho = radial_reach(pitch, params);
  if (rho < params.collision_margin) return {};

  const Range& yaw = params.yaw_limits;

  if (rho == 0.0) {
    if (!params.aisle_travel.contains(p.y) || !params.approach_travel.contains(p.x)) return {};
    return {true, JointConfig{p.y, p.x, yaw.clamp(0.0), pitch, 0.0}};
  }

  std::vector<double> cuts{yaw.min, yaw.max};
  detail::push_edge_crossings(cuts, p, rho, params);
  std::erase_if(cuts, [&](double a) { return a < yaw.min || a > yaw.max; });
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Candidate witnesses: every feasible cut point, plus 0 when it lies in a
  // feasible piece.
  std::vector<double> candidates;
  for (double a : cuts)
    if (detail::carriage_feasible(p, rho, a, params)) candidates.push_back(a);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    if (lo < 0.0 && hi > 0.0 && detail::carriage_feasible(p, rho, 0.5 * (lo + hi), params))
      candidates.push_back(0.0);
  }
  if (candidates.empty()) return {};

  std::optional<JointConfig> best;
  for (double a : candidates) {
    const auto c = detail::carriage_for_yaw(p, rho, a);
    JointConfig q{params.aisle_travel.clamp(c.aisle), params.approach_travel.clamp(c.approach), a,
                  pitch, 0.0};
    if (!best) {
      best = q;
      continue;
    }
    const auto key = [](const JointConfig& j) {
      return std::tuple{std::abs(j.yaw), j.aisle, j.approach};
    };
    if (key(q) < key(*best)) best = q;
  }
  return {true, best};
}

struct GridSpec {
  int steps_per_joint = 40;
  double tolerance = 0.02;  ///< match distance (m)
};

/// Brute-force reachability oracle: enumerates the joint grid once, keeps the
/// FK images that satisfy the collision constraint, and answers queries by
/// nearest-point search in a voxel index. Independent of is_reachable.
class BruteForceOracle {
 public:
  BruteForceOracle(const ManipulatorParams& params, GridSpec grid = {})
      : grid_(grid) {
    params.validate();
    if (grid.steps_per_joint < 1) throw UsageError("grid resolution must be positive");
    if (!(grid.tolerance > 0.0)) throw UsageError("tolerance must be positive");
    const int n = grid.steps_per_joint;
    cells_.reserve(static_cast<std::size_t>(n) * n * n * n);
    for (int ip = 0; ip < n; ++ip) {
      const double pitch = params.pitch_limits.grid(ip, n);
      for (int iy = 0; iy < n; ++iy) {
        const double yaw = params.yaw_limits.grid(iy, n);
        for (int ia = 0; ia < n; ++ia) {
          const double aisle = params.aisle_travel.grid(ia, n);
          for (int id = 0; id < n; ++id) {
            const JointConfig q{aisle, params.approach_travel.grid(id, n), yaw, pitch, 0.0};
            const ArmPoint p = forward_kinematics(q, params);
            const double dx = p.x - q.approach;
            const double dy = p.y - q.aisle;
            if (std::sqrt(dx * dx + dy * dy) < params.collision_margin) continue;
            cells_.push_back({voxel_key(p), {p.x, p.y, p.z}});
          }
        }
      }
    }
    std::sort(cells_.begin(), cells_.end(),
              [](const Entry& a, const Entry& b) { return a.key < b.key; });
  }

  [[nodiscard]] bool operator()(const ArmPoint& p) const {
    if (!p.finite()) return false;
    const auto [cx, cy, cz] = voxel_coords(p);
    const double tol2 = grid_.tolerance * grid_.tolerance;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const std::uint64_t key = pack(cx + dx, cy + dy, cz + dz);
          auto [first, last] =
              std::equal_range(cells_.begin(), cells_.end(), Entry{key, {}},
                               [](const Entry& a, const Entry& b) { return a.key < b.key; });
          for (auto it = first; it != last; ++it) {
            const double ex = it->pos[0] - p.x;
            const double ey = it->pos[1] - p.y;
            const double ez = it->pos[2] - p.z;
            if (ex * ex + ey * ey + ez * ez <= tol2) return true;
          }
        }
    return false;
  }

  [[nodiscard]] std::size_t grid_points() const noexcept { return cells_.size(); }
  [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }

 private:
  struct Entry {
    std::uint64_t key;
    std::array<double, 3> pos;
  };

  [[nodiscard]] std::array<std::int64_t, 3> voxel_coords(const ArmPoint& p) const {
    const double inv = 1.0 / grid_.tolerance;
    auto c = [inv](double v) {
      return static_cast<std::int64_t>(std::floor(std::clamp(v * inv, -1e6, 1e6)));
    };
    return {c(p.x), c(p.y), c(p.z)};
  }
  static std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) noexcept {
    constexpr std::int64_t kBias = 1 << 20;
    auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v + kBias) & 0x1fffffULL; };
    return (u(x) << 42) | (u(y) << 21) | u(z);
  }
  [[nodiscard]] std::uint64_t voxel_key(const ArmPoint& p) const {
    const auto [x, y, z] = voxel_coords(p);
    return pack(x, y, z);
  }

  GridSpec grid_;
  std::vector<Entry> cells_;
};

/// One-shot brute-force query; builds the full grid, so prefer
/// BruteForceOracle for repeated queries.
inline bool is_reachable_bruteforce(const ArmPoint& p, const ManipulatorParams& params,
                                    GridSpec grid = {}) {
  return BruteForceOracle(params, grid)(p);
}

/// FK images of the full joint grid (collision constraint applied), keeping the
/// first point that lands in each 1 cm voxel. Wrist roll is not enumerated.
inline std::vector<ArmPoint> sample_envelope(const ManipulatorParams& params, int steps_per_joint,
                                             double voxel = 0.01) {
  params.validate();
  if (steps_per_joint < 2) throw UsageError("envelope sampling needs at least 2 steps per joint");
  const int n = steps_per_joint;
  std::vector<ArmPoint> out;
  std::unordered_set<std::uint64_t> seen;
  auto key = [voxel](const ArmPoint& p) {
    auto c = [voxel](double v) {
      return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / voxel)) + (1 << 20)) &
             0x1fffffULL;
    };
    return (c(p.x) << 42) | (c(p.y) << 21) | c(p.z);
  };
  for (int ip = 0; ip < n; ++ip)
    for (int iy = 0; iy < n; ++iy)
      for (int ia = 0; ia < n; ++ia)
        for (int id = 0; id < n; ++id) {
          const JointConfig q{params.aisle_travel.grid(ia, n), params.approach_travel.grid(id, n),
                              params.yaw_limits.grid(iy, n), params.pitch_limits.grid(ip, n), 0.0};
          const ArmPoint p = forward_kinematics(q, params);
          if (std::hypot(p.x - q.approach, p.y - q.aisle) < params.collision_margin) continue;
          if (seen.insert(key(p)).second) out.push_back(p);
        }
  return out;
}

}  // namespace reach_al
