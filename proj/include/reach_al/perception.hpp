#pragma once

// Pixel-to-point mapping: RGB detection centre -> depth pixel -> median patch
// depth -> pinhole back-projection -> rigid transform into the arm frame.

#include <Eigen/Core>
#include <Eigen/LU>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "reach_al/error.hpp"
#include "reach_al/kinematics.hpp"

namespace reach_al {

struct CameraIntrinsics {
  double fx = 365.0;
  double fy = 365.0;
  double cx = 256.0;
  double cy = 212.0;
  int rgb_width = 1920;
  int rgb_height = 1080;
  int depth_width = 512;
  int depth_height = 424;

  void validate() const {
    if (rgb_width <= 0 || rgb_height <= 0 || depth_width <= 0 || depth_height <= 0)
      throw ConfigError("camera resolutions must be positive");
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("focal lengths must be positive");
    if (!(cx >= 0.0 && cx < depth_width) || !(cy >= 0.0 && cy < depth_height))
      throw ConfigError("principal point must lie inside the depth image");
  }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Camera-to-arm rigid transform: p_arm = R * p_cam + t.
struct Extrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation{0.76, 0.44, 0.485};

  void validate(double tol = 1e-9) const {
    if (!rotation.allFinite() || !translation.allFinite())
      throw ConfigError("extrinsics must be finite");
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol)
      throw ConfigError("rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > tol)
      throw ConfigError("rotation determinant must be +1");
  }

  /// Camera looking along the arm +x axis (toward the fruit wall), image
  /// right = arm -y, image down = arm -z, tilted up by `pitch` and turned by
  /// `yaw` about the arm z axis.
  static Eigen::Matrix3d forward_mount(double pitch, double yaw) {
    Eigen::Matrix3d base;
    base << 0, 0, 1, -1, 0, 0, 0, -1, 0;
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cyaw = std::cos(yaw), syaw = std::sin(yaw);
    Eigen::Matrix3d tilt;
    tilt << cp, 0, -sp, 0, 1, 0, sp, 0, cp;
    Eigen::Matrix3d turn;
    turn << cyaw, -syaw, 0, syaw, cyaw, 0, 0, 0, 1;
    return turn * tilt * base;
  }
};

inline constexpr int kPatchSide = 5;
inline constexpr int kPatchCells = kPatchSide * kPatchSide;
inline constexpr double kMaxValidDepth = 20.0;

/// A reading is usable when finite, positive and inside sensor range.
inline bool valid_depth(double z) noexcept {
  return std::isfinite(z) && z > 0.0 && z < kMaxValidDepth;
}

/// 5x5 depth readings (m), row-major. 0 or non-finite marks a hole.
struct DepthPatch {
  std::array<double, kPatchCells> cells{};

  [[nodiscard]] double at(int row, int col) const { return cells[row * kPatchSide + col]; }
  [[nodiscard]] int valid_count() const noexcept {
    return static_cast<int>(std::count_if(cells.begin(), cells.end(), valid_depth));
  }

  static DepthPatch constant(double z) {
    DepthPatch p;
    p.cells.fill(z);
    return p;
  }

  friend bool operator==(const DepthPatch&, const DepthPatch&) = default;
};

struct PixelCoord {
  int u = 0;
  int v = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Camera-frame point (m); z is the measured depth.
struct CameraPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Per-axis scaling from RGB to depth resolution, rounded and clamped.
inline PixelCoord map_rgb_to_depth_pixel(double u, double v, const CameraIntrinsics& intr) {
  if (!(u >= 0.0 && u < intr.rgb_width && v >= 0.0 && v < intr.rgb_height))
    throw BoundaryError("detection centre outside the RGB image");
  const double su = static_cast<double>(intr.depth_width) / intr.rgb_width;
  const double sv = static_cast<double>(intr.depth_height) / intr.rgb_height;
  const int ud = std::clamp(static_cast<int>(std::lround(u * su)), 0, intr.depth_width - 1);
  const int vd = std::clamp(static_cast<int>(std::lround(v * sv)), 0, intr.depth_height - 1);
  return {ud, vd};
}

/// Median of the valid patch cells; mean of the central pair for even counts.
inline double robust_depth(const DepthPatch& patch) {
  std::array<double, kPatchCells> buf{};
  std::size_t n = 0;
  for (double z : patch.cells)
    if (valid_depth(z)) buf[n++] = z;
  if (n == 0) throw NoDepthError("depth patch has no valid readings");
  std::sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n));
  return n % 2 == 1 ? buf[n / 2] : 0.5 * (buf[n / 2 - 1] + buf[n / 2]);
}

/// Pinhole back-projection of depth-image pixel (u, v) at depth z.
inline CameraPoint back_project(double u, double v, double z, const CameraIntrinsics& intr) {
  if (!(z > 0.0) || !std::isfinite(z)) throw NoDepthError("non-positive depth");
  return {(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}

/// Inverse of back_project; returns the (sub-pixel) depth-image coordinates.
inline std::array<double, 2> project(const CameraPoint& p, const CameraIntrinsics& intr) {
  return {p.x * intr.fx / p.z + intr.cx, p.y * intr.fy / p.z + intr.cy};
}

inline ArmPoint camera_to_arm(const CameraPoint& p, const Extrinsics& ext) {
  const Eigen::Vector3d a = ext.rotation * Eigen::Vector3d{p.x, p.y, p.z} + ext.translation;
  return {a.x(), a.y(), a.z()};
}

inline CameraPoint arm_to_camera(const ArmPoint& p, const Extrinsics& ext) {
  const Eigen::Vector3d c =
      ext.rotation.transpose() * (Eigen::Vector3d{p.x, p.y, p.z} - ext.translation);
  return {c.x(), c.y(), c.z()};
}

}  // namespace reach_al
