#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string_view>

#include "reach_al/kinematics.hpp"
#include "reach_al/perception.hpp"

namespace reach_al {

/// Column order of the classifier input.
enum class Feature : std::size_t {
  kX,
  kY,
  kZ,
  kRange,
  kAzimuth,
  kElevation,
  kDepthVariance,
  kBoxArea,
  kLocalDensity,
};

inline constexpr std::size_t kFeatureDim = 9;

inline constexpr std::array<std::string_view, kFeatureDim> kFeatureNames{
    "x", "y", "z", "range", "az", "el", "sigma_z", "a_bbox", "d_local"};

/// Classifier input: arm-frame position, its polar form, and three scene
/// cues (patch depth variance, normalised box area, local depth density).
struct FeatureVector {
  std::array<double, kFeatureDim> values{};

  [[nodiscard]] double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct ImageSize {
  int width = 1920;
  int height = 1080;
};

struct FeatureOptions {
  int window = 11;              ///< side of the density neighbourhood (px)
  double density_band = 0.05;   ///< same-surface band around the patch median (m)
};

/// Population variance of the valid patch cells.
inline double patch_variance(const DepthPatch& patch) {
  double sum = 0.0;
  int n = 0;
  for (double z : patch.cells)
    if (valid_depth(z)) {
      sum += z;
      ++n;
    }
  if (n <= 1) return 0.0;
  const double mean = sum / n;
  double ss = 0.0;
  for (double z : patch.cells)
    if (valid_depth(z)) ss += (z - mean) * (z - mean);
  return ss / n;
}

/// Fraction of neighbourhood cells with a valid reading within `band` of `median`.
inline double local_density(std::span<const double> neighborhood, double median, double band) {
  if (neighborhood.empty()) return 0.0;
  std::size_t hits = 0;
  for (double z : neighborhood)
    if (valid_depth(z) && std::abs(z - median) <= band) ++hits;
  return static_cast<double>(hits) / static_cast<double>(neighborhood.size());
}

/// Requires at least one valid patch cell. `neighborhood` is the square
/// depth window around the detection; pass the 5x5 patch when no wider
/// window is available.
inline FeatureVector extract_features(const ArmPoint& p, const DepthPatch& patch, double bbox_w,
                                      double bbox_h, ImageSize image,
                                      std::span<const double> neighborhood,
                                      const FeatureOptions& opts = {}) {
  FeatureVector f;
  f[Feature::kX] = p.x;
  f[Feature::kY] = p.y;
  f[Feature::kZ] = p.z;
  f[Feature::kRange] = p.norm();
  const double az = std::atan2(p.y, p.x);
  f[Feature::kAzimuth] = az == -std::numbers::pi ? std::numbers::pi : az;
  f[Feature::kElevation] = std::atan2(p.z, std::hypot(p.x, p.y));
  f[Feature::kDepthVariance] = patch_variance(patch);
  const double area = (bbox_w * bbox_h) / (static_cast<double>(image.width) * image.height);
  f[Feature::kBoxArea] = std::clamp(area, 0.0, 1.0);
  f[Feature::kLocalDensity] = local_density(neighborhood, robust_depth(patch), opts.density_band);
  return f;
}

}  // namespace reach_al
