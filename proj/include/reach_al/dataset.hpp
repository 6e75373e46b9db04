#pragma once

// Candidate pools: synthetic orchard scenes, detection-file I/O, oracle
// labelling through the perception chain, and train/test/pool splits.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "reach_al/error.hpp"
#include "reach_al/features.hpp"
#include "reach_al/forest.hpp"
#include "reach_al/kinematics.hpp"
#include "reach_al/perception.hpp"
#include "reach_al/rng.hpp"

namespace reach_al {

/// One detected fruit. `window` optionally holds a wider square depth
/// neighbourhood (row-major, centred on the patch); it is empty for
/// detections that only carry the 5x5 patch.
struct DetectionRecord {
  std::string image_id;
  double u = 0.0;  ///< bbox centre, RGB px
  double v = 0.0;
  double bbox_w = 0.0;
  double bbox_h = 0.0;
  double confidence = 0.0;
  DepthPatch patch;
  std::vector<double> window;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct LabeledSample {
  FeatureVector features;
  Label label = kUnreachable;
  ArmPoint arm_point;
  std::size_t record_index = 0;  ///< position in the labelled record list
};

// ---------------------------------------------------------------------------
// Synthetic scenes

struct SceneConfig {
  int n_images = 900;
  double apples_per_image = 8.0;    ///< Poisson mean
  double wall_distance = 0.75;      ///< mean camera depth of the fruit wall (m)
  double wall_depth_jitter = 0.2;   ///< per-apple depth std (m)
  double image_depth_jitter = 0.05; ///< per-image wall offset std, platform motion (m)
  double lateral_spread = 0.6;      ///< std of camera-frame x/y placement (m)
  double depth_noise_std = 0.01;    ///< per-cell sensor noise std (m)
  double dropout_prob = 0.05;       ///< per-cell invalid-reading probability
  double cluster_prob = 0.3;        ///< probability an apple seeds a 2-4 apple cluster
  double occluder_prob = 0.15;      ///< probability a detection is partly covered by foliage
  double apple_diameter = 0.08;     ///< (m)
  int window = 11;                  ///< side of the stored depth neighbourhood (px)
  std::uint64_t seed = 7;

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    prob(dropout_prob, "scene.dropout_prob");
    prob(cluster_prob, "scene.cluster_prob");
    prob(occluder_prob, "scene.occluder_prob");
    if (!(wall_distance > 0.0)) throw ConfigError("scene.wall_distance must be positive");
    if (!(wall_depth_jitter >= 0.0) || !(image_depth_jitter >= 0.0) || !(lateral_spread >= 0.0) ||
        !(depth_noise_std >= 0.0))
      throw ConfigError("scene standard deviations must be non-negative");
    if (n_images < 0 || !(apples_per_image >= 0.0)) throw ConfigError("scene sizes must be >= 0");
    if (window < kPatchSide || window % 2 == 0)
      throw ConfigError("scene.window must be odd and at least 5");
    if (!(apple_diameter > 0.0)) throw ConfigError("scene.apple_diameter must be positive");
  }

  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

namespace detail {

struct SceneApple {
  double x, y, z;  ///< camera frame, front surface (m)
  double ud, vd;   ///< sub-pixel depth-image position
  double radius_px;
};

inline std::string image_name(int i) {
  std::array<char, 16> buf{};
  std::snprintf(buf.data(), buf.size(), "img%05d", i);
  return buf.data();
}

}  // namespace detail

/// Synthetic RGB-D detections. Each image sees a fruit wall at a jittered
/// depth; apples are placed around the optical axis (some in clusters),
/// rendered into a z-buffered depth neighbourhood with background canopy and
/// occasional foliage, then corrupted by sensor noise and dropout. The
/// detection carries the RGB-scaled box centre and size and a confidence
/// above the 0.5 detector threshold. Deterministic in `cfg.seed`.
inline std::vector<DetectionRecord> generate_scene(const SceneConfig& cfg,
                                                   const CameraIntrinsics& intr) {
  cfg.validate();
  intr.validate();
  const double su = static_cast<double>(intr.rgb_width) / intr.depth_width;
  const double sv = static_cast<double>(intr.rgb_height) / intr.depth_height;
  const int half = cfg.window / 2;
  const int patch_off = half - kPatchSide / 2;

  std::vector<DetectionRecord> out;
  for (int img = 0; img < cfg.n_images; ++img) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(img)));
    const double wall = cfg.wall_distance + rng.normal(0.0, cfg.image_depth_jitter);
    const auto n_apples = rng.poisson(cfg.apples_per_image);

    std::vector<detail::SceneApple> apples;
    // Only apples whose whole depth neighbourhood is in view are kept, so
    // every Poisson draw becomes one detection.
    auto place = [&](double x, double y, double z) {
      if (!(z > 0.2)) return;
      const double ud = x * intr.fx / z + intr.cx;
      const double vd = y * intr.fy / z + intr.cy;
      const long cu = std::lround(ud);
      const long cv = std::lround(vd);
      if (cu - half < 0 || cv - half < 0 || cu + half >= intr.depth_width || cv + half >= intr.depth_height) return;
      apples.push_back({x, y, z, ud, vd, 0.5 * cfg.apple_diameter * intr.fx / z});
    };
    while (apples.size() < n_apples) {
      const double z = wall + rng.normal(0.0, cfg.wall_depth_jitter);
      const double x = rng.normal(0.0, cfg.lateral_spread);
      const double y = rng.normal(0.0, cfg.lateral_spread);
      const std::size_t before = apples.size();
      place(x, y, z);
      if (apples.size() == before) continue;
      if (rng.bernoulli(cfg.cluster_prob)) {
        const auto extra = 1 + rng.below(3);
        for (std::uint64_t k = 0; k < extra && apples.size() < n_apples; ++k)
          place(x + rng.normal(0.0, cfg.apple_diameter), y + rng.normal(0.0, cfg.apple_diameter),
                z + rng.normal(0.0, 0.5 * cfg.apple_diameter));
      }
    }

    const double background = wall + 0.6;
    for (const auto& a : apples) {
      const int cu = static_cast<int>(std::lround(a.ud));
      const int cv = static_cast<int>(std::lround(a.vd));
      const bool occluded = rng.bernoulli(cfg.occluder_prob);
      const double leaf_depth = a.z - rng.uniform(0.05, 0.25);
      const double leaf_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double leaf_offset = rng.uniform(0.0, a.radius_px);

      DetectionRecord rec;
      rec.image_id = detail::image_name(img);
      rec.window.resize(static_cast<std::size_t>(cfg.window * cfg.window));
      for (int r = -half; r <= half; ++r)
        for (int c = -half; c <= half; ++c) {
          const double pu = cu + c;
          const double pv = cv + r;
          double depth = background + rng.normal(0.0, 0.15);
          for (const auto& other : apples) {
            const double dx = pu - other.ud;
            const double dy = pv - other.vd;
            if (dx * dx + dy * dy <= other.radius_px * other.radius_px && other.z < depth)
              depth = other.z;
          }
          if (occluded) {
            // foliage covers a half-plane through the fruit
            const double side = (pu - a.ud) * std::cos(leaf_angle) + (pv - a.vd) * std::sin(leaf_angle);
            if (side > leaf_offset) depth = std::min(depth, leaf_depth);
          }
          depth += rng.normal(0.0, cfg.depth_noise_std);
          if (rng.bernoulli(cfg.dropout_prob) || !(depth > 0.0)) depth = 0.0;
          rec.window[static_cast<std::size_t>((r + half) * cfg.window + (c + half))] = depth;
        }
      for (int r = 0; r < kPatchSide; ++r)
        for (int c = 0; c < kPatchSide; ++c)
          rec.patch.cells[static_cast<std::size_t>(r * kPatchSide + c)] =
              rec.window[static_cast<std::size_t>((r + patch_off) * cfg.window + (c + patch_off))];

      rec.u = std::clamp(a.ud * su, 0.0, std::nextafter(static_cast<double>(intr.rgb_width), 0.0));
      rec.v = std::clamp(a.vd * sv, 0.0, std::nextafter(static_cast<double>(intr.rgb_height), 0.0));
      const double scale = 1.0 + rng.normal(0.0, 0.05);
      rec.bbox_w = std::max(1.0, 2.0 * a.radius_px * su * scale);
      rec.bbox_h = std::max(1.0, 2.0 * a.radius_px * sv * scale);
      rec.confidence = rng.uniform(0.5, 1.0);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection files

inline constexpr std::string_view kDetectionBaseColumns = "image_id,u,v,bbox_w,bbox_h,confidence";

inline std::string detection_header(std::size_t window_cells = 0) {
  std::string h(kDetectionBaseColumns);
  std::array<char, 32> buf{};
  for (int i = 0; i < kPatchCells; ++i) {
    std::snprintf(buf.data(), buf.size(), ",d%02d", i);
    h += buf.data();
  }
  for (std::size_t i = 0; i < window_cells; ++i) {
    std::snprintf(buf.data(), buf.size(), ",w%03zu", i);
    h += buf.data();
  }
  return h;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline bool parse_number(std::string_view s, double& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Writes records in the detection-file format. The `w###` window columns
/// are emitted only when every record carries a window of the same size.
inline void write_detections(std::ostream& os, const std::vector<DetectionRecord>& records) {
  std::size_t window_cells = records.empty() ? 0 : records.front().window.size();
  for (const auto& r : records)
    if (r.window.size() != window_cells) window_cells = 0;
  os << detection_header(window_cells) << '\n';
  for (const auto& r : records) {
    if (r.image_id.find_first_of(",\n\r") != std::string::npos)
      throw UsageError("image_id may not contain commas or newlines: " + r.image_id);
    os << r.image_id << ',' << detail::format_double(r.u) << ',' << detail::format_double(r.v) << ','
       << detail::format_double(r.bbox_w) << ',' << detail::format_double(r.bbox_h) << ','
       << detail::format_double(r.confidence);
    for (double d : r.patch.cells) os << ',' << detail::format_double(d);
    for (std::size_t i = 0; i < window_cells; ++i) os << ',' << detail::format_double(r.window[i]);
    os << '\n';
  }
}

inline void write_detections(const std::string& path, const std::vector<DetectionRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestError("cannot open " + path + " for writing");
  write_detections(os, records);
  if (!os) throw IngestError("write failed: " + path);
}

struct IngestResult {
  std::vector<DetectionRecord> records;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;  ///< first few skip reasons
  bool has_window = false;
};

/// Reads a detection file. Rows with unparsable fields, invalid box or
/// confidence values, or a centre outside the RGB image are skipped and
/// counted; a missing file or a wrong header is fatal.
inline IngestResult ingest_detections(std::istream& is, ImageSize rgb = {}) {
  std::string line;
  if (!std::getline(is, line)) throw IngestError("detection file is empty (missing header)");
  detail::strip_cr(line);
  const std::string base = detection_header(0);
  if (line.compare(0, base.size(), base) != 0)
    throw IngestError("malformed detection header: expected '" + base + "'");
  std::size_t window_cells = 0;
  if (line.size() > base.size()) {
    const auto cols = detail::split_csv(std::string_view(line).substr(base.size() + 1));
    window_cells = cols.size();
    if (line[base.size()] != ',' || line != detection_header(window_cells))
      throw IngestError("malformed detection header: unexpected trailing columns");
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(window_cells))));
    if (side * side != window_cells || side % 2 == 0 || side < kPatchSide)
      throw IngestError("window columns must form an odd square of side >= 5");
  }
  const std::size_t n_cols = 6 + kPatchCells + window_cells;

  IngestResult result;
  result.has_window = window_cells > 0;
  std::size_t line_no = 1;
  auto skip = [&](const std::string& why) {
    ++result.skipped;
    if (result.warnings.size() < 20)
      result.warnings.push_back("line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto cols = detail::split_csv(line);
    if (cols.size() != n_cols) {
      skip("expected " + std::to_string(n_cols) + " fields, got " + std::to_string(cols.size()));
      continue;
    }
    DetectionRecord rec;
    rec.image_id = std::string(cols[0]);
    std::array<double, 5> head{};
    bool ok = true;
    for (std::size_t i = 0; i < head.size() && ok; ++i) ok = detail::parse_number(cols[i + 1], head[i]);
    for (int i = 0; i < kPatchCells && ok; ++i)
      ok = detail::parse_number(cols[6 + static_cast<std::size_t>(i)], rec.patch.cells[static_cast<std::size_t>(i)]);
    rec.window.resize(window_cells);
    for (std::size_t i = 0; i < window_cells && ok; ++i)
      ok = detail::parse_number(cols[6 + kPatchCells + i], rec.window[i]);
    if (!ok) {
      skip("unparsable field");
      continue;
    }
    std::tie(rec.u, rec.v, rec.bbox_w, rec.bbox_h, rec.confidence) =
        std::tuple{head[0], head[1], head[2], head[3], head[4]};
    if (!(rec.confidence >= 0.0 && rec.confidence <= 1.0) || !(rec.bbox_w > 0.0) ||
        !(rec.bbox_h > 0.0)) {
      skip("confidence or box size out of range");
      continue;
    }
    if (!(rec.u >= 0.0 && rec.u < rgb.width && rec.v >= 0.0 && rec.v < rgb.height)) {
      skip("centre outside the image");
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

inline IngestResult ingest_detections(const std::string& path, ImageSize rgb = {}) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestError("cannot open detection file " + path);
  return ingest_detections(is, rgb);
}

// ---------------------------------------------------------------------------
// Oracle labelling

struct LabelResult {
  std::vector<LabeledSample> samples;
  std::size_t dropped_boundary = 0;
  std::size_t dropped_depth = 0;
  /// Records whose density feature fell back to the 5x5 patch.
  std::size_t patch_density_fallbacks = 0;

  [[nodiscard]] std::size_t dropped() const noexcept { return dropped_boundary + dropped_depth; }
};

/// Arm-frame position of a detection; throws BoundaryError / NoDepthError.
inline ArmPoint locate(const DetectionRecord& rec, const CameraIntrinsics& intr,
                       const Extrinsics& ext) {
  const PixelCoord px = map_rgb_to_depth_pixel(rec.u, rec.v, intr);
  const double z = robust_depth(rec.patch);
  return camera_to_arm(back_project(px.u, px.v, z, intr), ext);
}

inline LabelResult label_with_oracle(const std::vector<DetectionRecord>& records,
                                     const CameraIntrinsics& intr, const Extrinsics& ext,
                                     const ManipulatorParams& params,
                                     const FeatureOptions& opts = {}) {
  LabelResult out;
  out.samples.reserve(records.size());
  const ImageSize rgb{intr.rgb_width, intr.rgb_height};
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    ArmPoint p;
    try {
      p = locate(rec, intr, ext);
    } catch (const BoundaryError&) {
      ++out.dropped_boundary;
      continue;
    } catch (const NoDepthError&) {
      ++out.dropped_depth;
      continue;
    }
    std::span<const double> neighborhood(rec.window);
    if (neighborhood.empty()) {
      neighborhood = std::span<const double>(rec.patch.cells);
      ++out.patch_density_fallbacks;
    } else if (opts.window > 0 && static_cast<std::size_t>(opts.window * opts.window) < rec.window.size()) {
      // Use the central opts.window x opts.window sub-square.
      const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rec.window.size()))));
      thread_local std::vector<double> sub;
      sub.clear();
      const int off = (side - opts.window) / 2;
      for (int r = 0; r < opts.window; ++r)
        for (int c = 0; c < opts.window; ++c)
          sub.push_back(rec.window[static_cast<std::size_t>((r + off) * side + c + off)]);
      neighborhood = sub;
    }
    LabeledSample s;
    s.features = extract_features(p, rec.patch, rec.bbox_w, rec.bbox_h, rgb, neighborhood, opts);
    s.label = is_reachable(p, params) ? kReachable : kUnreachable;
    s.arm_point = p;
    s.record_index = i;
    out.samples.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labelled-sample cache: detection columns, then x,y,z,label, then the
// remaining feature columns.

inline std::string labeled_header() {
  std::string h = detection_header(0) + ",x,y,z,label";
  for (std::size_t i = 3; i < kFeatureDim; ++i) h += "," + std::string(kFeatureNames[i]);
  return h;
}

inline void write_labeled(std::ostream& os, const std::vector<DetectionRecord>& records,
                          const std::vector<LabeledSample>& samples) {
  os << labeled_header() << '\n';
  for (const auto& s : samples) {
    const auto& r = records.at(s.record_index);
    os << r.image_id << ',' << detail::format_double(r.u) << ',' << detail::format_double(r.v) << ','
       << detail::format_double(r.bbox_w) << ',' << detail::format_double(r.bbox_h) << ','
       << detail::format_double(r.confidence);
    for (double d : r.patch.cells) os << ',' << detail::format_double(d);
    os << ',' << detail::format_double(s.arm_point.x) << ',' << detail::format_double(s.arm_point.y)
       << ',' << detail::format_double(s.arm_point.z) << ',' << s.label;
    for (std::size_t i = 3; i < kFeatureDim; ++i) os << ',' << detail::format_double(s.features.values[i]);
    os << '\n';
  }
}

struct LabeledFile {
  std::vector<DetectionRecord> records;
  std::vector<LabeledSample> samples;
  std::size_t skipped = 0;
};

inline LabeledFile read_labeled(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IngestError("labelled-sample file is empty");
  detail::strip_cr(line);
  if (line != labeled_header()) throw IngestError("malformed labelled-sample header");
  const std::size_t n_cols = 6 + kPatchCells + 4 + (kFeatureDim - 3);
  LabeledFile out;
  while (std::getline(is, line)) {
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto cols = detail::split_csv(line);
    if (cols.size() != n_cols) {
      ++out.skipped;
      continue;
    }
    std::vector<double> nums(n_cols - 1);
    bool ok = true;
    for (std::size_t i = 1; i < n_cols && ok; ++i) ok = detail::parse_number(cols[i], nums[i - 1]);
    const double label = ok ? nums[5 + kPatchCells + 3] : -1.0;
    if (!ok || (label != 0.0 && label != 1.0)) {
      ++out.skipped;
      continue;
    }
    DetectionRecord rec;
    rec.image_id = std::string(cols[0]);
    rec.u = nums[0];
    rec.v = nums[1];
    rec.bbox_w = nums[2];
    rec.bbox_h = nums[3];
    rec.confidence = nums[4];
    std::copy_n(nums.begin() + 5, kPatchCells, rec.patch.cells.begin());
    LabeledSample s;
    const std::size_t base = 5 + kPatchCells;
    s.arm_point = {nums[base], nums[base + 1], nums[base + 2]};
    s.label = static_cast<Label>(label);
    s.features.values[0] = s.arm_point.x;
    s.features.values[1] = s.arm_point.y;
    s.features.values[2] = s.arm_point.z;
    for (std::size_t i = 3; i < kFeatureDim; ++i) s.features.values[i] = nums[base + 4 + (i - 3)];
    s.record_index = out.records.size();
    out.records.push_back(std::move(rec));
    out.samples.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

/// Unlabelled pool whose labels are only handed out through reveal().
class HiddenPool {
 public:
  HiddenPool() = default;
  HiddenPool(std::vector<FeatureVector> features, std::vector<Label> labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.size() != labels_.size()) throw UsageError("pool features/labels size mismatch");
  }

  [[nodiscard]] std::size_t size() const noexcept { return features_.size(); }
  [[nodiscard]] const FeatureVector& features(std::size_t i) const { return features_.at(i); }
  [[nodiscard]] const std::vector<FeatureVector>& all_features() const noexcept { return features_; }
  /// Oracle query.
  [[nodiscard]] Label reveal(std::size_t i) const { return labels_.at(i); }

 private:
  std::vector<FeatureVector> features_;
  std::vector<Label> labels_;
};

struct PoolSplit {
  std::vector<LabeledSample> labeled;  ///< initial L
  HiddenPool unlabeled;                ///< U
  std::vector<LabeledSample> test;
  /// Provenance of each U entry: index into samples, or samples.size() + k for candidate k.
  std::vector<std::size_t> pool_source;
  std::vector<std::size_t> labeled_source;
  std::vector<std::size_t> test_source;
};

template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

/// Shuffles `samples`, holds out round(test_frac * n) as the test set, takes
/// `init_size` of the rest as L (swapping in one sample of the missing class
/// when L would be single-class), and pools the remainder with `candidates`
/// (shuffled together) as U.
inline PoolSplit make_splits(const std::vector<LabeledSample>& samples,
                             const std::vector<LabeledSample>& candidates, double test_frac,
                             std::size_t init_size, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  const std::size_t n = samples.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(n)));
  if (init_size > n - n_test)
    throw ConfigError("initial labelled size " + std::to_string(init_size) + " exceeds the " +
                      std::to_string(n - n_test) + " non-test samples");

  Rng rng(derive_seed(seed, "split"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  seeded_shuffle(order, rng);

  PoolSplit split;
  split.test_source.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());

  // Stratify: L gets at least one sample of each class when available.
  if (init_size >= 2) {
    auto has = [&](Label y) {
      return std::any_of(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(init_size),
                         [&](std::size_t i) { return samples[i].label == y; });
    };
    for (Label y : {kUnreachable, kReachable}) {
      if (has(y)) continue;
      const auto it = std::find_if(rest.begin() + static_cast<std::ptrdiff_t>(init_size), rest.end(),
                                   [&](std::size_t i) { return samples[i].label == y; });
      if (it != rest.end()) std::iter_swap(rest.begin() + static_cast<std::ptrdiff_t>(init_size) - 1, it);
    }
  }
  split.labeled_source.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(init_size));
  split.pool_source.assign(rest.begin() + static_cast<std::ptrdiff_t>(init_size), rest.end());
  for (std::size_t k = 0; k < candidates.size(); ++k) split.pool_source.push_back(n + k);
  seeded_shuffle(split.pool_source, rng);

  for (auto i : split.test_source) split.test.push_back(samples[i]);
  for (auto i : split.labeled_source) split.labeled.push_back(samples[i]);
  std::vector<FeatureVector> pool_x;
  std::vector<Label> pool_y;
  pool_x.reserve(split.pool_source.size());
  pool_y.reserve(split.pool_source.size());
  for (auto i : split.pool_source) {
    const auto& s = i < n ? samples[i] : candidates[i - n];
    pool_x.push_back(s.features);
    pool_y.push_back(s.label);
  }
  split.unlabeled = HiddenPool(std::move(pool_x), std::move(pool_y));
  return split;
}

// ---------------------------------------------------------------------------
// Benchmark assembly

struct BenchmarkConfig {
  SceneConfig scene;
  std::size_t n_samples = 1000;    ///< labelled dataset (test + initial L source)
  std::size_t n_candidates = 5000; ///< additional unlabelled candidates
};

struct Benchmark {
  std::vector<DetectionRecord> records;
  LabelResult labeled;
  std::vector<LabeledSample> samples;
  std::vector<LabeledSample> candidates;

  [[nodiscard]] double reachable_fraction() const {
    std::size_t r = 0, n = 0;
    for (const auto* set : {&samples, &candidates})
      for (const auto& s : *set) {
        r += s.label == kReachable ? 1 : 0;
        ++n;
      }
    return n == 0 ? 0.0 : static_cast<double>(r) / static_cast<double>(n);
  }
};

/// Generates a scene, labels it, and takes the first retained detections as
/// the labelled dataset and the next ones as candidates.
inline Benchmark make_benchmark(const BenchmarkConfig& cfg, const CameraIntrinsics& intr,
                                const Extrinsics& ext, const ManipulatorParams& params,
                                const FeatureOptions& opts = {}) {
  Benchmark b;
  b.records = generate_scene(cfg.scene, intr);
  b.labeled = label_with_oracle(b.records, intr, ext, params, opts);
  const auto& all = b.labeled.samples;
  if (all.size() < cfg.n_samples + cfg.n_candidates)
    throw ConfigError("scene yields " + std::to_string(all.size()) + " usable detections; need " +
                      std::to_string(cfg.n_samples + cfg.n_candidates) +
                      " (raise scene.n_images)");
  b.samples.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.n_samples));
  b.candidates.assign(all.begin() + static_cast<std::ptrdiff_t>(cfg.n_samples),
                      all.begin() + static_cast<std::ptrdiff_t>(cfg.n_samples + cfg.n_candidates));
  return b;
}

}  // namespace reach_al
