#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "reach_al/dataset.hpp"

using namespace reach_al;

namespace {

SceneConfig small_scene(int n_images = 100) {
  SceneConfig s;
  s.n_images = n_images;
  s.seed = 11;
  return s;
}

DetectionRecord centred_record(double depth) {
  DetectionRecord r;
  r.image_id = "img";
  r.u = 960;
  r.v = 540;
  r.bbox_w = 40;
  r.bbox_h = 40;
  r.confidence = 0.9;
  r.patch.cells.fill(depth);
  return r;
}

std::vector<LabeledSample> labelled_pool(std::size_t n, std::uint64_t seed, double reach_rate) {
  Rng rng(seed);
  std::vector<LabeledSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : out[i].features.values) v = rng.uniform();
    out[i].label = rng.bernoulli(reach_rate) ? kReachable : kUnreachable;
    out[i].record_index = i;
  }
  return out;
}

}  // namespace

TEST(Scene, PoissonCountInBand) {
  const auto recs = generate_scene(small_scene(), CameraIntrinsics{});
  EXPECT_GE(recs.size(), 400u);
  EXPECT_LE(recs.size(), 1600u);
}

TEST(Scene, Deterministic) {
  const auto a = generate_scene(small_scene(), CameraIntrinsics{});
  const auto b = generate_scene(small_scene(), CameraIntrinsics{});
  EXPECT_EQ(a, b);
  auto other = small_scene();
  other.seed = 12;
  EXPECT_NE(a, generate_scene(other, CameraIntrinsics{}));
}

TEST(Scene, FullDropoutGivesNoDepth) {
  auto cfg = small_scene(20);
  cfg.dropout_prob = 1.0;
  const auto recs = generate_scene(cfg, CameraIntrinsics{});
  ASSERT_FALSE(recs.empty());
  for (const auto& r : recs) EXPECT_EQ(r.patch.valid_count(), 0);
  const auto res = label_with_oracle(recs, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{});
  EXPECT_TRUE(res.samples.empty());
  EXPECT_EQ(res.dropped_depth, recs.size());
}

TEST(Scene, RecordsAreWellFormed) {
  const CameraIntrinsics intr;
  for (const auto& r : generate_scene(small_scene(), intr)) {
    EXPECT_GE(r.u, 0.0);
    EXPECT_LT(r.u, intr.rgb_width);
    EXPECT_GE(r.v, 0.0);
    EXPECT_LT(r.v, intr.rgb_height);
    EXPECT_GE(r.confidence, 0.5);
    EXPECT_LE(r.confidence, 1.0);
    EXPECT_GT(r.bbox_w, 0.0);
    EXPECT_EQ(r.window.size(), 121u);
    // patch is the window centre
    EXPECT_EQ(r.patch.at(2, 2), r.window[60]);
    EXPECT_EQ(r.patch.at(0, 0), r.window[3 * 11 + 3]);
  }
  EXPECT_THROW(generate_scene([] { SceneConfig s; s.window = 4; return s; }(), intr), ConfigError);
}

TEST(DetectionFile, RoundTrip) {
  const auto recs = generate_scene(small_scene(30), CameraIntrinsics{});
  std::stringstream ss;
  write_detections(ss, recs);
  const auto in = ingest_detections(ss);
  EXPECT_EQ(in.skipped, 0u);
  EXPECT_TRUE(in.has_window);
  EXPECT_EQ(in.records, recs);
}

TEST(DetectionFile, PatchOnlyFile) {
  std::vector<DetectionRecord> recs{centred_record(1.0), centred_record(2.0)};
  std::stringstream ss;
  write_detections(ss, recs);
  std::string header;
  std::getline(std::istringstream(ss.str()) >> std::ws, header);
  EXPECT_EQ(header, detection_header(0));
  const auto in = ingest_detections(ss);
  EXPECT_FALSE(in.has_window);
  EXPECT_EQ(in.records, recs);
}

TEST(DetectionFile, Errors) {
  std::istringstream empty;
  EXPECT_THROW(ingest_detections(empty), IngestError);
  std::istringstream bad("image,u,v\n");
  EXPECT_THROW(ingest_detections(bad), IngestError);
  std::istringstream even_window(detection_header(36) + "\n");
  EXPECT_THROW(ingest_detections(even_window), IngestError);
  EXPECT_THROW(ingest_detections(std::string("/nonexistent/detections.csv")), IngestError);
}

TEST(DetectionFile, MalformedRowsAreSkippedAndCounted) {
  std::stringstream good;
  write_detections(good, {centred_record(1.0)});
  const std::string row = good.str().substr(good.str().find('\n') + 1);
  std::string text = detection_header(0) + "\n" + row;
  text += "img,abc" + row.substr(row.find(',', 4)) ;           // unparsable u
  text += "img,1,2,3\n";                                      // short row
  text += "img,5000,540,40,40,0.9" + row.substr(row.find(",0.9") + 4);  // outside image
  text += "img,960,540,40,40,1.5" + row.substr(row.find(",0.9") + 4);   // bad confidence
  text += "\r\n" + row;
  std::istringstream is(text);
  const auto in = ingest_detections(is);
  EXPECT_EQ(in.records.size(), 2u);
  EXPECT_EQ(in.skipped, 4u);
  EXPECT_EQ(in.warnings.size(), 4u);
}

TEST(DetectionFile, AllZeroPatchIsRetainedAtIngest) {
  std::stringstream ss;
  write_detections(ss, {centred_record(0.0)});
  const auto in = ingest_detections(ss);
  ASSERT_EQ(in.records.size(), 1u);
  const auto res = label_with_oracle(in.records, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{});
  EXPECT_EQ(res.dropped_depth, 1u);
  EXPECT_TRUE(res.samples.empty());
}

TEST(Labelling, WorkedExample) {
  // Principal-point detection at depth 1 with R = I lands on (0.95, 0, 0.5),
  // the straight-out pose.
  Extrinsics ext;
  ext.translation = {0.95, 0.0, -0.5};
  const auto res = label_with_oracle({centred_record(1.0)}, CameraIntrinsics{}, ext, ManipulatorParams{});
  ASSERT_EQ(res.samples.size(), 1u);
  const auto& s = res.samples[0];
  EXPECT_NEAR(s.arm_point.x, 0.95, 1e-12);
  EXPECT_NEAR(s.arm_point.y, 0.0, 1e-12);
  EXPECT_NEAR(s.arm_point.z, 0.5, 1e-12);
  EXPECT_EQ(s.label, kReachable);
  EXPECT_EQ(res.patch_density_fallbacks, 1u);
  // Far behind the wall is out of reach.
  const auto far = label_with_oracle({centred_record(5.0)}, CameraIntrinsics{}, ext, ManipulatorParams{});
  EXPECT_EQ(far.samples.at(0).label, kUnreachable);
}

TEST(Labelling, AgreesWithBruteForce) {
  // Camera mounted as in the benchmark; independent oracle on the located points.
  auto scene = small_scene(300);
  scene.wall_distance = 0.43;
  scene.wall_depth_jitter = 0.3;
  scene.lateral_spread = 0.5;
  Extrinsics ext;
  ext.rotation = Extrinsics::forward_mount(deg_to_rad(20.0), 0.0);
  const ManipulatorParams params;
  auto recs = generate_scene(scene, CameraIntrinsics{});
  ASSERT_GE(recs.size(), 1000u);
  recs.resize(1000);
  const auto res = label_with_oracle(recs, CameraIntrinsics{}, ext, params);
  const GridSpec grid;
  const BruteForceOracle oracle(params, grid);
  const double band = oracles::grid_step_length(params, grid.steps_per_joint);
  std::size_t agree = 0, brute_only = 0, outside_band = 0;
  for (const auto& s : res.samples) {
    const bool brute = oracle(s.arm_point);
    if ((s.label == kReachable) == brute) {
      ++agree;
      continue;
    }
    brute_only += brute ? 1 : 0;
    outside_band += oracles::near_analytic_boundary(s.arm_point, params, band) ? 0 : 1;
  }
  ASSERT_GT(res.samples.size(), 900u);
  EXPECT_EQ(outside_band, 0u);
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(res.samples.size()), 0.995)
      << (res.samples.size() - agree) << " disagreements, " << brute_only
      << " of them reachable only within the brute-force tolerance";
}

TEST(Labelling, DropsPlusRetainedEqualsInput) {
  auto recs = generate_scene(small_scene(60), CameraIntrinsics{});
  recs[0].u = -1;              // outside the image
  recs[1].patch.cells.fill(0);  // no depth
  recs[2].patch.cells.fill(std::nan(""));
  const auto res = label_with_oracle(recs, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{});
  EXPECT_EQ(res.dropped_boundary, 1u);
  EXPECT_GE(res.dropped_depth, 2u);
  EXPECT_EQ(res.samples.size() + res.dropped(), recs.size());
  for (std::size_t i = 1; i < res.samples.size(); ++i)
    EXPECT_LT(res.samples[i - 1].record_index, res.samples[i].record_index);
}

TEST(Labelling, PermutationEquivariant) {
  auto recs = generate_scene(small_scene(40), CameraIntrinsics{});
  const auto a = label_with_oracle(recs, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{});
  std::reverse(recs.begin(), recs.end());
  const auto b = label_with_oracle(recs, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{});
  ASSERT_EQ(a.samples.size(), b.samples.size());
  const auto n = a.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(a.samples[i].label, b.samples[n - 1 - i].label);
    EXPECT_EQ(a.samples[i].features, b.samples[n - 1 - i].features);
  }
}

TEST(Labelling, NarrowerDensityWindowUsesCentre) {
  auto rec = centred_record(1.0);
  rec.window.assign(121, 3.0);
  for (int r = 3; r < 8; ++r)
    for (int c = 3; c < 8; ++c) rec.window[static_cast<std::size_t>(r * 11 + c)] = 1.0;
  FeatureOptions wide;
  FeatureOptions narrow;
  narrow.window = 5;
  const auto a = label_with_oracle({rec}, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{}, wide);
  const auto b = label_with_oracle({rec}, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{}, narrow);
  EXPECT_NEAR(a.samples[0].features[Feature::kLocalDensity], 25.0 / 121.0, 1e-12);
  EXPECT_NEAR(b.samples[0].features[Feature::kLocalDensity], 1.0, 1e-12);
}

TEST(LabeledFile, RoundTrip) {
  const auto recs = generate_scene(small_scene(30), CameraIntrinsics{});
  const auto res = label_with_oracle(recs, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{});
  std::stringstream ss;
  write_labeled(ss, recs, res.samples);
  const auto back = read_labeled(ss);
  ASSERT_EQ(back.samples.size(), res.samples.size());
  EXPECT_EQ(back.skipped, 0u);
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].features, res.samples[i].features);
    EXPECT_EQ(back.samples[i].label, res.samples[i].label);
    EXPECT_EQ(back.samples[i].arm_point, res.samples[i].arm_point);
    EXPECT_EQ(back.records[i].patch.cells, recs[res.samples[i].record_index].patch.cells);
  }
  std::istringstream bad("x,y,z\n");
  EXPECT_THROW(read_labeled(bad), IngestError);
}

TEST(Splits, Partition) {
  const auto samples = labelled_pool(500, 1, 0.6);
  const auto cands = labelled_pool(300, 2, 0.6);
  const auto split = make_splits(samples, cands, 0.2, 30, 7);
  EXPECT_EQ(split.test.size(), 100u);
  EXPECT_EQ(split.labeled.size(), 30u);
  EXPECT_EQ(split.unlabeled.size(), 370u + 300u);
  std::vector<std::size_t> all;
  for (const auto* v : {&split.test_source, &split.labeled_source, &split.pool_source})
    all.insert(all.end(), v->begin(), v->end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(800);
  std::iota(expect.begin(), expect.end(), std::size_t{0});
  EXPECT_EQ(all, expect);
  for (auto i : split.test_source) EXPECT_LT(i, 500u);  // candidates never enter the test set
  for (std::size_t k = 0; k < split.pool_source.size(); ++k) {
    const auto src = split.pool_source[k];
    const auto& s = src < 500 ? samples[src] : cands[src - 500];
    EXPECT_EQ(split.unlabeled.features(k), s.features);
    EXPECT_EQ(split.unlabeled.reveal(k), s.label);
  }
}

TEST(Splits, DeterministicAndSeedSensitive) {
  const auto samples = labelled_pool(200, 1, 0.5);
  const auto a = make_splits(samples, {}, 0.2, 10, 3);
  const auto b = make_splits(samples, {}, 0.2, 10, 3);
  const auto c = make_splits(samples, {}, 0.2, 10, 4);
  EXPECT_EQ(a.pool_source, b.pool_source);
  EXPECT_EQ(a.test_source, b.test_source);
  EXPECT_NE(a.test_source, c.test_source);
}

TEST(Splits, InitialSetHoldsBothClasses) {
  // 3% minority class; an unstratified draw of 10 often misses it.
  const auto samples = labelled_pool(1000, 5, 0.03);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto split = make_splits(samples, {}, 0.2, 10, seed);
    std::set<Label> classes;
    for (const auto& s : split.labeled) classes.insert(s.label);
    EXPECT_EQ(classes.size(), 2u) << seed;
  }
}

TEST(Splits, Errors) {
  const auto samples = labelled_pool(100, 1, 0.5);
  EXPECT_THROW(make_splits(samples, {}, 0.0, 10, 1), ConfigError);
  EXPECT_THROW(make_splits(samples, {}, 1.0, 10, 1), ConfigError);
  EXPECT_THROW(make_splits(samples, {}, 0.2, 81, 1), ConfigError);
  EXPECT_NO_THROW(make_splits(samples, {}, 0.2, 80, 1));
}

TEST(Benchmark, SizesAndShortScene) {
  BenchmarkConfig cfg;
  cfg.scene = small_scene(200);
  cfg.n_samples = 300;
  cfg.n_candidates = 500;
  const auto b = make_benchmark(cfg, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{});
  EXPECT_EQ(b.samples.size(), 300u);
  EXPECT_EQ(b.candidates.size(), 500u);
  EXPECT_GE(b.reachable_fraction(), 0.0);
  EXPECT_LE(b.reachable_fraction(), 1.0);
  cfg.n_candidates = 100000;
  EXPECT_THROW(make_benchmark(cfg, CameraIntrinsics{}, Extrinsics{}, ManipulatorParams{}), ConfigError);
}
