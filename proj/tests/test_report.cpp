#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "reach_al/report.hpp"

using namespace reach_al;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  apply_config(cfg, is, "test.conf");
  return cfg;
}

ExperimentConfig small_experiment() {
  auto cfg = parse(
      "scene.n_images = 300\n"
      "data.n_samples = 200\n"
      "data.n_candidates = 400\n"
      "forest.n_trees = 10\n"
      "al.committee_trees = 5\n"
      "grid.strategies = random, entropy, qbc\n"
      "grid.init_sizes = 10, 30\n"
      "grid.budgets = 50\n"
      "grid.n_seeds = 3\n");
  cfg.validate();
  return cfg;
}

const Benchmark& small_benchmark() {
  static const Benchmark b = build_benchmark(small_experiment());
  return b;
}

std::string run_to_string(const ExperimentConfig& cfg, int jobs, std::vector<CellFailure>* failures = nullptr) {
  std::ostringstream os;
  os << kResultsHeader << '\n';
  auto f = run_grid(cfg, small_benchmark(), [&](const std::vector<ResultRow>& rows) {
    for (const auto& r : rows) os << format_row(r) << '\n';
  }, jobs);
  if (failures) *failures = std::move(f);
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("reach_al_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, DefaultsValidate) {
  const ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.grid.n_cells(), 5u * 3u * 2u * 20u);
  EXPECT_EQ(cfg.batch_size, 50u);
}

TEST(Config, ShippedDefaultFileMatchesBuiltIns) {
  const auto cfg = load_config(REACH_AL_CONFIG_DIR "/default.conf");
  const ExperimentConfig def;
  EXPECT_EQ(cfg.arm, def.arm);
  EXPECT_EQ(cfg.camera, def.camera);
  EXPECT_TRUE(cfg.extrinsics.rotation.isApprox(def.extrinsics.rotation, 1e-15));
  EXPECT_EQ(cfg.extrinsics.translation, def.extrinsics.translation);
  EXPECT_EQ(cfg.scene, def.scene);
  EXPECT_EQ(cfg.forest, def.forest);
  EXPECT_EQ(cfg.features.window, def.features.window);
  EXPECT_EQ(cfg.features.density_band, def.features.density_band);
  EXPECT_EQ(cfg.batch_size, def.batch_size);
  EXPECT_EQ(cfg.committee_size, def.committee_size);
  EXPECT_EQ(cfg.committee_trees, def.committee_trees);
  EXPECT_EQ(cfg.n_samples, def.n_samples);
  EXPECT_EQ(cfg.n_candidates, def.n_candidates);
  EXPECT_EQ(cfg.test_frac, def.test_frac);
  EXPECT_EQ(cfg.grid.strategies, def.grid.strategies);
  EXPECT_EQ(cfg.grid.init_sizes, def.grid.init_sizes);
  EXPECT_EQ(cfg.grid.budgets, def.grid.budgets);
  EXPECT_EQ(cfg.grid.seeds, def.grid.seeds);
  EXPECT_NO_THROW(load_config(REACH_AL_CONFIG_DIR "/quick.conf"));
}

TEST(Config, ParsesKeys) {
  const auto cfg = parse(
      "# comment line\n"
      "arm.L1 = 0.8   # trailing comment\n"
      "arm.theta1_max_deg = 90\n"
      "cam.t = 1, 2, 3\n"
      "forest.bootstrap = false\n"
      "grid.seed_base = 100\n"
      "grid.n_seeds = 2\n"
      "\n");
  EXPECT_DOUBLE_EQ(cfg.arm.upper_link, 0.8);
  EXPECT_NEAR(cfg.arm.yaw_limits.max, std::numbers::pi / 2, 1e-15);
  EXPECT_EQ(cfg.extrinsics.translation, Eigen::Vector3d(1, 2, 3));
  EXPECT_FALSE(cfg.forest.bootstrap);
  EXPECT_EQ(cfg.grid.seeds, (std::vector<std::uint64_t>{100, 101}));
}

TEST(Config, RotationKeys) {
  const auto identity = parse("cam.R = 1 0 0  0 1 0  0 0 1\n");
  EXPECT_TRUE(identity.extrinsics.rotation.isIdentity());
  const auto mount = parse("cam.mount_pitch_deg = 0\n");
  EXPECT_TRUE(mount.extrinsics.rotation.isApprox(Extrinsics::forward_mount(0.0, 0.0)));
  EXPECT_THROW(parse("cam.R = 1 0 0 0 1 0 0 0 1\ncam.mount_pitch_deg = 10\n"), ConfigError);
  auto skew = parse("cam.R = 1 0 0 0 1 0 0 0 2\n");
  EXPECT_THROW(skew.validate(), ConfigError);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("arm.L2 = 1\n"), ConfigError);
  EXPECT_THROW(parse("arm.L1 = 1\narm.L1 = 2\n"), ConfigError);
  EXPECT_THROW(parse("arm.L1 1\n"), ConfigError);
  EXPECT_THROW(parse("arm.L1 = abc\n"), ConfigError);
  EXPECT_THROW(parse("scene.n_images = 2.5\n"), ConfigError);
  EXPECT_THROW(parse("grid.strategies = random, bald\n"), ConfigError);
  EXPECT_THROW(parse("cam.t = 1 2\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/experiment.conf"), ConfigError);
  try {
    parse("\n\nfoo = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("test.conf:3"), std::string::npos);
  }
  auto bad = parse("arm.theta2_min_deg = 70\n");
  EXPECT_THROW(bad.validate(), ConfigError);
  auto no_grid = parse("grid.budgets = \n");
  EXPECT_THROW(no_grid.validate(), ConfigError);
}

TEST(Results, RowRoundTrip) {
  ResultRow a;
  a.strategy = "qbc";
  a.seed = 3;
  a.init_size = 10;
  a.budget = 50;
  a.round = 1;
  a.n_labeled = 60;
  a.accuracy = 0.123456789012345678;
  a.precision = std::nullopt;
  a.recall = 1.0;
  a.f1 = 0.0;
  a.auc = std::nullopt;
  a.ik_reduction = 0.4;
  ResultRow b = a;
  b.round = -1;
  b.status = "error";
  std::stringstream ss;
  ss << kResultsHeader << '\n' << format_row(a) << '\n' << format_row(b) << "\r\n";
  const auto back = read_results(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
  std::istringstream bad_header("a,b\n");
  EXPECT_THROW(read_results(bad_header), IngestError);
  std::istringstream short_row(std::string(kResultsHeader) + "\nqbc,1,2\n");
  EXPECT_THROW(read_results(short_row), IngestError);
}

TEST(Grid, RowCountsAndOrder) {
  const auto cfg = small_experiment();
  std::vector<CellFailure> failures;
  std::istringstream is(run_to_string(cfg, 1, &failures));
  const auto rows = read_results(is);
  EXPECT_TRUE(failures.empty());
  // each cell logs round 0 plus one round per batch of 50
  EXPECT_EQ(rows.size(), cfg.grid.n_cells() * 2);
  const auto cells = enumerate_cells(cfg.grid);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& r0 = rows[2 * i];
    const auto& r1 = rows[2 * i + 1];
    EXPECT_EQ(r0.strategy, to_string(cells[i].strategy));
    EXPECT_EQ(r0.seed, cells[i].seed);
    EXPECT_EQ(r0.round, 0);
    EXPECT_EQ(r0.n_labeled, cells[i].init_size);
    EXPECT_EQ(r1.n_labeled, cells[i].init_size + 50);
    EXPECT_EQ(r1.status, "ok");
  }
}

TEST(Grid, JobCountDoesNotChangeOutput) {
  const auto cfg = small_experiment();
  EXPECT_EQ(run_to_string(cfg, 1), run_to_string(cfg, 3));
}

TEST(Grid, FailingCellYieldsErrorRowAndOthersContinue) {
  auto cfg = small_experiment();
  cfg.grid.init_sizes = {10, 500};  // 500 exceeds the 160 non-test samples
  std::vector<CellFailure> failures;
  std::istringstream is(run_to_string(cfg, 2, &failures));
  const auto rows = read_results(is);
  EXPECT_EQ(failures.size(), 9u);
  std::size_t errors = 0;
  for (const auto& r : rows) {
    if (r.status != "error") continue;
    ++errors;
    EXPECT_EQ(r.round, -1);
    EXPECT_EQ(r.init_size, 500u);
    EXPECT_FALSE(r.accuracy.has_value());
  }
  EXPECT_EQ(errors, 9u);
  const auto summary = summarize(rows);
  ASSERT_EQ(summary.size(), 6u);
  for (const auto& s : summary) {
    if (s.init_size == 500) {
      EXPECT_EQ(s.n_errors, 3u);
      EXPECT_EQ(s.n_seeds, 0u);
      EXPECT_FALSE(s.accuracy.mean.has_value());
    } else {
      EXPECT_EQ(s.n_seeds, 3u);
    }
  }
}

TEST(Summary, RecomputesFromFinalRounds) {
  const auto cfg = small_experiment();
  std::istringstream is(run_to_string(cfg, 1));
  const auto rows = read_results(is);
  const auto summary = summarize(rows);
  ASSERT_EQ(summary.size(), 6u);
  // Independent recomputation: last row per (strategy, init, budget, seed).
  std::map<std::tuple<std::string, std::size_t, std::size_t>, std::map<std::uint64_t, double>> final_acc;
  for (const auto& r : rows) final_acc[{r.strategy, r.init_size, r.budget}][r.seed] = *r.accuracy;
  for (const auto& s : summary) {
    const auto& accs = final_acc.at({s.strategy, s.init_size, s.budget});
    double mean = 0.0;
    for (const auto& [seed, a] : accs) mean += a / static_cast<double>(accs.size());
    double var = 0.0;
    for (const auto& [seed, a] : accs) var += (a - mean) * (a - mean) / static_cast<double>(accs.size() - 1);
    EXPECT_EQ(s.n_seeds, 3u);
    EXPECT_NEAR(*s.accuracy.mean, mean, 1e-9);
    EXPECT_NEAR(*s.accuracy.std, std::sqrt(var), 1e-9);
  }
  // written summary parses back to the same means
  std::ostringstream os;
  write_summary(os, summary);
  std::istringstream back(os.str());
  std::string line;
  std::getline(back, line);
  EXPECT_EQ(line, kSummaryHeader);
  std::size_t n = 0;
  while (std::getline(back, line)) {
    std::istringstream ls(line);
    std::string field;
    for (int i = 0; i < 6; ++i) std::getline(ls, field, ',');
    EXPECT_NEAR(std::stod(field), *summary[n].accuracy.mean, 1e-12);
    ++n;
  }
  EXPECT_EQ(n, summary.size());
}

TEST(Summary, UndefinedMetricsAreExcluded) {
  std::vector<ResultRow> rows(3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].strategy = "random";
    rows[i].seed = i;
    rows[i].init_size = 10;
    rows[i].budget = 50;
    rows[i].accuracy = 0.5 + 0.1 * static_cast<double>(i);
  }
  rows[0].precision = 1.0;
  rows[2].precision = 0.5;
  const auto s = summarize(rows);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].precision.n, 2u);
  EXPECT_NEAR(*s[0].precision.mean, 0.75, 1e-15);
  EXPECT_FALSE(s[0].auc.mean.has_value());
  EXPECT_NEAR(*s[0].accuracy.std, 0.1, 1e-12);
  const auto single = describe({0.3});
  EXPECT_EQ(*single.std, 0.0);
}

TEST(Plots, CurveAndEnvelopeFiles) {
  const auto dir = scratch_dir("plots");
  const auto cfg = small_experiment();
  std::istringstream is(run_to_string(cfg, 1));
  const auto written = emit_curve_plots(read_results(is), dir.string());
  ASSERT_EQ(written.size(), 2u);
  for (const auto& p : written) {
    std::ifstream f(p);
    std::stringstream buf;
    buf << f.rdbuf();
    const auto svg = buf.str();
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);  // random is dashed
    EXPECT_NE(svg.find("<polygon"), std::string::npos);          // std band
  }
  EXPECT_TRUE(fs::exists(dir / "curves_init10_budget50.svg"));
  EXPECT_TRUE(emit_curve_plots({}, dir.string()).empty());

  const auto env = sample_envelope(ManipulatorParams{}, 6);
  const auto env_files = emit_envelope_plots(env, small_benchmark().samples, dir.string());
  EXPECT_EQ(env_files.size(), 3u);
  for (const char* name : {"envelope_top.svg", "envelope_side.svg", "envelope_front.svg"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  fs::remove_all(dir);
}

TEST(Points, RoundTrip) {
  const auto pts = sample_envelope(ManipulatorParams{}, 5);
  std::stringstream ss;
  write_points(ss, pts);
  std::string first;
  std::getline(std::istringstream(ss.str()) >> std::ws, first);
  EXPECT_EQ(std::count(first.begin(), first.end(), ' '), 2);
  const auto back = read_points(ss);
  ASSERT_EQ(back.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(back[i], pts[i]);
  std::istringstream bad("1 2\n");
  EXPECT_THROW(read_points(bad), IngestError);
}
