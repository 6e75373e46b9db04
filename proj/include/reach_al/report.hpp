#pragma once

// Experiment harness: flat key = value configs, the strategy x init x budget
// x seed grid, results/summary CSV files and SVG learning-curve and envelope
// plots.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "reach_al/active.hpp"
#include "reach_al/dataset.hpp"
#include "reach_al/error.hpp"
#include "reach_al/forest.hpp"
#include "reach_al/kinematics.hpp"
#include "reach_al/metrics.hpp"
#include "reach_al/perception.hpp"

namespace reach_al {

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentGrid {
  std::vector<Strategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  std::vector<std::size_t> init_sizes{10, 30, 50};
  std::vector<std::size_t> budgets{50, 100};
  std::vector<std::uint64_t> seeds = make_seeds(0, 20);

  static std::vector<std::uint64_t> make_seeds(std::uint64_t base, std::size_t n) {
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = base + i;
    return s;
  }

  [[nodiscard]] std::size_t n_cells() const {
    return strategies.size() * init_sizes.size() * budgets.size() * seeds.size();
  }

  void validate() const {
    if (strategies.empty() || init_sizes.empty() || budgets.empty() || seeds.empty())
      throw ConfigError("grid lists must be nonempty");
  }
};

/// Default camera mount of the synthetic benchmark: optical axis along the
/// wall-approach axis, tilted up 20 degrees toward the canopy.
inline constexpr double kBenchmarkMountPitchDeg = 20.0;

inline SceneConfig benchmark_scene() {
  SceneConfig s;
  s.n_images = 1000;
  s.wall_distance = 0.43;
  s.wall_depth_jitter = 0.3;
  s.lateral_spread = 0.5;
  return s;
}

struct ExperimentConfig {
  ManipulatorParams arm;
  CameraIntrinsics camera;
  Extrinsics extrinsics{Extrinsics::forward_mount(deg_to_rad(kBenchmarkMountPitchDeg), 0.0), {0.76, 0.44, 0.485}};
  SceneConfig scene = benchmark_scene();
  FeatureOptions features;
  TrainConfig forest;
  std::size_t batch_size = 50;
  int committee_size = 5;
  int committee_trees = 25;
  std::size_t score_cap = 0;
  std::size_t n_samples = 1000;
  std::size_t n_candidates = 5000;
  double test_frac = 0.2;
  ExperimentGrid grid;

  void validate() const {
    arm.validate();
    camera.validate();
    extrinsics.validate(1e-6);
    scene.validate();
    forest.validate(kFeatureDim);
    grid.validate();
    if (features.window < 1 || features.window % 2 == 0)
      throw ConfigError("features.window must be odd and positive");
    if (!(features.density_band > 0.0)) throw ConfigError("features.density_band must be positive");
    if (batch_size < 1) throw ConfigError("al.batch_size must be >= 1");
    if (committee_size < 2) throw ConfigError("al.committee_size must be >= 2");
    if (committee_trees < 1) throw ConfigError("al.committee_trees must be >= 1");
    if (!(test_frac > 0.0 && test_frac < 1.0)) throw ConfigError("data.test_frac must lie in (0, 1)");
  }

  [[nodiscard]] ALConfig al_config(Strategy s, std::size_t init, std::size_t budget,
                                   std::uint64_t seed) const {
    ALConfig c;
    c.strategy = s;
    c.init_size = init;
    c.batch_size = batch_size;
    c.n_queries = budget;
    c.committee_size = committee_size;
    c.committee_trees = committee_trees;
    c.score_cap = score_cap;
    c.seed = seed;
    return c;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// List values are separated by commas, whitespace, or both.
inline std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < v.size()) {
    while (i < v.size() && (v[i] == ',' || std::isspace(static_cast<unsigned char>(v[i])))) ++i;
    std::size_t j = i;
    while (j < v.size() && v[j] != ',' && !std::isspace(static_cast<unsigned char>(v[j]))) ++j;
    if (j > i) out.push_back(v.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double config_number(std::string_view key, std::string_view v) {
  double d = 0.0;
  if (!parse_number(v, d) || !std::isfinite(d))
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  return d;
}

inline long long config_integer(std::string_view key, std::string_view v) {
  const double d = config_number(key, v);
  if (d != std::floor(d) || std::abs(d) > 9.0e15)
    throw ConfigError("config key '" + std::string(key) + "': expected an integer");
  return static_cast<long long>(d);
}

inline std::size_t config_count(std::string_view key, std::string_view v) {
  const auto i = config_integer(key, v);
  if (i < 0) throw ConfigError("config key '" + std::string(key) + "' must be >= 0");
  return static_cast<std::size_t>(i);
}

inline bool config_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false");
}

}  // namespace detail

/// Applies `key = value` lines to `cfg`. Blank lines and `#` comments are
/// ignored; unknown or repeated keys are errors.
inline void apply_config(ExperimentConfig& cfg, std::istream& is, const std::string& source = "config") {
  using detail::config_count;
  using detail::config_number;
  using Setter = std::function<void(std::string_view, std::string_view)>;
  std::optional<Eigen::Matrix3d> explicit_rotation;
  double mount_pitch = kBenchmarkMountPitchDeg, mount_yaw = 0.0;
  bool mount_set = false;

  auto num = [](double& field) -> Setter {
    return [&field](std::string_view k, std::string_view v) { field = config_number(k, v); };
  };
  auto deg = [](double& field) -> Setter {
    return [&field](std::string_view k, std::string_view v) { field = deg_to_rad(config_number(k, v)); };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](std::string_view k, std::string_view v) {
      const auto i = detail::config_integer(k, v);
      if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
        throw ConfigError("config key '" + std::string(k) + "' out of range");
      field = static_cast<int>(i);
    };
  };
  auto count = [](std::size_t& field) -> Setter {
    return [&field](std::string_view k, std::string_view v) { field = config_count(k, v); };
  };

  std::map<std::string, Setter, std::less<>> table{
      {"arm.L1", num(cfg.arm.upper_link)},
      {"arm.Le", num(cfg.arm.tool_offset)},
      {"arm.h0", num(cfg.arm.shoulder_height)},
      {"arm.d1_min", num(cfg.arm.aisle_travel.min)},
      {"arm.d1_max", num(cfg.arm.aisle_travel.max)},
      {"arm.d2_min", num(cfg.arm.approach_travel.min)},
      {"arm.d2_max", num(cfg.arm.approach_travel.max)},
      {"arm.theta1_min_deg", deg(cfg.arm.yaw_limits.min)},
      {"arm.theta1_max_deg", deg(cfg.arm.yaw_limits.max)},
      {"arm.theta2_min_deg", deg(cfg.arm.pitch_limits.min)},
      {"arm.theta2_max_deg", deg(cfg.arm.pitch_limits.max)},
      {"arm.collision_margin", num(cfg.arm.collision_margin)},
      {"cam.fx", num(cfg.camera.fx)},
      {"cam.fy", num(cfg.camera.fy)},
      {"cam.cx", num(cfg.camera.cx)},
      {"cam.cy", num(cfg.camera.cy)},
      {"cam.rgb_width", integer(cfg.camera.rgb_width)},
      {"cam.rgb_height", integer(cfg.camera.rgb_height)},
      {"cam.depth_width", integer(cfg.camera.depth_width)},
      {"cam.depth_height", integer(cfg.camera.depth_height)},
      {"cam.R",
       [&](std::string_view k, std::string_view v) {
         const auto parts = detail::split_list(v);
         if (parts.size() != 9) throw ConfigError("cam.R needs 9 row-major values");
         Eigen::Matrix3d r;
         for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = config_number(k, parts[static_cast<std::size_t>(i)]);
         explicit_rotation = r;
       }},
      {"cam.t",
       [&](std::string_view k, std::string_view v) {
         const auto parts = detail::split_list(v);
         if (parts.size() != 3) throw ConfigError("cam.t needs 3 values");
         for (int i = 0; i < 3; ++i) cfg.extrinsics.translation(i) = config_number(k, parts[static_cast<std::size_t>(i)]);
       }},
      {"cam.mount_pitch_deg",
       [&](std::string_view k, std::string_view v) {
         mount_pitch = config_number(k, v);
         mount_set = true;
       }},
      {"cam.mount_yaw_deg",
       [&](std::string_view k, std::string_view v) {
         mount_yaw = config_number(k, v);
         mount_set = true;
       }},
      {"scene.n_images", integer(cfg.scene.n_images)},
      {"scene.apples_per_image", num(cfg.scene.apples_per_image)},
      {"scene.wall_distance", num(cfg.scene.wall_distance)},
      {"scene.wall_depth_jitter", num(cfg.scene.wall_depth_jitter)},
      {"scene.image_depth_jitter", num(cfg.scene.image_depth_jitter)},
      {"scene.lateral_spread", num(cfg.scene.lateral_spread)},
      {"scene.depth_noise_std", num(cfg.scene.depth_noise_std)},
      {"scene.dropout_prob", num(cfg.scene.dropout_prob)},
      {"scene.cluster_prob", num(cfg.scene.cluster_prob)},
      {"scene.occluder_prob", num(cfg.scene.occluder_prob)},
      {"scene.apple_diameter", num(cfg.scene.apple_diameter)},
      {"scene.window", integer(cfg.scene.window)},
      {"scene.seed",
       [&](std::string_view k, std::string_view v) { cfg.scene.seed = config_count(k, v); }},
      {"features.window", integer(cfg.features.window)},
      {"features.density_band", num(cfg.features.density_band)},
      {"forest.n_trees", integer(cfg.forest.n_trees)},
      {"forest.max_depth", integer(cfg.forest.max_depth)},
      {"forest.min_samples_leaf", integer(cfg.forest.min_samples_leaf)},
      {"forest.features_per_split", integer(cfg.forest.features_per_split)},
      {"forest.bootstrap",
       [&](std::string_view k, std::string_view v) { cfg.forest.bootstrap = detail::config_bool(k, v); }},
      {"forest.threads", integer(cfg.forest.threads)},
      {"al.batch_size", count(cfg.batch_size)},
      {"al.committee_size", integer(cfg.committee_size)},
      {"al.committee_trees", integer(cfg.committee_trees)},
      {"al.score_cap", count(cfg.score_cap)},
      {"data.n_samples", count(cfg.n_samples)},
      {"data.n_candidates", count(cfg.n_candidates)},
      {"data.test_frac", num(cfg.test_frac)},
      {"grid.strategies",
       [&](std::string_view, std::string_view v) {
         cfg.grid.strategies.clear();
         for (auto s : detail::split_list(v)) cfg.grid.strategies.push_back(parse_strategy(s));
       }},
      {"grid.init_sizes",
       [&](std::string_view k, std::string_view v) {
         cfg.grid.init_sizes.clear();
         for (auto s : detail::split_list(v)) cfg.grid.init_sizes.push_back(config_count(k, s));
       }},
      {"grid.budgets",
       [&](std::string_view k, std::string_view v) {
         cfg.grid.budgets.clear();
         for (auto s : detail::split_list(v)) cfg.grid.budgets.push_back(config_count(k, s));
       }},
      {"grid.n_seeds",
       [&](std::string_view k, std::string_view v) {
         const auto base = cfg.grid.seeds.empty() ? 0 : cfg.grid.seeds.front();
         cfg.grid.seeds = ExperimentGrid::make_seeds(base, config_count(k, v));
       }},
      {"grid.seed_base",
       [&](std::string_view k, std::string_view v) {
         cfg.grid.seeds = ExperimentGrid::make_seeds(config_count(k, v), cfg.grid.seeds.size());
       }},
  };

  std::map<std::string, int, std::less<>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    std::string_view body = detail::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const auto key = detail::trim(body.substr(0, eq));
    const auto value = detail::trim(body.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
    if (auto [pos, fresh] = seen.emplace(std::string(key), line_no); !fresh)
      throw ConfigError(where + ": key '" + std::string(key) + "' repeated (first on line " +
                        std::to_string(pos->second) + ")");
    try {
      it->second(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (explicit_rotation && mount_set)
    throw ConfigError(source + ": cam.R conflicts with cam.mount_pitch_deg / cam.mount_yaw_deg");
  if (explicit_rotation) cfg.extrinsics.rotation = *explicit_rotation;
  if (mount_set)
    cfg.extrinsics.rotation = Extrinsics::forward_mount(deg_to_rad(mount_pitch), deg_to_rad(mount_yaw));
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  ExperimentConfig cfg;
  apply_config(cfg, is, path);
  cfg.validate();
  return cfg;
}

/// Builds the labelled benchmark described by the config.
inline Benchmark build_benchmark(const ExperimentConfig& cfg) {
  BenchmarkConfig bc;
  bc.scene = cfg.scene;
  bc.n_samples = cfg.n_samples;
  bc.n_candidates = cfg.n_candidates;
  return make_benchmark(bc, cfg.camera, cfg.extrinsics, cfg.arm, cfg.features);
}

// ---------------------------------------------------------------------------
// Results files

inline constexpr std::string_view kNA = "NA";

inline constexpr std::string_view kResultsHeader =
    "strategy,seed,init_size,budget,round,n_labeled,accuracy,precision,recall,f1,auc,ik_reduction,status";

struct ResultRow {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t init_size = 0;
  std::size_t budget = 0;
  long long round = 0;  ///< -1 on error rows
  std::size_t n_labeled = 0;
  std::optional<double> accuracy, precision, recall, f1, auc, ik_reduction;
  std::string status = "ok";  ///< ok | truncated | error

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

namespace detail {

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string(kNA);
}

inline std::optional<double> parse_optional(std::string_view s) {
  if (s == kNA) return std::nullopt;
  double d = 0.0;
  if (!parse_number(s, d)) throw IngestError("bad numeric field '" + std::string(s) + "'");
  return d;
}

}  // namespace detail

inline std::string format_row(const ResultRow& r) {
  using detail::format_optional;
  std::string s = r.strategy + ',' + std::to_string(r.seed) + ',' + std::to_string(r.init_size) + ',' +
                  std::to_string(r.budget) + ',' + std::to_string(r.round) + ',' +
                  std::to_string(r.n_labeled);
  for (const auto* v : {&r.accuracy, &r.precision, &r.recall, &r.f1, &r.auc, &r.ik_reduction})
    s += ',' + format_optional(*v);
  return s + ',' + r.status;
}

inline std::vector<ResultRow> read_results(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IngestError("results file is empty");
  detail::strip_cr(line);
  if (line != kResultsHeader) throw IngestError("unexpected results header");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto c = detail::split_csv(line);
    if (c.size() != 13) throw IngestError("results line " + std::to_string(line_no) + ": expected 13 fields");
    try {
      ResultRow r;
      r.strategy = std::string(c[0]);
      r.seed = static_cast<std::uint64_t>(detail::config_count("seed", c[1]));
      r.init_size = detail::config_count("init_size", c[2]);
      r.budget = detail::config_count("budget", c[3]);
      r.round = detail::config_integer("round", c[4]);
      r.n_labeled = detail::config_count("n_labeled", c[5]);
      r.accuracy = detail::parse_optional(c[6]);
      r.precision = detail::parse_optional(c[7]);
      r.recall = detail::parse_optional(c[8]);
      r.f1 = detail::parse_optional(c[9]);
      r.auc = detail::parse_optional(c[10]);
      r.ik_reduction = detail::parse_optional(c[11]);
      r.status = std::string(c[12]);
      rows.push_back(std::move(r));
    } catch (const Error& e) {
      throw IngestError("results line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

inline std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestError("cannot open results file " + path);
  return read_results(is);
}

inline ResultRow to_row(Strategy s, std::uint64_t seed, std::size_t init, std::size_t budget,
                        const RoundLog& log) {
  ResultRow r;
  r.strategy = std::string(to_string(s));
  r.seed = seed;
  r.init_size = init;
  r.budget = budget;
  r.round = static_cast<long long>(log.round_index);
  r.n_labeled = log.n_labeled;
  r.accuracy = log.metrics.accuracy;
  r.precision = log.metrics.precision;
  r.recall = log.metrics.recall;
  r.f1 = log.metrics.f1;
  r.auc = log.metrics.auc;
  r.ik_reduction = log.ik_reduction;
  r.status = log.truncated ? "truncated" : "ok";
  return r;
}

// ---------------------------------------------------------------------------
// Grid execution

struct Cell {
  Strategy strategy;
  std::size_t init_size;
  std::size_t budget;
  std::uint64_t seed;
};

/// Canonical cell order: strategy, init size, budget, seed.
inline std::vector<Cell> enumerate_cells(const ExperimentGrid& grid) {
  std::vector<Cell> cells;
  cells.reserve(grid.n_cells());
  for (auto s : grid.strategies)
    for (auto i : grid.init_sizes)
      for (auto b : grid.budgets)
        for (auto seed : grid.seeds) cells.push_back({s, i, b, seed});
  return cells;
}

struct CellFailure {
  Cell cell;
  std::string message;
};

/// Rows of one cell, or a single error row when the cell throws.
inline std::vector<ResultRow> run_cell(const ExperimentConfig& cfg, const Benchmark& bench,
                                       const Cell& cell, std::string* error = nullptr) {
  try {
    const auto split = make_splits(bench.samples, bench.candidates, cfg.test_frac, cell.init_size, cell.seed);
    const auto logs = run_loop(split, cfg.al_config(cell.strategy, cell.init_size, cell.budget, cell.seed), cfg.forest);
    std::vector<ResultRow> rows;
    rows.reserve(logs.size());
    for (const auto& l : logs) rows.push_back(to_row(cell.strategy, cell.seed, cell.init_size, cell.budget, l));
    return rows;
  } catch (const Error& e) {
    if (error) *error = e.what();
    ResultRow r;
    r.strategy = std::string(to_string(cell.strategy));
    r.seed = cell.seed;
    r.init_size = cell.init_size;
    r.budget = cell.budget;
    r.round = -1;
    r.n_labeled = 0;
    r.status = "error";
    return {r};
  }
}

/// Runs every cell with up to `jobs` workers. Rows reach `sink` in canonical
/// cell order whatever the completion order, one cell at a time, so the
/// output is identical for any job count.
inline std::vector<CellFailure> run_grid(const ExperimentConfig& cfg, const Benchmark& bench,
                                         const std::function<void(const std::vector<ResultRow>&)>& sink,
                                         int jobs = 1) {
  const auto cells = enumerate_cells(cfg.grid);
  std::vector<std::optional<std::vector<ResultRow>>> done(cells.size());
  std::vector<std::string> errors(cells.size());
  std::mutex mu;
  std::size_t next_to_write = 0;
  std::atomic<std::size_t> next_cell{0};

  auto worker = [&] {
    for (std::size_t i = next_cell++; i < cells.size(); i = next_cell++) {
      auto rows = run_cell(cfg, bench, cells[i], &errors[i]);
      std::lock_guard lock(mu);
      done[i] = std::move(rows);
      while (next_to_write < cells.size() && done[next_to_write]) {
        sink(*done[next_to_write]);
        done[next_to_write].reset();
        ++next_to_write;
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::clamp<long long>(jobs, 1, static_cast<long long>(std::max<std::size_t>(cells.size(), 1))));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  std::vector<CellFailure> failures;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!errors[i].empty()) failures.push_back({cells[i], errors[i]});
  return failures;
}

/// Appends rows to a results file, writing the header first.
class ResultsWriter {
 public:
  explicit ResultsWriter(const std::string& path) : path_(path), os_(path, std::ios::binary | std::ios::trunc) {
    if (!os_) throw IngestError("cannot open results file " + path + " for writing");
    os_ << kResultsHeader << '\n';
    check();
  }

  void append(const std::vector<ResultRow>& rows) {
    for (const auto& r : rows) os_ << format_row(r) << '\n';
    os_.flush();
    check();
  }

 private:
  void check() {
    if (!os_) throw IngestError("write failed: " + path_);
  }
  std::string path_;
  std::ofstream os_;
};

// ---------------------------------------------------------------------------
// Summary

struct Stat {
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> std;  ///< sample standard deviation; 0 for a single value
};

inline Stat describe(const std::vector<double>& v) {
  Stat s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  s.mean = mean;
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

struct SummaryRow {
  std::string strategy;
  std::size_t init_size = 0;
  std::size_t budget = 0;
  std::size_t n_seeds = 0;   ///< cells that finished
  std::size_t n_errors = 0;  ///< cells that failed
  Stat accuracy, precision, recall, f1, auc, ik_reduction;
};

inline constexpr std::string_view kSummaryHeader =
    "strategy,init_size,budget,n_seeds,n_errors,accuracy_mean,accuracy_std,precision_mean,precision_std,"
    "recall_mean,recall_std,f1_mean,f1_std,auc_mean,auc_std,ik_reduction_mean,ik_reduction_std";

/// Final-round statistics per (strategy, init, budget) across seeds.
/// Undefined metrics are left out of their own mean, never counted as 0.
/// Groups keep the order in which they first appear in `rows`.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<std::string, std::size_t, std::size_t>;
  std::vector<Key> order;
  std::map<Key, std::map<std::uint64_t, const ResultRow*>> finals;
  std::map<Key, std::size_t> errors;
  for (const auto& r : rows) {
    Key k{r.strategy, r.init_size, r.budget};
    if (!finals.contains(k) && !errors.contains(k)) order.push_back(k);
    if (r.status == "error") {
      ++errors[k];
      finals[k];
      continue;
    }
    auto& slot = finals[k][r.seed];
    if (!slot || r.round > slot->round) slot = &r;
  }
  std::vector<SummaryRow> out;
  for (const auto& k : order) {
    SummaryRow s;
    std::tie(s.strategy, s.init_size, s.budget) = k;
    s.n_errors = errors.contains(k) ? errors[k] : 0;
    std::vector<double> acc, pre, rec, f1, auc, ik;
    for (const auto& [seed, r] : finals[k]) {
      ++s.n_seeds;
      if (r->accuracy) acc.push_back(*r->accuracy);
      if (r->precision) pre.push_back(*r->precision);
      if (r->recall) rec.push_back(*r->recall);
      if (r->f1) f1.push_back(*r->f1);
      if (r->auc) auc.push_back(*r->auc);
      if (r->ik_reduction) ik.push_back(*r->ik_reduction);
    }
    s.accuracy = describe(acc);
    s.precision = describe(pre);
    s.recall = describe(rec);
    s.f1 = describe(f1);
    s.auc = describe(auc);
    s.ik_reduction = describe(ik);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  using detail::format_optional;
  os << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    os << s.strategy << ',' << s.init_size << ',' << s.budget << ',' << s.n_seeds << ',' << s.n_errors;
    for (const auto* st : {&s.accuracy, &s.precision, &s.recall, &s.f1, &s.auc, &s.ik_reduction})
      os << ',' << format_optional(st->mean) << ',' << format_optional(st->std);
    os << '\n';
  }
}

/// Accuracy table in percent, one line per strategy and one column per
/// (init, budget) pair.
inline void print_accuracy_table(std::ostream& os, const std::vector<SummaryRow>& rows) {
  std::vector<std::pair<std::size_t, std::size_t>> columns;
  std::vector<std::string> strategies;
  for (const auto& r : rows) {
    const std::pair col{r.init_size, r.budget};
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end())
      strategies.push_back(r.strategy);
  }
  std::sort(columns.begin(), columns.end());
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%-18s", "strategy");
  os << buf.data();
  for (const auto& [i, b] : columns) {
    std::snprintf(buf.data(), buf.size(), " %16s", ("init " + std::to_string(i) + "/+" + std::to_string(b)).c_str());
    os << buf.data();
  }
  os << '\n';
  for (const auto& name : strategies) {
    std::snprintf(buf.data(), buf.size(), "%-18s", name.c_str());
    os << buf.data();
    for (const auto& col : columns) {
      const auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) {
        return r.strategy == name && std::pair{r.init_size, r.budget} == col;
      });
      if (it == rows.end() || !it->accuracy.mean) {
        std::snprintf(buf.data(), buf.size(), " %16s", "NA");
      } else {
        std::snprintf(buf.data(), buf.size(), " %9.2f +- %4.2f", 100.0 * *it->accuracy.mean, 100.0 * *it->accuracy.std);
      }
      os << buf.data();
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// SVG plots

class SvgCanvas {
 public:
  SvgCanvas(double width, double height) : width_(width), height_(height) {}

  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view color, double width,
                bool dashed = false) {
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt(width) << "\"";
    if (dashed) body_ << " stroke-dasharray=\"6,4\"";
    body_ << " points=\"" << points(pts) << "\"/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts, std::string_view color, double opacity) {
    body_ << "<polygon stroke=\"none\" fill=\"" << color << "\" fill-opacity=\"" << fmt(opacity)
          << "\" points=\"" << points(pts) << "\"/>\n";
  }
  void circle(double x, double y, double r, std::string_view color, double opacity = 1.0) {
    body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r) << "\" fill=\"" << color
          << "\" fill-opacity=\"" << fmt(opacity) << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, std::string_view color = "#000") {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
          << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
  }
  void text(double x, double y, std::string_view s, int size = 12, std::string_view anchor = "start") {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-family=\"sans-serif\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
  }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width_) << "\" height=\"" << fmt(height_)
       << "\" viewBox=\"0 0 " << fmt(width_) << ' ' << fmt(height_) << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
       << body_.str() << "</svg>\n";
    return os.str();
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IngestError("cannot write " + path);
    os << str();
  }

  static std::string fmt(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.2f", v);
    return buf.data();
  }

 private:
  static std::string points(const std::vector<std::pair<double, double>>& pts) {
    std::string s;
    for (const auto& [x, y] : pts) s += fmt(x) + ',' + fmt(y) + ' ';
    if (!s.empty()) s.pop_back();
    return s;
  }
  double width_, height_;
  std::ostringstream body_;
};

/// Linear map from data ranges to a plot rectangle (y grows upward).
struct PlotFrame {
  double left = 70, top = 40, width = 520, height = 340;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  [[nodiscard]] double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  [[nodiscard]] double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }

  void axes(SvgCanvas& c, std::string_view xlabel, std::string_view ylabel, int ticks = 5) const {
    c.line(left, top + height, left + width, top + height);
    c.line(left, top, left, top + height);
    for (int i = 0; i <= ticks; ++i) {
      const double fx = x0 + (x1 - x0) * i / ticks;
      const double fy = y0 + (y1 - y0) * i / ticks;
      c.line(px(fx), top + height, px(fx), top + height + 4);
      c.text(px(fx), top + height + 18, SvgCanvas::fmt(fx), 11, "middle");
      c.line(left - 4, py(fy), left, py(fy));
      c.text(left - 7, py(fy) + 4, SvgCanvas::fmt(fy), 11, "end");
    }
    c.text(left + width / 2, top + height + 38, xlabel, 12, "middle");
    c.text(16, top + height / 2, ylabel, 12, "middle");
  }
};

inline std::string_view strategy_color(std::string_view s) {
  if (s == "random") return "#555555";
  if (s == "least_confidence") return "#1f77b4";
  if (s == "margin") return "#2ca02c";
  if (s == "entropy") return "#d62728";
  if (s == "qbc") return "#9467bd";
  return "#ff7f0e";
}

/// One learning-curve SVG per (init, budget): mean test accuracy across seeds
/// with a shaded +-1 std band; random is dashed, active strategies solid.
/// Returns the written paths; no files for empty input.
inline std::vector<std::string> emit_curve_plots(const std::vector<ResultRow>& rows, const std::string& out_dir) {
  using Group = std::pair<std::size_t, std::size_t>;
  // (init, budget) -> strategy -> n_labeled -> accuracies
  std::map<Group, std::map<std::string, std::map<std::size_t, std::vector<double>>>> data;
  std::map<Group, std::vector<std::string>> strategy_order;
  for (const auto& r : rows) {
    if (r.status == "error" || !r.accuracy) continue;
    const Group g{r.init_size, r.budget};
    auto& order = strategy_order[g];
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
    data[g][r.strategy][r.n_labeled].push_back(*r.accuracy);
  }
  std::vector<std::string> written;
  for (const auto& [g, by_strategy] : data) {
    PlotFrame f;
    f.x0 = static_cast<double>(g.first);
    f.x1 = static_cast<double>(g.first + g.second);
    if (f.x1 <= f.x0) f.x1 = f.x0 + 1.0;
    double lo = 1.0, hi = 0.0;
    for (const auto& [s, curve] : by_strategy)
      for (const auto& [n, accs] : curve) {
        const auto st = describe(accs);
        lo = std::min(lo, *st.mean - *st.std);
        hi = std::max(hi, *st.mean + *st.std);
      }
    f.y0 = std::max(0.0, std::floor(lo * 20.0) / 20.0);
    f.y1 = std::min(1.0, std::ceil(hi * 20.0) / 20.0);
    if (f.y1 <= f.y0) f.y1 = f.y0 + 0.05;

    SvgCanvas c(f.left + f.width + 190, f.top + f.height + 60);
    c.text(f.left, 24,
           "init " + std::to_string(g.first) + ", budget " + std::to_string(g.second) + ": test accuracy (mean, +-1 std)",
           13);
    f.axes(c, "labelled samples", "accuracy");
    int legend = 0;
    for (const auto& name : strategy_order[g]) {
      const auto& curve = by_strategy.at(name);
      std::vector<std::pair<double, double>> mean, upper, lower;
      for (const auto& [n, accs] : curve) {
        const auto st = describe(accs);
        const double x = f.px(static_cast<double>(n));
        mean.emplace_back(x, f.py(*st.mean));
        upper.emplace_back(x, f.py(std::min(f.y1, *st.mean + *st.std)));
        lower.emplace_back(x, f.py(std::max(f.y0, *st.mean - *st.std)));
      }
      std::vector<std::pair<double, double>> band = upper;
      band.insert(band.end(), lower.rbegin(), lower.rend());
      const auto color = strategy_color(name);
      const bool dashed = name == "random";
      c.polygon(band, color, 0.12);
      c.polyline(mean, color, 2.0, dashed);
      for (const auto& [x, y] : mean) c.circle(x, y, 2.5, color);
      const double ly = f.top + 14 + 18 * legend++;
      c.polyline({{f.left + f.width + 20, ly - 4}, {f.left + f.width + 50, ly - 4}}, color, 2.0, dashed);
      c.text(f.left + f.width + 56, ly, name, 12);
    }
    const auto path = (std::filesystem::path(out_dir) /
                       ("curves_init" + std::to_string(g.first) + "_budget" + std::to_string(g.second) + ".svg"))
                          .string();
    c.save(path);
    written.push_back(path);
  }
  return written;
}

/// Top (x,y), side (x,z) and front (y,z) projections of the sampled envelope
/// with labelled fruit positions overlaid.
inline std::vector<std::string> emit_envelope_plots(const std::vector<ArmPoint>& envelope,
                                                    const std::vector<LabeledSample>& fruit,
                                                    const std::string& out_dir) {
  struct View {
    const char* name;
    const char* xlabel;
    const char* ylabel;
    int a, b;
  };
  static constexpr std::array<View, 3> views{{{"top", "x (m)", "y (m)", 0, 1},
                                              {"side", "x (m)", "z (m)", 0, 2},
                                              {"front", "y (m)", "z (m)", 1, 2}}};
  auto coord = [](const ArmPoint& p, int i) { return i == 0 ? p.x : i == 1 ? p.y : p.z; };
  std::vector<std::string> written;
  if (envelope.empty() && fruit.empty()) return written;
  for (const auto& v : views) {
    PlotFrame f;
    f.width = f.height = 400;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    auto extend = [&](const ArmPoint& p) {
      xmin = std::min(xmin, coord(p, v.a));
      xmax = std::max(xmax, coord(p, v.a));
      ymin = std::min(ymin, coord(p, v.b));
      ymax = std::max(ymax, coord(p, v.b));
    };
    for (const auto& p : envelope) extend(p);
    for (const auto& s : fruit) extend(s.arm_point);
    // equal aspect
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-3}) * 1.05;
    const double cxm = 0.5 * (xmin + xmax), cym = 0.5 * (ymin + ymax);
    f.x0 = cxm - span / 2;
    f.x1 = cxm + span / 2;
    f.y0 = cym - span / 2;
    f.y1 = cym + span / 2;
    SvgCanvas c(f.left + f.width + 170, f.top + f.height + 60);
    c.text(f.left, 24, std::string(v.name) + " view: reachable envelope and fruit", 13);
    f.axes(c, v.xlabel, v.ylabel, 4);
    // One marker per 2 px cell keeps the file small for dense envelopes.
    std::set<std::pair<long, long>> drawn;
    for (const auto& p : envelope) {
      const double x = f.px(coord(p, v.a)), y = f.py(coord(p, v.b));
      if (drawn.emplace(std::lround(x / 2.0), std::lround(y / 2.0)).second) c.circle(x, y, 1.5, "#4a7fd4", 0.35);
    }
    for (const auto& s : fruit)
      c.circle(f.px(coord(s.arm_point, v.a)), f.py(coord(s.arm_point, v.b)), 2.0,
               s.label == kReachable ? "#2ca02c" : "#d62728", 0.8);
    const double lx = f.left + f.width + 20;
    c.circle(lx, f.top + 10, 4, "#4a7fd4", 0.5);
    c.text(lx + 10, f.top + 14, "envelope", 12);
    c.circle(lx, f.top + 28, 4, "#2ca02c");
    c.text(lx + 10, f.top + 32, "reachable fruit", 12);
    c.circle(lx, f.top + 46, 4, "#d62728");
    c.text(lx + 10, f.top + 50, "unreachable fruit", 12);
    const auto path = (std::filesystem::path(out_dir) / ("envelope_" + std::string(v.name) + ".svg")).string();
    c.save(path);
    written.push_back(path);
  }
  return written;
}

/// Point file: one `x y z` triple per line, space separated, no header.
inline void write_points(std::ostream& os, const std::vector<ArmPoint>& pts) {
  for (const auto& p : pts)
    os << detail::format_double(p.x) << ' ' << detail::format_double(p.y) << ' ' << detail::format_double(p.z) << '\n';
}

inline std::vector<ArmPoint> read_points(std::istream& is) {
  std::vector<ArmPoint> pts;
  std::string line;
  while (std::getline(is, line)) {
    detail::strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ls(line);
    ArmPoint p;
    std::string extra;
    if (!(ls >> p.x >> p.y >> p.z) || (ls >> extra) || !p.finite())
      throw IngestError("bad point line: " + line);
    pts.push_back(p);
  }
  return pts;
}

}  // namespace reach_al
