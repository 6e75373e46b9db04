// reach-al: command-line driver for scene generation, labelling, active
// learning runs and sweeps, and plotting.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "reach_al/reach_al.hpp"

namespace fs = std::filesystem;
using namespace reach_al;

namespace {

constexpr int kExitFatal = 1;
constexpr int kExitCellFailures = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool strict = false;
  int jobs = 1;
};

std::string out_dir(const Globals& g) {
  std::string dir = g.out;
  if (dir.empty()) {
    const char* env = std::getenv("REACH_AL_OUT");
    dir = env && *env ? env : "out";
  }
  fs::create_directories(dir);
  return dir;
}

std::string in_out(const Globals& g, const std::string& name) { return (fs::path(out_dir(g)) / name).string(); }

ExperimentConfig load(const Globals& g) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  cfg.validate();
  return cfg;
}

/// Labelled benchmark from a cached labelled-sample file, or a fresh scene.
Benchmark benchmark_for(const ExperimentConfig& cfg, const std::string& labeled_path) {
  if (labeled_path.empty()) return build_benchmark(cfg);
  std::ifstream is(labeled_path, std::ios::binary);
  if (!is) throw IngestError("cannot open labelled-sample file " + labeled_path);
  auto file = read_labeled(is);
  if (file.samples.size() <= cfg.n_samples)
    throw ConfigError(labeled_path + " holds " + std::to_string(file.samples.size()) +
                      " samples; need more than data.n_samples = " + std::to_string(cfg.n_samples));
  Benchmark b;
  b.records = std::move(file.records);
  const auto n_cand = std::min(cfg.n_candidates, file.samples.size() - cfg.n_samples);
  b.samples.assign(file.samples.begin(), file.samples.begin() + static_cast<std::ptrdiff_t>(cfg.n_samples));
  b.candidates.assign(file.samples.begin() + static_cast<std::ptrdiff_t>(cfg.n_samples),
                      file.samples.begin() + static_cast<std::ptrdiff_t>(cfg.n_samples + n_cand));
  return b;
}

int report_failures(const std::vector<CellFailure>& failures, const Globals& g) {
  for (const auto& f : failures)
    std::cerr << "warning: cell " << to_string(f.cell.strategy) << " init=" << f.cell.init_size
              << " budget=" << f.cell.budget << " seed=" << f.cell.seed << " failed: " << f.message << '\n';
  return failures.empty() || !g.strict ? 0 : kExitCellFailures;
}

void write_summary_file(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestError("cannot write " + path);
  write_summary(os, summarize(rows));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability classification with pool-based active learning"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "scene seed for gen-scene/label, seed base for run/sweep");
  app.add_option("--out", g.out, "output directory (default: $REACH_AL_OUT, else ./out)");
  app.add_flag("--strict", g.strict, "exit nonzero when any cell fails");
  app.add_option("--jobs", g.jobs, "maximum concurrent cells")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-scene", "generate synthetic detections");
  auto* label = app.add_subcommand("label", "label detections with the kinematic oracle");
  std::string label_input;
  label->add_option("--input", label_input, "detection file (default: <out>/detections.csv)");

  auto* run = app.add_subcommand("run", "one active-learning cell");
  std::string run_strategy = "entropy", run_labeled;
  std::size_t run_init = 30, run_budget = 50;
  run->add_option("--strategy", run_strategy, "random|least_confidence|margin|entropy|qbc");
  run->add_option("--init", run_init, "initial labelled size");
  run->add_option("--budget", run_budget, "labels to acquire");
  run->add_option("--labeled", run_labeled, "labelled-sample file instead of a fresh scene");

  auto* sweep = app.add_subcommand("sweep", "full strategy x init x budget x seed grid");
  std::string sweep_labeled;
  sweep->add_option("--labeled", sweep_labeled, "labelled-sample file instead of a fresh scene");

  auto* envelope = app.add_subcommand("envelope", "sample the reachable envelope");
  int env_steps = 24;
  envelope->add_option("--steps", env_steps, "grid steps per joint")->check(CLI::Range(2, 200));

  auto* plot = app.add_subcommand("plot", "write SVG learning curves or envelope projections");
  std::string plot_kind = "curves", plot_results;
  plot->add_option("--kind", plot_kind, "curves|envelope")->check(CLI::IsMember({"curves", "envelope"}));
  plot->add_option("--results", plot_results, "results file (default: <out>/results.csv)");

  auto* report = app.add_subcommand("report", "summarise a results file");
  std::string report_results;
  report->add_option("--results", report_results, "results file (default: <out>/results.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load(g);
    if (gen->parsed() || label->parsed()) {
      if (g.seed) cfg.scene.seed = *g.seed;
    } else if (g.seed) {
      cfg.grid.seeds = ExperimentGrid::make_seeds(*g.seed, cfg.grid.seeds.size());
    }

    if (gen->parsed()) {
      const auto records = generate_scene(cfg.scene, cfg.camera);
      const auto path = in_out(g, "detections.csv");
      write_detections(path, records);
      std::cout << "wrote " << records.size() << " detections to " << path << '\n';
      return 0;
    }

    if (label->parsed()) {
      const auto input = label_input.empty() ? in_out(g, "detections.csv") : label_input;
      auto ingest = ingest_detections(input, {cfg.camera.rgb_width, cfg.camera.rgb_height});
      for (const auto& w : ingest.warnings) std::cerr << "warning: " << w << '\n';
      const auto result = label_with_oracle(ingest.records, cfg.camera, cfg.extrinsics, cfg.arm, cfg.features);
      const auto path = in_out(g, "labeled.csv");
      std::ofstream os(path, std::ios::binary);
      if (!os) throw IngestError("cannot write " + path);
      write_labeled(os, ingest.records, result.samples);
      std::size_t reachable = 0;
      for (const auto& s : result.samples) reachable += s.label == kReachable ? 1 : 0;
      std::cout << "labelled " << result.samples.size() << " detections (" << ingest.skipped << " malformed rows, "
                << result.dropped_boundary << " outside the image, " << result.dropped_depth << " without depth)\n";
      if (!result.samples.empty())
        std::cout << "unreachable fraction "
                  << 1.0 - static_cast<double>(reachable) / static_cast<double>(result.samples.size()) << '\n';
      std::cout << "wrote " << path << '\n';
      return 0;
    }

    if (run->parsed()) {
      const Benchmark bench = benchmark_for(cfg, run_labeled);
      const Cell cell{parse_strategy(run_strategy), run_init, run_budget, cfg.grid.seeds.front()};
      std::string error;
      const auto rows = run_cell(cfg, bench, cell, &error);
      const auto path = in_out(g, "results_run.csv");
      ResultsWriter writer(path);
      writer.append(rows);
      for (const auto& r : rows)
        if (r.accuracy) std::cout << "round " << r.round << " n_labeled " << r.n_labeled << " accuracy " << *r.accuracy << '\n';
      std::cout << "wrote " << path << '\n';
      return error.empty() ? 0 : report_failures({{cell, error}}, g);
    }

    if (sweep->parsed()) {
      const Benchmark bench = benchmark_for(cfg, sweep_labeled);
      const auto path = in_out(g, "results.csv");
      ResultsWriter writer(path);
      std::vector<ResultRow> all;
      const auto failures = run_grid(
          cfg, bench,
          [&](const std::vector<ResultRow>& rows) {
            writer.append(rows);
            all.insert(all.end(), rows.begin(), rows.end());
          },
          g.jobs);
      const auto summary_path = in_out(g, "summary.csv");
      write_summary_file(all, summary_path);
      print_accuracy_table(std::cout, summarize(all));
      std::cout << "wrote " << path << " and " << summary_path << '\n';
      return report_failures(failures, g);
    }

    if (envelope->parsed()) {
      const auto pts = sample_envelope(cfg.arm, env_steps);
      const auto path = in_out(g, "envelope.txt");
      std::ofstream os(path, std::ios::binary);
      if (!os) throw IngestError("cannot write " + path);
      write_points(os, pts);
      std::cout << "wrote " << pts.size() << " envelope points to " << path << '\n';
      return 0;
    }

    if (plot->parsed()) {
      std::vector<std::string> written;
      if (plot_kind == "curves") {
        const auto rows = read_results(plot_results.empty() ? in_out(g, "results.csv") : plot_results);
        written = emit_curve_plots(rows, out_dir(g));
      } else {
        std::vector<ArmPoint> env;
        if (std::ifstream is(in_out(g, "envelope.txt"), std::ios::binary); is) env = read_points(is);
        std::vector<LabeledSample> fruit;
        if (std::ifstream is(in_out(g, "labeled.csv"), std::ios::binary); is) fruit = read_labeled(is).samples;
        written = emit_envelope_plots(env, fruit, out_dir(g));
      }
      if (written.empty()) std::cerr << "warning: nothing to plot\n";
      for (const auto& p : written) std::cout << "wrote " << p << '\n';
      return 0;
    }

    if (report->parsed()) {
      const auto rows = read_results(report_results.empty() ? in_out(g, "results.csv") : report_results);
      const auto summary = summarize(rows);
      const auto path = in_out(g, "summary.csv");
      write_summary_file(rows, path);
      print_accuracy_table(std::cout, summary);
      std::size_t errors = 0;
      for (const auto& s : summary) errors += s.n_errors;
      std::cout << "wrote " << path << '\n';
      return errors > 0 && g.strict ? kExitCellFailures : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return 0;
}
