#pragma once

// Random-forest binary classifier grown from scratch: bootstrap resampling,
// per-node random feature subsets, exhaustive Gini split search over midpoint
// thresholds, and probability output averaged over leaf class frequencies.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "reach_al/error.hpp"
#include "reach_al/rng.hpp"

namespace reach_al {

/// Class 1 = reachable, 0 = unreachable.
using Label = int;
inline constexpr Label kUnreachable = 0;
inline constexpr Label kReachable = 1;

/// (p_unreachable, p_reachable).
struct Proba {
  double unreachable = 0.5;
  double reachable = 0.5;

  static Proba from_reachable(double p) { return {1.0 - p, p}; }
  [[nodiscard]] double max() const noexcept { return std::max(unreachable, reachable); }
  friend bool operator==(const Proba&, const Proba&) = default;
};

/// Reachable only on a strict majority; an exact tie is unreachable.
inline Label decide(const Proba& p) noexcept { return p.reachable > 0.5 ? kReachable : kUnreachable; }

struct TrainConfig {
  int n_trees = 100;
  int max_depth = 0;  ///< 0 = unlimited
  int min_samples_leaf = 1;
  int features_per_split = 3;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  int threads = 1;  ///< worker threads for tree growth; does not affect results

  void validate(std::size_t feature_dim) const {
    if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
    if (max_depth < 0) throw ConfigError("max_depth must be >= 0 (0 = unlimited)");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (features_per_split < 1 || static_cast<std::size_t>(features_per_split) > feature_dim)
      throw ConfigError("features_per_split must lie in [1, feature_dim]");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Flat array of nodes; node 0 is the root. Leaves have feature == -1.
struct DecisionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double count_unreachable = 0.0;
    double count_reachable = 0.0;

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
    [[nodiscard]] double p_reachable() const noexcept {
      return count_reachable / (count_unreachable + count_reachable);
    }
  };

  std::vector<Node> nodes;

  template <std::size_t Dim>
  [[nodiscard]] const Node& leaf_for(const std::array<double, Dim>& x) const {
    const Node* n = &nodes.front();
    while (!n->is_leaf())
      n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold
                                               ? n->left
                                               : n->right)];
    return *n;
  }

  [[nodiscard]] int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (!nodes[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        best = std::max(best, d[i] + 1);
      }
    return best;
  }
};

template <std::size_t Dim>
struct Sample {
  std::array<double, Dim> x{};
  Label y = kUnreachable;
};

namespace detail {

template <std::size_t Dim>
class TreeBuilder {
 public:
  TreeBuilder(std::span<const Sample<Dim>> data, const TrainConfig& cfg, Rng& rng)
      : data_(data), cfg_(cfg), rng_(rng) {}

  DecisionTree grow(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    tree_.nodes.clear();
    struct Pending {
      int node;
      std::size_t begin;
      std::size_t end;
      int depth;
    };
    tree_.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, rows_.size(), 0}};
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      auto& node = tree_.nodes[static_cast<std::size_t>(job.node)];
      double c0 = 0.0, c1 = 0.0;
      for (std::size_t i = job.begin; i < job.end; ++i)
        (data_[rows_[i]].y == kReachable ? c1 : c0) += 1.0;
      node.count_unreachable = c0;
      node.count_reachable = c1;

      const std::size_t n = job.end - job.begin;
      const bool pure = c0 == 0.0 || c1 == 0.0;
      const bool depth_capped = cfg_.max_depth > 0 && job.depth >= cfg_.max_depth;
      if (pure || depth_capped || n < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf))
        continue;

      const auto split = best_split(job.begin, job.end, c0, c1);
      if (!split) continue;

      const auto mid_it = std::partition(
          rows_.begin() + static_cast<std::ptrdiff_t>(job.begin),
          rows_.begin() + static_cast<std::ptrdiff_t>(job.end), [&](std::uint32_t r) {
            return data_[r].x[static_cast<std::size_t>(split->feature)] <= split->threshold;
          });
      const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());

      const int left = static_cast<int>(tree_.nodes.size());
      const int right = left + 1;
      tree_.nodes.emplace_back();
      tree_.nodes.emplace_back();
      auto& parent = tree_.nodes[static_cast<std::size_t>(job.node)];
      parent.feature = split->feature;
      parent.threshold = split->threshold;
      parent.left = left;
      parent.right = right;
      stack.push_back({right, mid, job.end, job.depth + 1});
      stack.push_back({left, job.begin, mid, job.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature;
    double threshold;
    double gain;
  };

  static double weighted_gini(double c0, double c1) {
    const double n = c0 + c1;
    return n <= 0.0 ? 0.0 : n - (c0 * c0 + c1 * c1) / n;
  }

  // Features are visited in a random order; constant features do not count
  // against the per-node budget. Ties on gain go to the lower feature index,
  // then the lower threshold.
  std::optional<Split> best_split(std::size_t begin, std::size_t end, double c0, double c1) {
    std::array<std::size_t, Dim> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = Dim - 1; i > 0; --i) std::swap(order[i], order[rng_.below(i + 1)]);

    const double parent = weighted_gini(c0, c1);
    const double n_total = c0 + c1;
    const auto leaf_min = static_cast<std::size_t>(cfg_.min_samples_leaf);
    std::optional<Split> best;
    int visited = 0;
    for (std::size_t f : order) {
      if (visited >= cfg_.features_per_split) break;
      column_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = data_[rows_[i]];
        column_.emplace_back(s.x[f], s.y);
      }
      std::sort(column_.begin(), column_.end());
      if (column_.front().first == column_.back().first) continue;
      ++visited;

      double l0 = 0.0, l1 = 0.0;
      for (std::size_t i = 0; i + 1 < column_.size(); ++i) {
        (column_[i].second == kReachable ? l1 : l0) += 1.0;
        const double a = column_[i].first;
        const double b = column_[i + 1].first;
        if (a == b) continue;
        const std::size_t n_left = i + 1;
        if (n_left < leaf_min || column_.size() - n_left < leaf_min) continue;
        const double gain = parent - weighted_gini(l0, l1) - weighted_gini(c0 - l0, c1 - l1);
        if (!(gain > 1e-12 * n_total)) continue;
        double threshold = 0.5 * (a + b);
        if (threshold >= b) threshold = a;
        const Split cand{static_cast<int>(f), threshold, gain};
        if (!best || cand.gain > best->gain ||
            (cand.gain == best->gain && std::tie(cand.feature, cand.threshold) <
                                            std::tie(best->feature, best->threshold)))
          best = cand;
      }
    }
    return best;
  }

  std::span<const Sample<Dim>> data_;
  const TrainConfig& cfg_;
  Rng& rng_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::pair<double, Label>> column_;
  DecisionTree tree_;
};

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw IngestError("bad number '" + s + "'");
  return v;
}

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace detail

template <std::size_t Dim>
class RandomForest {
 public:
  static constexpr std::size_t kDim = Dim;
  using Row = std::array<double, Dim>;

  RandomForest() = default;

  /// Samples are put into canonical order (features, then label) before any
  /// random draw, so the insertion order of the training set never matters.
  static RandomForest fit(std::span<const Sample<Dim>> samples, const TrainConfig& cfg) {
    cfg.validate(Dim);
    if (samples.empty()) throw TrainingError("cannot fit a forest on an empty sample set");
    std::vector<Sample<Dim>> data(samples.begin(), samples.end());
    std::sort(data.begin(), data.end(), [](const Sample<Dim>& a, const Sample<Dim>& b) {
      return std::tie(a.x, a.y) < std::tie(b.x, b.y);
    });

    RandomForest model;
    model.config_ = cfg;
    model.trees_.resize(static_cast<std::size_t>(cfg.n_trees));
    auto grow_one = [&](std::size_t t) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
      std::vector<std::uint32_t> rows(data.size());
      if (cfg.bootstrap) {
        for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(data.size()));
      } else {
        std::iota(rows.begin(), rows.end(), 0u);
      }
      detail::TreeBuilder<Dim> builder(std::span<const Sample<Dim>>(data), cfg, rng);
      model.trees_[t] = builder.grow(std::move(rows));
    };

    const auto n = model.trees_.size();
    const auto workers = static_cast<std::size_t>(std::clamp(cfg.threads, 1, cfg.n_trees));
    if (workers == 1) {
      for (std::size_t t = 0; t < n; ++t) grow_one(t);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t t = w; t < n; t += workers) grow_one(t);
        });
    }
    return model;
  }

  [[nodiscard]] Proba predict_proba(const Row& x) const {
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.leaf_for(x).p_reachable();
    return Proba::from_reachable(sum / static_cast<double>(trees_.size()));
  }

  [[nodiscard]] Label predict(const Row& x) const { return decide(predict_proba(x)); }

  [[nodiscard]] std::vector<Proba> predict_proba(std::span<const Row> xs) const {
    std::vector<Proba> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(predict_proba(x));
    return out;
  }

  [[nodiscard]] const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  [[nodiscard]] const TrainConfig& config() const noexcept { return config_; }
  [[nodiscard]] bool trained() const noexcept { return !trees_.empty(); }

  // Text format, one token stream:
  //   reach-al-forest 1 <dim> <n_trees> <max_depth> <min_leaf> <mtry> <bootstrap> <seed>
  //   tree <n_nodes>
  //   <feature> <threshold> <left> <right> <count_unreachable> <count_reachable>   (per node)
  // Doubles use the shortest round-trip representation.
  void save(std::ostream& os) const {
    os << "reach-al-forest 1 " << Dim << ' ' << config_.n_trees << ' ' << config_.max_depth << ' '
       << config_.min_samples_leaf << ' ' << config_.features_per_split << ' '
       << (config_.bootstrap ? 1 : 0) << ' ' << config_.seed << '\n';
    for (const auto& tree : trees_) {
      os << "tree " << tree.nodes.size() << '\n';
      for (const auto& node : tree.nodes)
        os << node.feature << ' ' << detail::format_double(node.threshold) << ' ' << node.left << ' '
           << node.right << ' ' << detail::format_double(node.count_unreachable) << ' '
           << detail::format_double(node.count_reachable) << '\n';
    }
  }

  [[nodiscard]] std::string serialize() const {
    std::ostringstream os;
    save(os);
    return os.str();
  }

  static RandomForest load(std::istream& is) {
    std::string magic;
    int version = 0;
    std::size_t dim = 0;
    int bootstrap = 0;
    RandomForest model;
    auto& c = model.config_;
    is >> magic >> version >> dim >> c.n_trees >> c.max_depth >> c.min_samples_leaf >>
        c.features_per_split >> bootstrap >> c.seed;
    if (!is || magic != "reach-al-forest" || version != 1 || dim != Dim)
      throw IngestError("not a reach-al forest dump");
    c.bootstrap = bootstrap != 0;
    model.trees_.resize(static_cast<std::size_t>(c.n_trees));
    for (auto& tree : model.trees_) {
      std::string tag;
      std::size_t n_nodes = 0;
      is >> tag >> n_nodes;
      if (!is || tag != "tree" || n_nodes == 0) throw IngestError("corrupt forest dump");
      tree.nodes.resize(n_nodes);
      for (auto& node : tree.nodes) {
        std::string thr, c0, c1;
        is >> node.feature >> thr >> node.left >> node.right >> c0 >> c1;
        if (!is) throw IngestError("truncated forest dump");
        node.threshold = detail::parse_double(thr);
        node.count_unreachable = detail::parse_double(c0);
        node.count_reachable = detail::parse_double(c1);
      }
    }
    return model;
  }

 private:
  std::vector<DecisionTree> trees_;
  TrainConfig config_;
};

}  // namespace reach_al
