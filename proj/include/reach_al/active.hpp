#pragma once

// Pool-based active learning: query scores, deterministic top-b batch
// selection and the fit / score / query / refit / evaluate loop.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reach_al/dataset.hpp"
#include "reach_al/error.hpp"
#include "reach_al/features.hpp"
#include "reach_al/forest.hpp"
#include "reach_al/metrics.hpp"
#include "reach_al/rng.hpp"

namespace reach_al {

enum class Strategy { kRandom, kLeastConfidence, kMargin, kEntropy, kQbc };

inline constexpr std::array<Strategy, 5> kAllStrategies{
    Strategy::kRandom, Strategy::kLeastConfidence, Strategy::kMargin, Strategy::kEntropy,
    Strategy::kQbc};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kLeastConfidence: return "least_confidence";
    case Strategy::kMargin: return "margin";
    case Strategy::kEntropy: return "entropy";
    case Strategy::kQbc: return "qbc";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies)
    if (to_string(s) == name) return s;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Scores: higher means more informative.

inline double score_least_confidence(const Proba& p) noexcept { return 1.0 - p.max(); }

inline double score_margin(const Proba& p) noexcept { return -std::abs(p.reachable - p.unreachable); }

/// Shannon entropy in bits of a two-outcome distribution, 0 log 0 = 0.
/// The pair is ordered first so mirrored inputs give bit-identical scores.
inline double binary_entropy(double a, double b) noexcept {
  if (a > b) std::swap(a, b);
  double h = 0.0;
  if (a > 0.0) h -= a * std::log2(a);
  if (b > 0.0) h -= b * std::log2(b);
  return h;
}

inline double score_entropy(const Proba& p) noexcept { return binary_entropy(p.unreachable, p.reachable); }

/// Vote entropy of a committee; each member votes through decide().
inline double score_qbc(std::span<const Proba> committee) {
  if (committee.size() < 2) throw UsageError("QBC needs at least two committee members");
  std::size_t reachable_votes = 0;
  for (const auto& p : committee) reachable_votes += decide(p) == kReachable ? 1 : 0;
  const double k = static_cast<double>(committee.size());
  const double f = static_cast<double>(reachable_votes) / k;
  return binary_entropy(1.0 - f, f);
}

/// Indices of the b highest scores, ties to the lower index, returned in
/// selection order.
inline std::vector<std::size_t> select_batch(std::span<const double> scores, std::size_t b) {
  if (b > scores.size()) throw UsageError("batch size exceeds the number of scores");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t c) {
    return scores[a] > scores[c] || (scores[a] == scores[c] && a < c);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(b), idx.end(), better);
  idx.resize(b);
  return idx;
}

// ---------------------------------------------------------------------------
// Loop

struct ALConfig {
  Strategy strategy = Strategy::kEntropy;
  std::size_t init_size = 30;
  std::size_t batch_size = 50;
  std::size_t n_queries = 50;
  int committee_size = 5;
  int committee_trees = 25;
  /// Pool instances scored per round (seeded subsample); 0 scores all of U.
  std::size_t score_cap = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (strategy == Strategy::kQbc && committee_size < 2)
      throw ConfigError("QBC committee size must be >= 2");
    if (committee_trees < 1) throw ConfigError("committee forests need >= 1 tree");
    if (score_cap != 0 && score_cap < batch_size)
      throw ConfigError("score cap must be 0 or at least the batch size");
  }
};

struct RoundLog {
  std::size_t round_index = 0;  ///< 0 is the model fitted on the initial L
  std::size_t n_labeled = 0;
  MetricSet metrics;
  double ik_reduction = 0.0;
  std::vector<std::size_t> queried_indices;  ///< pool indices acquired this round
  bool truncated = false;                    ///< pool ran out before the budget
};

using ReachForest = RandomForest<kFeatureDim>;
using ReachSample = Sample<kFeatureDim>;

inline ReachSample to_sample(const FeatureVector& f, Label y) { return {f.values, y}; }

/// Test-set metrics of a fitted forest, including AUC and IK-call reduction.
inline RoundLog evaluate(const ReachForest& model, std::span<const LabeledSample> test) {
  if (test.empty()) throw UsageError("empty test set");
  std::vector<Label> preds, truths;
  std::vector<double> scores;
  preds.reserve(test.size());
  truths.reserve(test.size());
  scores.reserve(test.size());
  for (const auto& s : test) {
    const Proba p = model.predict_proba(s.features.values);
    preds.push_back(decide(p));
    truths.push_back(s.label);
    scores.push_back(p.reachable);
  }
  RoundLog log;
  log.metrics = confusion_and_rates(preds, truths);
  log.metrics.auc = roc_auc(scores, truths);
  log.ik_reduction = ik_call_reduction(preds);
  return log;
}

namespace detail {

inline std::vector<double> score_pool(const ALConfig& cfg, const TrainConfig& train,
                                      const ReachForest& model,
                                      std::span<const ReachSample> labeled,
                                      const HiddenPool& pool, std::span<const std::size_t> candidates,
                                      std::size_t round) {
  std::vector<double> scores(candidates.size());
  switch (cfg.strategy) {
    case Strategy::kRandom: {
      Rng rng(derive_seed(derive_seed(cfg.seed, "random-scores"), round));
      for (auto& s : scores) s = rng.uniform();
      return scores;
    }
    case Strategy::kQbc: {
      std::vector<ReachForest> committee;
      committee.reserve(static_cast<std::size_t>(cfg.committee_size));
      const auto qbc_seed = derive_seed(derive_seed(cfg.seed, "qbc"), round);
      for (int k = 0; k < cfg.committee_size; ++k) {
        const auto member_seed = derive_seed(qbc_seed, static_cast<std::uint64_t>(k));
        Rng rng(derive_seed(member_seed, "resample"));
        std::vector<ReachSample> resample(labeled.size());
        for (auto& r : resample) r = labeled[rng.below(labeled.size())];
        TrainConfig member = train;
        member.n_trees = cfg.committee_trees;
        member.seed = member_seed;
        committee.push_back(ReachForest::fit(resample, member));
      }
      std::vector<Proba> votes(committee.size());
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& x = pool.features(candidates[i]).values;
        for (std::size_t k = 0; k < committee.size(); ++k) votes[k] = committee[k].predict_proba(x);
        scores[i] = score_qbc(votes);
      }
      return scores;
    }
    default: break;
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Proba p = model.predict_proba(pool.features(candidates[i]).values);
    switch (cfg.strategy) {
      case Strategy::kLeastConfidence: scores[i] = score_least_confidence(p); break;
      case Strategy::kMargin: scores[i] = score_margin(p); break;
      default: scores[i] = score_entropy(p); break;
    }
  }
  return scores;
}

}  // namespace detail

/// Runs one active-learning cell. Returns one log per fitted model: round 0
/// for the initial L, then one per acquired batch. The final batch may be
/// partial when n_queries is not a multiple of b.
inline std::vector<RoundLog> run_loop(const PoolSplit& pools, const ALConfig& cfg,
                                      const TrainConfig& train) {
  cfg.validate();
  train.validate(kFeatureDim);
  if (pools.labeled.empty()) throw TrainingError("initial labelled set is empty");

  std::vector<ReachSample> labeled;
  labeled.reserve(pools.labeled.size() + cfg.n_queries);
  for (const auto& s : pools.labeled) labeled.push_back(to_sample(s.features, s.label));

  const HiddenPool& pool = pools.unlabeled;
  std::vector<std::size_t> remaining(pool.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});

  auto fit = [&](std::size_t round) {
    TrainConfig tc = train;
    tc.seed = derive_seed(derive_seed(cfg.seed, "forest"), round);
    return ReachForest::fit(labeled, tc);
  };

  std::vector<RoundLog> logs;
  ReachForest model = fit(0);
  logs.push_back(evaluate(model, pools.test));
  logs.back().n_labeled = labeled.size();

  std::size_t acquired = 0;
  for (std::size_t round = 1; acquired < cfg.n_queries; ++round) {
    if (remaining.empty()) {
      logs.back().truncated = true;
      break;
    }
    std::size_t b = std::min(cfg.batch_size, cfg.n_queries - acquired);
    bool truncated = false;
    if (b > remaining.size()) {
      b = remaining.size();
      truncated = true;
    }

    // Candidates scored this round: all of U, or a seeded subsample.
    std::vector<std::size_t> candidates = remaining;
    if (cfg.score_cap != 0 && candidates.size() > cfg.score_cap) {
      Rng rng(derive_seed(derive_seed(cfg.seed, "score-cap"), round));
      for (std::size_t i = 0; i < cfg.score_cap; ++i)
        std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
      candidates.resize(cfg.score_cap);
      std::sort(candidates.begin(), candidates.end());
    }

    const auto scores = detail::score_pool(cfg, train, model, labeled, pool, candidates, round);
    const auto picks = select_batch(scores, b);

    RoundLog log;
    log.queried_indices.reserve(picks.size());
    for (auto k : picks) {
      const std::size_t idx = candidates[k];
      log.queried_indices.push_back(idx);
      labeled.push_back(to_sample(pool.features(idx), pool.reveal(idx)));
    }
    std::vector<std::size_t> taken = log.queried_indices;
    std::sort(taken.begin(), taken.end());
    std::erase_if(remaining, [&](std::size_t i) { return std::binary_search(taken.begin(), taken.end(), i); });
    acquired += picks.size();

    model = fit(round);
    RoundLog scored = evaluate(model, pools.test);
    log.metrics = scored.metrics;
    log.ik_reduction = scored.ik_reduction;
    log.round_index = round;
    log.n_labeled = labeled.size();
    log.truncated = truncated;
    logs.push_back(std::move(log));
    if (truncated) break;
  }
  return logs;
}

/// (n_labeled, accuracy) per log, in loop order.
inline std::vector<CurvePoint> efficiency_curve(std::span<const RoundLog> logs) {
  if (logs.empty()) throw UsageError("efficiency curve needs at least one round");
  std::vector<CurvePoint> out;
  out.reserve(logs.size());
  for (const auto& l : logs) out.push_back({l.n_labeled, l.metrics.accuracy});
  return out;
}

}  // namespace reach_al
