#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "reach_al/error.hpp"
#include "reach_al/forest.hpp"

namespace reach_al {

/// Confusion counts and derived rates with reachable as the positive class.
/// Rates whose denominator is zero are left empty rather than reported as 0.
struct MetricSet {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> auc;

  [[nodiscard]] std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

inline MetricSet confusion_and_rates(std::span<const Label> preds, std::span<const Label> truths) {
  if (preds.size() != truths.size())
    throw UsageError("prediction and truth vectors differ in length");
  if (preds.empty()) throw UsageError("cannot score an empty prediction vector");
  MetricSet m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == kReachable;
    const bool t = truths[i] == kReachable;
    if (p && t) ++m.tp;
    else if (p && !t) ++m.fp;
    else if (!p && t) ++m.fn;
    else ++m.tn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  else if (m.precision && m.recall)
    m.f1 = 0.0;
  return m;
}

/// ROC area as the Mann-Whitney statistic: the probability that a random
/// positive outscores a random negative, ties counted half. Computed from
/// mid-ranks in O(n log n). Empty when either class is absent.
inline std::optional<double> roc_auc(std::span<const double> scores, std::span<const Label> truths) {
  if (scores.size() != truths.size()) throw UsageError("score and truth vectors differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j share the mid-rank
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (truths[order[k]] == kReachable) {
        positive_rank_sum += mid_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

/// Fraction of candidates predicted unreachable, i.e. IK calls skipped.
inline double ik_call_reduction(std::span<const Label> preds) {
  if (preds.empty()) throw UsageError("ik_call_reduction needs at least one prediction");
  const auto skipped = std::count(preds.begin(), preds.end(), kUnreachable);
  return static_cast<double>(skipped) / static_cast<double>(preds.size());
}

struct CurvePoint {
  std::size_t n_labeled = 0;
  double accuracy = 0.0;
};

}  // namespace reach_al
