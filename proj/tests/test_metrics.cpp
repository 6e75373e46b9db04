#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "reach_al/active.hpp"
#include "reach_al/metrics.hpp"
#include "reach_al/rng.hpp"

using namespace reach_al;

namespace {

// O(P * N) pairwise oracle.
std::optional<double> pairwise_auc(const std::vector<double>& s, const std::vector<Label>& y) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != kReachable) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] == kReachable) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  if (pairs == 0) return std::nullopt;
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST(Confusion, PerfectPredictions) {
  const std::vector<Label> y{1, 1, 0, 0};
  const auto m = confusion_and_rates(y, y);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(*m.precision, 1.0);
  EXPECT_DOUBLE_EQ(*m.recall, 1.0);
  EXPECT_DOUBLE_EQ(*m.f1, 1.0);
  EXPECT_FALSE(m.auc);
}

TEST(Confusion, NoPositivePredictions) {
  const std::vector<Label> p{0, 0, 0, 0}, y{1, 1, 0, 0};
  const auto m = confusion_and_rates(p, y);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(*m.recall, 0.0);
  EXPECT_FALSE(m.precision);
  EXPECT_FALSE(m.f1);
}

TEST(Confusion, HandCountedTable) {
  const std::vector<Label> p{1, 0, 1, 1}, y{1, 0, 0, 1};
  const auto m = confusion_and_rates(p, y);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.tn, 1u);
  EXPECT_EQ(m.fn, 0u);
  EXPECT_NEAR(*m.precision, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(*m.recall, 1.0);
  EXPECT_NEAR(*m.f1, 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
}

TEST(Confusion, ZeroF1WhenNothingRight) {
  const std::vector<Label> p{1, 0}, y{0, 1};
  const auto m = confusion_and_rates(p, y);
  EXPECT_DOUBLE_EQ(*m.precision, 0.0);
  EXPECT_DOUBLE_EQ(*m.recall, 0.0);
  EXPECT_DOUBLE_EQ(*m.f1, 0.0);
}

TEST(Confusion, UsageErrors) {
  const std::vector<Label> a{1, 0}, b{1};
  EXPECT_THROW(confusion_and_rates(a, b), UsageError);
  EXPECT_THROW(confusion_and_rates(std::vector<Label>{}, std::vector<Label>{}), UsageError);
}

TEST(Confusion, AccuracyIsOneMinusHamming) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const auto n = 1 + rng.below(60);
    std::vector<Label> p(n), y(n);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<Label>(rng.below(2));
      y[i] = static_cast<Label>(rng.below(2));
      diff += p[i] != y[i] ? 1 : 0;
    }
    EXPECT_NEAR(confusion_and_rates(p, y).accuracy, 1.0 - static_cast<double>(diff) / static_cast<double>(n), 1e-15);
  }
}

TEST(RocAuc, Examples) {
  EXPECT_DOUBLE_EQ(*roc_auc(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<Label>{1, 0, 1, 0}), 0.75);
  EXPECT_DOUBLE_EQ(*roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<Label>{1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(*roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<Label>{1, 0, 1, 0}), 0.5);
  EXPECT_FALSE(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<Label>{1, 1}));
  EXPECT_THROW(roc_auc(std::vector<double>{0.1}, std::vector<Label>{1, 0}), UsageError);
}

TEST(RocAuc, MatchesPairwiseOracle) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<Label> y(n);
    const bool coarse = rng.bernoulli(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(7)) / 6.0 : rng.uniform();
      y[i] = static_cast<Label>(rng.below(2));
    }
    const auto fast = roc_auc(s, y);
    const auto slow = pairwise_auc(s, y);
    ASSERT_EQ(fast.has_value(), slow.has_value());
    if (fast) {
      EXPECT_NEAR(*fast, *slow, 1e-12);
    }
  }
}

TEST(RocAuc, FlipAndMonotoneTransform) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const auto n = 4 + rng.below(100);
    std::vector<double> s(n), warped(n);
    std::vector<Label> y(n), flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      warped[i] = std::exp(5.0 * s[i]) - 3.0;
      y[i] = static_cast<Label>(i % 2);
      flipped[i] = 1 - y[i];
    }
    EXPECT_NEAR(*roc_auc(s, y) + *roc_auc(s, flipped), 1.0, 1e-12);
    EXPECT_NEAR(*roc_auc(s, y), *roc_auc(warped, y), 1e-12);
  }
}

TEST(IkCallReduction, Examples) {
  EXPECT_DOUBLE_EQ(ik_call_reduction(std::vector<Label>{0, 0, 1, 1, 1}), 0.4);
  EXPECT_DOUBLE_EQ(ik_call_reduction(std::vector<Label>{1, 1}), 0.0);
  EXPECT_THROW(ik_call_reduction(std::vector<Label>{}), UsageError);
}

TEST(EfficiencyCurve, FromLogs) {
  RoundLog one;
  one.n_labeled = 60;
  one.metrics.accuracy = 0.93;
  const auto c = efficiency_curve(std::vector<RoundLog>{one});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].n_labeled, 60u);
  EXPECT_DOUBLE_EQ(c[0].accuracy, 0.93);
  EXPECT_THROW(efficiency_curve(std::vector<RoundLog>{}), UsageError);
}
