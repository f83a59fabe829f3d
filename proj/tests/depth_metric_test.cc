#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "support/test_support.h"
#include "worldguide/depth_metric.h"
#include "worldguide/error.h"

namespace worldguide {
namespace {

using testing::Uniform;

// Weighted normal equations [sum w x^2, sum w x; sum w x, sum w] solved
// directly, independent of the library's centered form.
Eigen::Vector2d NormalEquationFit(const std::vector<DepthCorrespondence>& pairs) {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (const auto& p : pairs) {
    const Eigen::Vector2d row(p.mono, 1.0);
    a += p.weight * row * row.transpose();
    b += p.weight * row * p.metric;
  }
  return a.ldlt().solve(b);
}

struct Trial {
  std::vector<DepthCorrespondence> pairs;
  std::vector<DepthCorrespondence> inliers;
};

// 70% inliers on metric = a * mono + b with uniform relative noise, 30%
// outliers drawn uniformly but at least 6% off the line, outside the
// 5% inlier band with a margin for the refit.
Trial MakeTrial(SplitMix64& rng, double a, double b, std::size_t n,
                double outlier_fraction, double noise) {
  Trial t;
  const std::size_t outliers = std::size_t(outlier_fraction * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mono = Uniform(rng, 0.5, 10.0);
    const double truth = a * mono + b;
    DepthCorrespondence p{mono, truth, Uniform(rng, 0.5, 1.0)};
    if (i < outliers) {
      do {
        p.metric = Uniform(rng, 0.1, 2.0 * (a * 10.0 + b));
      } while (std::abs(p.metric - truth) / p.metric < 0.06);
    } else {
      p.metric = truth * (1.0 + Uniform(rng, -noise, noise));
      t.inliers.push_back(p);
    }
    t.pairs.push_back(p);
  }
  return t;
}

TEST(DepthMetricTest, NoiselessAffine) {
  std::vector<DepthCorrespondence> pairs;
  for (int i = 1; i <= 20; ++i) pairs.push_back({0.3 * i, 2.0 * 0.3 * i + 0.5});
  const ScaleShift ss = EstimateScaleShift(pairs);
  EXPECT_NEAR(ss.scale, 2.0, 1e-12);
  EXPECT_NEAR(ss.shift, 0.5, 1e-12);
  EXPECT_EQ(ss.inlier_ratio, 1.0);
}

TEST(DepthMetricTest, IdentityPairs) {
  std::vector<DepthCorrespondence> pairs;
  for (int i = 1; i <= 10; ++i) pairs.push_back({double(i), double(i)});
  const ScaleShift ss = EstimateScaleShift(pairs);
  EXPECT_NEAR(ss.scale, 1.0, 1e-12);
  EXPECT_NEAR(ss.shift, 0.0, 1e-12);
}

TEST(DepthMetricTest, SelfConsistencyThroughApplyScaleShift) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const ScaleShift truth{Uniform(rng, 0.2, 5.0), Uniform(rng, -0.5, 2.0), 1};
    DepthMap mono(6, 6);
    for (auto& v : mono.values) v = Uniform(rng, 1.0, 8.0);
    std::fill(mono.valid.begin(), mono.valid.end(), 1);
    const DepthMap metric = ApplyScaleShift(mono, truth);
    std::vector<DepthCorrespondence> pairs;
    for (std::size_t i = 0; i < mono.values.size(); ++i) {
      if (metric.valid[i]) pairs.push_back({mono.values[i], metric.values[i]});
    }
    RansacConfig cfg;
    cfg.seed = trial;
    const ScaleShift ss = EstimateScaleShift(pairs, cfg);
    EXPECT_NEAR(ss.scale, truth.scale, 1e-9);
    EXPECT_NEAR(ss.shift, truth.shift, 1e-9);
  }
}

TEST(DepthMetricTest, MatchesInlierLeastSquaresOracle) {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Trial t = MakeTrial(rng, 1.5, 0.2, 200, 0.3, 0.01);
    RansacConfig cfg;
    cfg.seed = 1000 + trial;
    const ScaleShift ss = EstimateScaleShift(t.pairs, cfg);
    const Eigen::Vector2d oracle = NormalEquationFit(t.inliers);
    EXPECT_NEAR(ss.scale / oracle[0], 1.0, 1e-3);
    EXPECT_NEAR(ss.shift / oracle[1], 1.0, 1e-3);
    EXPECT_NEAR(ss.scale / 1.5, 1.0, 2e-2);
  }
}

TEST(DepthMetricTest, FortyPercentOutliers) {
  SplitMix64 rng(78);
  for (int trial = 0; trial < 20; ++trial) {
    const Trial t = MakeTrial(rng, 0.8, 1.0, 150, 0.4, 0.01);
    RansacConfig cfg;
    cfg.seed = trial;
    const ScaleShift ss = EstimateScaleShift(t.pairs, cfg);
    const Eigen::Vector2d oracle = NormalEquationFit(t.inliers);
    EXPECT_NEAR(ss.scale / oracle[0], 1.0, 1e-3);
    EXPECT_NEAR(ss.shift / oracle[1], 1.0, 1e-3);
  }
}

TEST(DepthMetricTest, WeightedLeastSquaresMatchesNormalEquations) {
  SplitMix64 rng(5);
  std::vector<DepthCorrespondence> pairs;
  for (int i = 0; i < 30; ++i) {
    pairs.push_back({Uniform(rng, 1, 5), Uniform(rng, 1, 10), Uniform(rng, 0, 1)});
  }
  const ScaleShift ss = FitScaleShiftLeastSquares(pairs);
  const Eigen::Vector2d oracle = NormalEquationFit(pairs);
  EXPECT_NEAR(ss.scale, oracle[0], 1e-10);
  EXPECT_NEAR(ss.shift, oracle[1], 1e-10);
}

TEST(DepthMetricTest, ConstantDepthIsDegenerate) {
  std::vector<DepthCorrespondence> pairs;
  for (int i = 0; i < 50; ++i) pairs.push_back({2.0, 1.0 + i});
  for (int seed = 0; seed < 10; ++seed) {
    RansacConfig cfg;
    cfg.seed = seed;
    try {
      EstimateScaleShift(pairs, cfg);
      FAIL() << "expected DegenerateDepth";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDegenerateDepth);
    }
  }
}

TEST(DepthMetricTest, InsufficientInliers) {
  SplitMix64 rng(8);
  std::vector<DepthCorrespondence> pairs;
  // Scattered pairs: no line holds 30% of them within 5%.
  for (int i = 0; i < 60; ++i) {
    pairs.push_back({Uniform(rng, 1, 10), Uniform(rng, 0.1, 100)});
  }
  try {
    EstimateScaleShift(pairs);
    FAIL() << "expected InsufficientInliers";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientInliers);
  }
}

TEST(DepthMetricTest, RejectsBadInput) {
  const std::vector<DepthCorrespondence> one{{1.0, 1.0}};
  EXPECT_THROW(EstimateScaleShift(one), Error);
  const std::vector<DepthCorrespondence> negative{{1.0, 1.0}, {-1.0, 2.0}};
  EXPECT_THROW(EstimateScaleShift(negative), Error);
  const std::vector<DepthCorrespondence> weight{{1.0, 1.0, 1.5}, {2.0, 2.0}};
  EXPECT_THROW(EstimateScaleShift(weight), Error);
}

TEST(DepthMetricTest, DeterministicForFixedSeed) {
  SplitMix64 rng(9);
  const Trial t = MakeTrial(rng, 1.2, 0.3, 100, 0.35, 0.01);
  RansacConfig cfg;
  cfg.seed = 42;
  const ScaleShift a = EstimateScaleShift(t.pairs, cfg);
  const ScaleShift b = EstimateScaleShift(t.pairs, cfg);
  EXPECT_EQ(a.scale, b.scale);
  EXPECT_EQ(a.shift, b.shift);
  EXPECT_EQ(a.inlier_ratio, b.inlier_ratio);
}

TEST(DepthMetricTest, ApplyScaleShiftExamples) {
  DepthMap depth(3, 1);
  depth.Set(0, 0, 3.0);
  depth.Set(1, 0, 2.0);
  const DepthMap same = ApplyScaleShift(depth, {1.0, 0.0, 1.0});
  EXPECT_EQ(same.values, depth.values);
  EXPECT_EQ(same.valid, depth.valid);
  EXPECT_EQ(ApplyScaleShift(depth, {2.0, 0.0, 1.0}).At(0, 0), 6.0);
  const DepthMap shifted = ApplyScaleShift(depth, {1.0, -5.0, 1.0});
  EXPECT_FALSE(shifted.IsValid(1, 0));
  EXPECT_FALSE(shifted.IsValid(2, 0));  // stays invalid
}

}  // namespace
}  // namespace worldguide
