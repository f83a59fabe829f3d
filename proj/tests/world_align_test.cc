#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "support/test_support.h"
#include "worldguide/error.h"
#include "worldguide/io.h"
#include "worldguide/world_align.h"

namespace worldguide {
namespace {

using testing::AngleBetween;
using testing::Gaussian;
using testing::IterativeSimilarityFit;
using testing::RandomRotation;
using testing::RandomUnitVector;
using testing::RotationAbout;
using testing::Uniform;

constexpr double kPi = std::numbers::pi;

CameraIntrinsics UnitIntrinsics(int w, int h) {
  CameraIntrinsics intr;
  intr.fx = intr.fy = 10.0;
  intr.cx = (w - 1) / 2.0;
  intr.cy = (h - 1) / 2.0;
  intr.width = w;
  intr.height = h;
  return intr;
}

DepthMap ConstantDepth(int w, int h, double d) {
  DepthMap depth(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) depth.Set(u, v, d);
  }
  return depth;
}

std::optional<ErrorCode> CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

TEST(LiftKeypointsTest, ConfidenceGateAndDepth) {
  const auto intr = UnitIntrinsics(11, 11);
  DepthMap depth = ConstantDepth(11, 11, 2.0);
  depth.Set(0, 0, 0.0);
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      if (std::max(x, y) <= 4) depth.Set(x, y, 0.0);
    }
  }
  KeypointSet2D kp;
  for (int i = 0; i < kCocoKeypointCount; ++i) {
    kp.points[i] = Vec2(5, 5);
    kp.confidence[i] = 0.9;
  }
  kp.confidence[1] = 0.69;
  kp.confidence[2] = 0.7;
  kp.points[3] = Vec2(0, 0);      // no valid depth within 3 px
  kp.points[4] = Vec2(20, 5);     // outside the image
  const KeypointSet3D out =
      LiftKeypoints(kp, depth, intr, CameraPose::Identity());
  EXPECT_EQ(out.frame, KeypointFrame::kEnvWorld);
  EXPECT_EQ(out.weights[0], 0.9);
  EXPECT_EQ(out.points[0], Vec3(0, 0, 2));
  EXPECT_EQ(out.weights[1], 0.0);
  EXPECT_EQ(out.weights[2], 0.7);
  EXPECT_EQ(out.weights[3], 0.0);
  EXPECT_EQ(out.weights[4], 0.0);
}

TEST(LiftKeypointsTest, FewerThanThreeValid) {
  const auto intr = UnitIntrinsics(5, 5);
  KeypointSet2D kp;
  for (int i = 0; i < kCocoKeypointCount; ++i) kp.points[i] = Vec2(2, 2);
  kp.confidence[0] = kp.confidence[1] = 0.9;
  EXPECT_EQ(CodeOf([&] {
              LiftKeypoints(kp, ConstantDepth(5, 5, 1.0), intr,
                            CameraPose::Identity());
            }),
            ErrorCode::kFewerThan3Valid);
}

TEST(LiftKeypointsTest, AppliesReferencePose) {
  const auto intr = UnitIntrinsics(5, 5);
  CameraPose pose;
  pose.rotation = RotationAbout(Vec3(0, 1, 0), kPi / 2);
  pose.center = Vec3(1, 2, 3);
  KeypointSet2D kp;
  for (int i = 0; i < kCocoKeypointCount; ++i) {
    kp.points[i] = Vec2(2, 2);
    kp.confidence[i] = 1.0;
  }
  const KeypointSet3D out = LiftKeypoints(kp, ConstantDepth(5, 5, 4.0), intr, pose);
  // Optical axis rotated +90 deg about y points along +x.
  EXPECT_LT((out.points[0] - Vec3(5, 2, 3)).norm(), 1e-12);
}

TEST(SampleDepthTest, BilinearOverValidNeighbors) {
  DepthMap depth(2, 2);
  depth.Set(0, 0, 1.0);
  depth.Set(1, 0, 2.0);
  depth.Set(0, 1, 3.0);
  depth.Set(1, 1, 4.0);
  EXPECT_NEAR(*SampleDepth(depth, 0.5, 0.5), 2.5, 1e-15);
  EXPECT_NEAR(*SampleDepth(depth, 0.25, 0.0), 1.25, 1e-15);
  EXPECT_EQ(*SampleDepth(depth, 1.0, 1.0), 4.0);
  // An invalid neighbor is dropped and the rest renormalized.
  depth.Set(1, 1, 0.0);
  EXPECT_NEAR(*SampleDepth(depth, 0.5, 0.5), 2.0, 1e-15);
}

TEST(SampleDepthTest, NearestValidFallbackWithinThreePixels) {
  DepthMap depth(10, 10);
  depth.Set(7, 2, 5.0);
  depth.Set(2, 6, 9.0);
  EXPECT_EQ(*SampleDepth(depth, 4.0, 2.0), 5.0);  // 3 px away
  EXPECT_FALSE(SampleDepth(depth, 3.0, 2.0).has_value());  // 4 px away
  EXPECT_EQ(*SampleDepth(depth, 2.0, 4.0), 9.0);
  EXPECT_FALSE(SampleDepth(depth, -1.0, 2.0).has_value());
}

TEST(UmeyamaTest, ExactRecovery) {
  const std::vector<Vec3> src{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  SimilarityTransform truth;
  truth.scale = 2.0;
  truth.rotation = RotationAbout(Vec3(0, 0, 1), kPi / 2);
  truth.translation = Vec3(1, 0, 0);
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.push_back(truth(p));
  EXPECT_LT((dst[1] - Vec3(1, 2, 0)).norm(), 1e-15);
  const std::vector<double> w(4, 1.0);
  const SimilarityTransform t = WeightedUmeyama(src, dst, w);
  EXPECT_NEAR(t.scale, 2.0, 1e-12);
  EXPECT_LT((t.rotation - truth.rotation).norm(), 1e-12);
  EXPECT_LT((t.translation - truth.translation).norm(), 1e-12);
}

TEST(UmeyamaTest, IdentityWhenSourceEqualsTarget) {
  SplitMix64 rng(1);
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng)));
  const std::vector<double> w(10, 1.0);
  const SimilarityTransform t = WeightedUmeyama(pts, pts, w);
  EXPECT_NEAR(t.scale, 1.0, 1e-12);
  EXPECT_LT((t.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(t.translation.norm(), 1e-12);
}

TEST(UmeyamaTest, ExactOnRandomSimilarities) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    SimilarityTransform truth;
    truth.scale = std::exp(Uniform(rng, std::log(0.1), std::log(10.0)));
    truth.rotation = RandomRotation(rng);
    truth.translation = 5 * RandomUnitVector(rng);
    std::vector<Vec3> src, dst;
    std::vector<double> w;
    for (int i = 0; i < kCocoKeypointCount; ++i) {
      src.push_back(Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng)));
      dst.push_back(truth(src.back()));
      w.push_back(Uniform(rng, 0.1, 1.0));
    }
    const SimilarityTransform t = WeightedUmeyama(src, dst, w);
    EXPECT_NEAR(t.scale / truth.scale, 1.0, 1e-9);
    EXPECT_LT((t.rotation - truth.rotation).norm(), 1e-9);
    EXPECT_LT((t.translation - truth.translation).norm(), 1e-9);
  }
}

TEST(UmeyamaTest, MatchesIterativeMinimizerUnderNoise) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    SimilarityTransform truth;
    truth.scale = Uniform(rng, 0.5, 3.0);
    truth.rotation = RandomRotation(rng);
    truth.translation = RandomUnitVector(rng);
    std::vector<Vec3> src, dst;
    std::vector<double> w;
    for (int i = 0; i < 12; ++i) {
      src.push_back(Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng)));
      dst.push_back(truth(src.back()) +
                    0.1 * Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng)));
      w.push_back(Uniform(rng, 0.0, 1.0));
    }
    const SimilarityTransform closed = WeightedUmeyama(src, dst, w);
    const SimilarityTransform iter = IterativeSimilarityFit(src, dst, w, trial);
    const double c0 = WeightedAlignmentCost(src, dst, w, closed);
    const double c1 = WeightedAlignmentCost(src, dst, w, iter);
    EXPECT_LE(c0, c1 * (1 + 1e-9) + 1e-12);
    EXPECT_NEAR(closed.scale, iter.scale, 1e-6);
    EXPECT_LT((closed.rotation - iter.rotation).norm(), 1e-6);
    EXPECT_LT((closed.translation - iter.translation).norm(), 1e-6);
  }
}

TEST(UmeyamaTest, ZeroWeightPointsAreIgnored) {
  SplitMix64 rng(4);
  std::vector<Vec3> src, dst;
  std::vector<double> w;
  for (int i = 0; i < 8; ++i) {
    src.push_back(Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng)));
    dst.push_back(src.back() + 0.05 * Vec3(Gaussian(rng), Gaussian(rng), 0));
    w.push_back(1.0);
  }
  const SimilarityTransform base = WeightedUmeyama(src, dst, w);
  src.push_back(Vec3(100, -50, 3));
  dst.push_back(Vec3(-1e4, 7, 0));
  w.push_back(0.0);
  const SimilarityTransform with_outlier = WeightedUmeyama(src, dst, w);
  EXPECT_EQ(base.scale, with_outlier.scale);
  EXPECT_EQ(base.rotation, with_outlier.rotation);
  EXPECT_EQ(base.translation, with_outlier.translation);
}

TEST(UmeyamaTest, InvariantToWeightScaling) {
  SplitMix64 rng(5);
  std::vector<Vec3> src, dst;
  std::vector<double> w, w10;
  for (int i = 0; i < 10; ++i) {
    src.push_back(Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng)));
    dst.push_back(Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng)));
    w.push_back(Uniform(rng, 0.1, 1));
    w10.push_back(7.5 * w.back());
  }
  const SimilarityTransform a = WeightedUmeyama(src, dst, w);
  const SimilarityTransform b = WeightedUmeyama(src, dst, w10);
  EXPECT_NEAR(a.scale, b.scale, 1e-12);
  EXPECT_LT((a.rotation - b.rotation).norm(), 1e-12);
  EXPECT_LT((a.translation - b.translation).norm(), 1e-12);
}

TEST(UmeyamaTest, DegenerateConfigurations) {
  const std::vector<Vec3> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
  const std::vector<double> w(4, 1.0);
  EXPECT_EQ(CodeOf([&] { WeightedUmeyama(line, line, w); }),
            ErrorCode::kDegenerateConfiguration);
  const std::vector<Vec3> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}};
  const std::vector<double> two{1.0, 1.0, 0.0, 0.0};
  EXPECT_EQ(CodeOf([&] { WeightedUmeyama(tri, tri, two); }),
            ErrorCode::kDegenerateConfiguration);
  const std::vector<double> bad{1.0, -1.0, 1.0, 1.0};
  EXPECT_THROW(WeightedUmeyama(tri, tri, bad), Error);
  EXPECT_EQ(CodeOf([&] {
              WeightedUmeyama(tri, std::span(tri).first(3), w);
            }),
            ErrorCode::kLengthMismatch);
}

TEST(UmeyamaTest, KeypointOverloadMultipliesWeights) {
  SplitMix64 rng(6);
  KeypointSet3D src, dst;
  std::vector<double> product;
  for (int i = 0; i < kCocoKeypointCount; ++i) {
    src.points[i] = Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng));
    dst.points[i] = Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng));
    src.weights[i] = Uniform(rng, 0, 1);
    dst.weights[i] = i % 5 == 0 ? 0.0 : Uniform(rng, 0, 1);
    product.push_back(src.weights[i] * dst.weights[i]);
  }
  const SimilarityTransform a = WeightedUmeyama(src, dst);
  const SimilarityTransform b =
      WeightedUmeyama(src.points, dst.points, product);
  EXPECT_EQ(a.scale, b.scale);
  EXPECT_EQ(a.rotation, b.rotation);
}

TEST(GravityTest, AlignedInputIsUnchanged) {
  SimilarityTransform t;
  t.scale = 1.7;
  t.translation = Vec3(1, 2, 3);
  const SimilarityTransform out =
      GravityCalibrate(t, Vec3(0, 1, 0), Vec3(0, 1, 0), Vec3(4, 5, 6));
  EXPECT_EQ(out.scale, t.scale);
  EXPECT_EQ(out.rotation, t.rotation);
  EXPECT_EQ(out.translation, t.translation);
}

TEST(GravityTest, PerpendicularCorrection) {
  const Vec3 pivot(1, 0, 0);
  const SimilarityTransform out = GravityCalibrate(
      SimilarityTransform::Identity(), Vec3(0, 0, 1), Vec3(0, 1, 0), pivot);
  EXPECT_LT((out.rotation * Vec3(0, 1, 0) - Vec3(0, 0, 1)).norm(), 1e-15);
  // The smallest rotation is 90 deg about x.
  EXPECT_LT((out.rotation - RotationAbout(Vec3(1, 0, 0), kPi / 2)).norm(),
            1e-15);
  EXPECT_LT((out(pivot) - pivot).norm(), 1e-15);
  EXPECT_EQ(out.scale, 1.0);
}

TEST(GravityTest, RandomSmallTilts) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 g_env = RandomUnitVector(rng);
    const Vec3 g_hum = RandomUnitVector(rng);
    SimilarityTransform t;
    t.scale = Uniform(rng, 0.5, 2.0);
    // Rotation taking g_hum to within 30 deg of g_env.
    const Mat3 exact = Eigen::Quaterniond::FromTwoVectors(g_hum, g_env)
                           .toRotationMatrix();
    t.rotation = RotationAbout(RandomUnitVector(rng),
                               Uniform(rng, 0, kPi / 6)) * exact;
    t.translation = RandomUnitVector(rng);
    const Vec3 pivot = t(Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng)));
    const SimilarityTransform out = GravityCalibrate(t, g_env, g_hum, pivot);
    EXPECT_LT(AngleBetween(out.rotation * g_hum, g_env), 1e-9);
    EXPECT_EQ(out.scale, t.scale);
    const SimilarityTransform c = GravityCorrection(t, g_env, g_hum, pivot);
    EXPECT_LT((c(pivot) - pivot).norm(), 1e-12);
    // Minimal: the correction angle equals the initial misalignment.
    const double angle = Eigen::AngleAxisd(c.rotation).angle();
    EXPECT_NEAR(angle, AngleBetween(t.rotation * g_hum, g_env), 1e-9);
  }
}

TEST(GravityTest, AntiparallelIsRejected) {
  EXPECT_EQ(CodeOf([] {
              GravityCalibrate(SimilarityTransform::Identity(), Vec3(0, 1, 0),
                               Vec3(0, -1, 0), Vec3::Zero());
            }),
            ErrorCode::kAntiparallelGravity);
  EXPECT_THROW(GravityCalibrate(SimilarityTransform::Identity(), Vec3::Zero(),
                                Vec3(0, 1, 0), Vec3::Zero()),
               Error);
}

TEST(ApplyTransformTest, Examples) {
  CharacterSequence seq;
  seq.frames = {{Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Vec3(0, 0, 1), Vec3(1, 1, 1)}};
  seq.roots = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  const CharacterSequence same = ApplyTransform(seq, {});
  EXPECT_EQ(same.frames, seq.frames);
  EXPECT_EQ(same.roots, seq.roots);
  SimilarityTransform t;
  t.scale = 2.0;
  t.translation = Vec3(0, 0, 1);
  const CharacterSequence out = ApplyTransform(seq, t, 2);
  EXPECT_EQ(out.frames[1][1], Vec3(2, 2, 3));
  EXPECT_EQ(out.roots[1], Vec3(2, 0, 1));
  CharacterSequence ragged = seq;
  ragged.frames[1].pop_back();
  EXPECT_THROW(ApplyTransform(ragged, t), Error);
  CharacterSequence rootless = seq;
  rootless.roots.clear();
  const CharacterSequence moved = ApplyTransform(rootless, t);
  EXPECT_TRUE(moved.roots.empty());
  EXPECT_EQ(moved.frames[1][1], Vec3(2, 2, 3));
  CharacterSequence short_roots = seq;
  short_roots.roots.pop_back();
  EXPECT_THROW(ApplyTransform(short_roots, t), Error);
}

TEST(AlignHumanTest, RecoversSyntheticPlacement) {
  testing::TempDir tmp("align");
  testing::SyntheticSceneOptions opts;
  opts.with_correspondences = false;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    opts.seed = seed;
    const auto scene = testing::BuildSyntheticScene(tmp.path() / std::to_string(seed), opts);
    const auto& cfg = scene.config;
    const Trajectory cams = io::ReadCameraJson(cfg.cameras);
    const io::MeshSequence body = io::ReadMeshSequence(*cfg.human_sequence);
    const HumanAlignment a = AlignHumanToEnv(
        io::ReadKeypoints2D(*cfg.keypoints_2d), io::ReadDepth(cfg.depth),
        cams.intrinsics, cams.poses[0], io::ReadKeypoints3D(*cfg.human_keypoints),
        cfg.g_env, cfg.g_hum, body.sequence);
    EXPECT_EQ(a.env_keypoints.weights[3], 0.0);
    EXPECT_NEAR(a.transform.scale / scene.human_to_env.scale, 1.0, 1e-6);
    EXPECT_LT((a.transform.rotation - scene.human_to_env.rotation).norm(), 1e-6);
    for (std::size_t f = 0; f < body.sequence.frames.size(); ++f) {
      for (std::size_t i = 0; i < body.sequence.frames[f].size(); ++i) {
        const Vec3 expect = scene.human_to_env(body.sequence.frames[f][i]);
        EXPECT_LT((a.sequence.frames[f][i] - expect).norm(), 1e-6);
      }
    }
  }
}

TEST(AlignHumanTest, StaticSequenceStaysStatic) {
  testing::TempDir tmp("static");
  testing::SyntheticSceneOptions opts;
  opts.with_correspondences = false;
  const auto scene = testing::BuildSyntheticScene(tmp.path(), opts);
  const auto& cfg = scene.config;
  const Trajectory cams = io::ReadCameraJson(cfg.cameras);
  io::MeshSequence body = io::ReadMeshSequence(*cfg.human_sequence);
  for (std::size_t f = 1; f < body.sequence.frames.size(); ++f) {
    body.sequence.frames[f] = body.sequence.frames[0];
    body.sequence.roots[f] = body.sequence.roots[0];
  }
  const HumanAlignment a = AlignHumanToEnv(
      io::ReadKeypoints2D(*cfg.keypoints_2d), io::ReadDepth(cfg.depth),
      cams.intrinsics, cams.poses[0], io::ReadKeypoints3D(*cfg.human_keypoints),
      cfg.g_env, cfg.g_hum, body.sequence);
  for (std::size_t f = 1; f < a.sequence.frames.size(); ++f) {
    EXPECT_EQ(a.sequence.frames[f], a.sequence.frames[0]);
    EXPECT_EQ(a.sequence.roots[f], a.sequence.roots[0]);
  }
}

TEST(AlignHumanTest, GravityCalibrationRemovesTilt) {
  // Tilt the human space so the raw fit carries gravity off (0, 1, 0); the
  // calibrated transform must bring the root track back to the ground plane
  // direction while keeping the first root fixed.
  testing::TempDir tmp("tilt");
  testing::SyntheticSceneOptions opts;
  opts.with_correspondences = false;
  const auto scene = testing::BuildSyntheticScene(tmp.path(), opts);
  const auto& cfg = scene.config;
  const Trajectory cams = io::ReadCameraJson(cfg.cameras);
  const io::MeshSequence body = io::ReadMeshSequence(*cfg.human_sequence);
  const Vec3 tilted_g_hum =
      RotationAbout(Vec3(1, 0, 0), 0.2) * cfg.g_hum;
  const HumanAlignment a = AlignHumanToEnv(
      io::ReadKeypoints2D(*cfg.keypoints_2d), io::ReadDepth(cfg.depth),
      cams.intrinsics, cams.poses[0], io::ReadKeypoints3D(*cfg.human_keypoints),
      cfg.g_env, tilted_g_hum, body.sequence);
  EXPECT_LT(AngleBetween(a.transform.rotation * tilted_g_hum, cfg.g_env), 1e-9);
  EXPECT_LT((a.sequence.roots[0] - a.raw_transform(body.sequence.roots[0])).norm(),
            1e-12);
}

}  // namespace
}  // namespace worldguide
