#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support/test_support.h"
#include "worldguide/error.h"
#include "worldguide/traj_gen.h"

namespace worldguide {
namespace {

using testing::RotationAbout;

CameraIntrinsics Intrinsics() {
  CameraIntrinsics intr;
  intr.fx = intr.fy = 50.0;
  intr.cx = 31.5;
  intr.cy = 23.5;
  intr.width = 64;
  intr.height = 48;
  return intr;
}

RotationCenter CenterAhead(const CameraPose& pose, double radius) {
  return {radius, pose.center + radius * pose.OpticalAxis()};
}

TrajectorySpec Spec(int frames, std::vector<TrajectorySegment> segments) {
  TrajectorySpec spec;
  spec.frame_count = frames;
  spec.segments = std::move(segments);
  return spec;
}

double PoseDistance(const CameraPose& a, const CameraPose& b) {
  return (a.rotation - b.rotation).norm() + (a.center - b.center).norm();
}

TEST(RotationCenterTest, MedianDepth) {
  const CameraIntrinsics intr = [] {
    CameraIntrinsics i;
    i.fx = i.fy = 1;
    i.cx = 2;
    i.cy = 0.5;
    i.width = 5;
    i.height = 1;
    return i;
  }();
  DepthMap depth(5, 1);
  for (int u = 0; u < 5; ++u) depth.Set(u, 0, 5.0 - u);
  const RotationCenter rc =
      ComputeRotationCenter(depth, intr, CameraPose::Identity());
  EXPECT_EQ(rc.radius, 3.0);
  EXPECT_EQ(rc.center, Vec3(0, 0, 3));

  depth.Set(4, 0, 0.0);  // {5, 4, 3, 2}
  EXPECT_EQ(ComputeRotationCenter(depth, intr, CameraPose::Identity()).radius,
            3.5);
}

TEST(RotationCenterTest, ForegroundMask) {
  CameraIntrinsics intr;
  intr.fx = intr.fy = 1;
  intr.cx = 1;
  intr.cy = 0.5;
  intr.width = 3;
  intr.height = 1;
  DepthMap depth(3, 1);
  depth.Set(0, 0, 1.0);
  depth.Set(1, 0, 2.0);
  depth.Set(2, 0, 9.0);
  const std::vector<std::uint8_t> fg{0, 0, 1};
  EXPECT_EQ(ComputeRotationCenter(depth, intr, CameraPose::Identity(), &fg)
                .radius,
            9.0);
  const std::vector<std::uint8_t> empty{0, 0, 0};
  EXPECT_EQ(ComputeRotationCenter(depth, intr, CameraPose::Identity(), &empty)
                .radius,
            2.0);
  depth.Set(2, 0, -1.0);
  try {
    ComputeRotationCenter(depth, intr, CameraPose::Identity(), &fg);
    FAIL() << "expected NoValidDepth";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoValidDepth);
  }
  EXPECT_THROW(
      ComputeRotationCenter(DepthMap(3, 1), intr, CameraPose::Identity()),
      Error);
}

TEST(TrajectoryTest, FullOrbitCloses) {
  const CameraPose start;
  const RotationCenter rc = CenterAhead(start, 2.0);
  const Trajectory t = BuildTrajectory(
      Spec(81, {RotationSegment{360.0, 0.0}}), start, rc, Intrinsics());
  ASSERT_EQ(t.frame_count(), 81u);
  EXPECT_EQ(t.poses[0].rotation, start.rotation);
  EXPECT_EQ(t.poses[0].center, start.center);
  EXPECT_LT(PoseDistance(t.poses.back(), start), 1e-6);
  for (const auto& p : t.poses) {
    EXPECT_NEAR((p.center - rc.center).norm(), 2.0, 1e-12);
    EXPECT_NEAR(p.center.y(), 0.0, 1e-12);
    // Still aimed at the center and upright.
    EXPECT_NEAR(p.OpticalAxis().dot((rc.center - p.center).normalized()), 1.0,
                1e-12);
    EXPECT_NEAR(p.rotation.col(0).dot(kWorldUp), 0.0, 1e-12);
  }
  // Quarter turn: positive azimuth is counterclockwise seen from above.
  const Vec3 quarter = t.poses[20].center - rc.center;
  EXPECT_LT((quarter - Vec3(2, 0, 0)).norm(), 1e-9);
}

TEST(TrajectoryTest, ForwardTranslation) {
  const CameraPose start;
  const Trajectory t =
      BuildTrajectory(Spec(11, {TranslationSegment{0, 0, 1}}), start,
                      CenterAhead(start, 2.0), Intrinsics());
  EXPECT_LT((t.poses.back().center - Vec3(0, 0, 2)).norm(), 1e-15);
  EXPECT_EQ(t.poses.back().rotation, Mat3::Identity());
  EXPECT_LT((t.poses[5].center - Vec3(0, 0, 1)).norm(), 1e-15);
}

TEST(TrajectoryTest, TranslationIsCameraLocal) {
  CameraPose start;
  start.rotation = RotationAbout(Vec3(0, 1, 0), std::numbers::pi / 2);
  start.center = Vec3(1, 2, 3);
  const Trajectory t =
      BuildTrajectory(Spec(3, {TranslationSegment{1, 0, 0}}), start,
                      CenterAhead(start, 0.5), Intrinsics());
  // Camera x maps to world -z after +90 deg about y.
  EXPECT_LT((t.poses.back().center - Vec3(1, 2, 2.5)).norm(), 1e-12);
}

TEST(TrajectoryTest, ElevationRaisesCamera) {
  const CameraPose start;
  const RotationCenter rc = CenterAhead(start, 1.0);
  const Trajectory t = BuildTrajectory(Spec(5, {RotationSegment{0, 30}}),
                                       start, rc, Intrinsics());
  const Vec3 end = t.poses.back().center;
  // World up is -y.
  EXPECT_NEAR(end.y(), -std::sin(std::numbers::pi / 6), 1e-12);
  EXPECT_NEAR((end - rc.center).norm(), 1.0, 1e-12);
  EXPECT_NEAR(t.poses.back().OpticalAxis().dot((rc.center - end).normalized()),
              1.0, 1e-12);
}

TEST(TrajectoryTest, StepsSplitEvenlyAndBoundariesAreShared) {
  const CameraPose start;
  const RotationCenter rc = CenterAhead(start, 1.5);
  // 10 steps over 3 segments: 4, 3, 3.
  const Trajectory t = BuildTrajectory(
      Spec(11, {RotationSegment{40, 0}, TranslationSegment{0.3, 0, 0},
                RotationSegment{0, -12}}),
      start, rc, Intrinsics());
  ASSERT_EQ(t.frame_count(), 11u);
  // Translation steps keep the rotation of the segment start (frame 4).
  for (int i = 5; i <= 7; ++i) {
    EXPECT_EQ(t.poses[i].rotation, t.poses[4].rotation);
  }
  EXPECT_NE(t.poses[3].rotation, t.poses[4].rotation);
  // No jumps: every step is no longer than the largest in-segment step.
  const double orbit_step = (t.poses[1].center - t.poses[0].center).norm();
  const double move_step = 0.3 * 1.5 / 3;
  for (std::size_t i = 1; i < t.frame_count(); ++i) {
    EXPECT_LE((t.poses[i].center - t.poses[i - 1].center).norm(),
              std::max(orbit_step, move_step) * (1 + 1e-9));
  }
  EXPECT_NEAR((t.poses[7].center - t.poses[4].center).norm(), 0.45, 1e-12);
}

TEST(TrajectoryTest, UniformStepsWithinSegment) {
  const CameraPose start;
  const Trajectory t =
      BuildTrajectory(Spec(17, {RotationSegment{90, 0}}), start,
                      CenterAhead(start, 3.0), Intrinsics());
  const double first = (t.poses[1].center - t.poses[0].center).norm();
  for (std::size_t i = 2; i < t.frame_count(); ++i) {
    EXPECT_NEAR((t.poses[i].center - t.poses[i - 1].center).norm(), first,
                1e-12);
  }
}

TEST(TrajectoryTest, PosesAreRigid) {
  CameraPose start;
  start.rotation = RotationAbout(Vec3(1, 0, 0), 0.1);
  start.center = Vec3(0.3, -0.2, 0.1);
  const Trajectory t = BuildTrajectory(
      Spec(41, {RotationSegment{-70, 15}, TranslationSegment{-0.5, 0.2, 1}}),
      start, CenterAhead(start, 2.5), Intrinsics());
  for (const auto& p : t.poses) {
    EXPECT_LT((p.rotation.transpose() * p.rotation - Mat3::Identity()).norm(),
              1e-12);
    EXPECT_NEAR(p.rotation.determinant(), 1.0, 1e-12);
  }
}

TEST(TrajectoryTest, OpposedSegmentsReturnToStart) {
  const CameraPose start;
  const RotationCenter rc = CenterAhead(start, 2.0);
  for (const auto& [a, b] :
       {std::pair<TrajectorySegment, TrajectorySegment>{
            RotationSegment{50, 0}, RotationSegment{-50, 0}},
        {RotationSegment{0, 25}, RotationSegment{0, -25}},
        {TranslationSegment{0.4, -0.2, 0.7},
         TranslationSegment{-0.4, 0.2, -0.7}}}) {
    const Trajectory t =
        BuildTrajectory(Spec(21, {a, b}), start, rc, Intrinsics());
    EXPECT_LT(PoseDistance(t.poses.back(), start), 1e-12);
    // Symmetric about the turning point.
    for (int i = 0; i <= 10; ++i) {
      EXPECT_LT(PoseDistance(t.poses[i], t.poses[20 - i]), 1e-12);
    }
  }
}

TEST(TrajectoryTest, SingleFrameIsStart) {
  CameraPose start;
  start.center = Vec3(1, 1, 1);
  const Trajectory t =
      BuildTrajectory(Spec(1, {RotationSegment{90, 0}}), start,
                      CenterAhead(start, 1.0), Intrinsics());
  ASSERT_EQ(t.frame_count(), 1u);
  EXPECT_EQ(t.poses[0].center, start.center);
}

TEST(TrajectoryTest, InvalidSpecs) {
  const CameraPose start;
  const RotationCenter rc = CenterAhead(start, 1.0);
  auto code = [&](const TrajectorySpec& spec) {
    try {
      BuildTrajectory(spec, start, rc, Intrinsics());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  EXPECT_EQ(code(Spec(10, {})), ErrorCode::kInvalidSpec);
  EXPECT_EQ(code(Spec(0, {RotationSegment{}})), ErrorCode::kInvalidSpec);
  EXPECT_EQ(code(Spec(10, {TranslationSegment{1.5, 0, 0}})),
            ErrorCode::kInvalidSpec);
  EXPECT_EQ(code(Spec(2, {RotationSegment{}, RotationSegment{}})),
            ErrorCode::kInvalidSpec);
  EXPECT_EQ(code(Spec(5, {RotationSegment{NAN, 0}})), ErrorCode::kInvalidSpec);
  // Orbit start directly above the center: no elevation axis.
  CameraPose above;
  above.rotation = RotationAbout(Vec3(1, 0, 0), -std::numbers::pi / 2);
  above.center = Vec3(0, -1, 0);
  EXPECT_THROW(BuildTrajectory(Spec(5, {RotationSegment{0, 10}}), above,
                               {1.0, Vec3::Zero()}, Intrinsics()),
               Error);
}

TEST(FollowShotTest, ShiftsCentersByRootMotion) {
  Trajectory t;
  t.intrinsics = Intrinsics();
  t.poses.resize(3);
  t.poses[1].rotation = RotationAbout(Vec3(0, 1, 0), 0.3);
  const std::vector<Vec3> roots{{5, 5, 5}, {6, 5, 5}, {7, 4, 5}};
  const Trajectory out = FollowShot(t, roots);
  EXPECT_EQ(out.poses[0].center, Vec3(0, 0, 0));
  EXPECT_EQ(out.poses[1].center, Vec3(1, 0, 0));
  EXPECT_EQ(out.poses[2].center, Vec3(2, -1, 0));
  EXPECT_EQ(out.poses[1].rotation, t.poses[1].rotation);

  const std::vector<Vec3> still(3, Vec3(1, 2, 3));
  const Trajectory same = FollowShot(t, still);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(same.poses[i].center, t.poses[i].center);
  }
  try {
    FollowShot(t, std::vector<Vec3>(2));
    FAIL() << "expected LengthMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(FollowShotTest, AimAtRootFacesEachRoot) {
  Trajectory t;
  t.intrinsics = Intrinsics();
  t.poses.resize(3);
  const std::vector<Vec3> roots{{0, 0, 4}, {1, 0, 4}, {3, 0.5, 2}};
  const Trajectory out = FollowShot(t, roots, true);
  for (std::size_t i = 0; i < 3; ++i) {
    const Vec3 to_root = (roots[i] - out.poses[i].center).normalized();
    EXPECT_LT((out.poses[i].OpticalAxis() - to_root).norm(), 1e-12);
    EXPECT_LT((out.poses[i].rotation.transpose() * out.poses[i].rotation -
               Mat3::Identity()).norm(), 1e-12);
    // Level horizon: image x stays perpendicular to world up.
    EXPECT_LT(std::abs(out.poses[i].rotation.col(0).dot(kWorldUp)), 1e-12);
  }
  EXPECT_EQ(out.poses[1].center, Vec3(1, 0, 0));
}

TEST(LookAtTest, BuildsUprightFrame) {
  const Mat3 r = LookAtRotation(Vec3(0, 0, 0), Vec3(0, 0, 5));
  EXPECT_LT((r - Mat3::Identity()).norm(), 1e-15);
  const Mat3 side = LookAtRotation(Vec3(0, 0, 0), Vec3(3, 0, 0));
  EXPECT_LT((side.col(2) - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((side.col(1) - Vec3(0, 1, 0)).norm(), 1e-15);
  EXPECT_THROW(LookAtRotation(Vec3::Zero(), Vec3(0, -1, 0)), Error);
}

}  // namespace
}  // namespace worldguide
