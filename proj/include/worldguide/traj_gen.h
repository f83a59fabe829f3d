#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "worldguide/camera.h"

namespace worldguide {

// Orbit about the rotation center. Positive azimuth turns counterclockwise
// seen from above (world up is -y); positive elevation raises the camera.
struct RotationSegment {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

// Camera-local displacement in units of the rotation radius; each component
// in [-1, 1].
struct TranslationSegment {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
};

using TrajectorySegment = std::variant<RotationSegment, TranslationSegment>;

struct TrajectorySpec {
  int frame_count = kDefaultFrameCount;
  std::vector<TrajectorySegment> segments;
  // Path of a roots JSON for follow shooting; resolved by the caller.
  std::optional<std::string> follow;
  // Also re-aim each frame at its root.
  bool follow_aim = false;

  // Throws InvalidSpec.
  void Validate() const;
};

struct RotationCenter {
  double radius = 1.0;
  Vec3 center = Vec3::Zero();
};

inline const Vec3 kWorldUp{0.0, -1.0, 0.0};

// Radius is the median valid depth inside fg_mask (the whole image when the
// mask is absent or empty); the center sits on the optical axis at that
// distance. Throws NoValidDepth.
RotationCenter ComputeRotationCenter(
    const DepthMap& depth, const CameraIntrinsics& intr,
    const CameraPose& pose,
    const std::vector<std::uint8_t>* fg_mask = nullptr);

// Camera-to-world rotation looking from `eye` at `target` with image y
// pointing along -up.
Mat3 LookAtRotation(const Vec3& eye, const Vec3& target,
                    const Vec3& up = kWorldUp);

// The N - 1 frame steps are split evenly across segments (earlier segments
// take the remainder) and each segment is interpolated linearly in its
// parameters, so consecutive segments share their boundary pose.
Trajectory BuildTrajectory(const TrajectorySpec& spec, const CameraPose& start,
                           const RotationCenter& rc,
                           const CameraIntrinsics& intr);

// pose_i.center += roots[i] - roots[0]; rotations untouched unless aim_at_root,
// which replaces each rotation with a look-at toward roots[i].
Trajectory FollowShot(const Trajectory& trajectory,
                      const std::vector<Vec3>& roots, bool aim_at_root = false);

}  // namespace worldguide
