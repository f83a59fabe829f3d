#include "worldguide/traj_gen.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "worldguide/error.h"

namespace worldguide {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct SegmentEvaluator {
  const CameraPose& start;
  const RotationCenter& rc;

  CameraPose operator()(const RotationSegment& seg, double t) const {
    const Vec3 offset = start.center - rc.center;
    const Mat3 azimuth =
        Eigen::AngleAxisd(t * seg.azimuth_deg * kDegToRad, kWorldUp)
            .toRotationMatrix();
    const Vec3 swung = azimuth * offset;
    const Vec3 axis = swung.cross(kWorldUp);
    if (axis.norm() < 1e-12 * std::max(1.0, swung.norm())) {
      Fail(ErrorCode::kInvalidSpec,
           "orbit start lies on the vertical through the rotation center; "
           "elevation axis is undefined");
    }
    const Mat3 elevation =
        Eigen::AngleAxisd(t * seg.elevation_deg * kDegToRad, axis.normalized())
            .toRotationMatrix();
    const Mat3 orbit = elevation * azimuth;
    // Carrying the orientation with the orbit keeps an upright camera aimed
    // at the center upright and aimed.
    return {orbit * start.rotation, rc.center + orbit * offset};
  }

  CameraPose operator()(const TranslationSegment& seg, double t) const {
    const Vec3 local(seg.dx, seg.dy, seg.dz);
    return {start.rotation,
            start.center + t * rc.radius * (start.rotation * local)};
  }
};

}  // namespace

void TrajectorySpec::Validate() const {
  if (frame_count < 1) {
    Fail(ErrorCode::kInvalidSpec, "frame_count must be at least 1");
  }
  if (segments.empty()) {
    Fail(ErrorCode::kInvalidSpec, "trajectory spec has no segments");
  }
  if (frame_count > 1 && std::size_t(frame_count - 1) < segments.size()) {
    Fail(ErrorCode::kInvalidSpec,
         "need at least one frame step per segment (" +
             std::to_string(segments.size()) + " segments, " +
             std::to_string(frame_count) + " frames)");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (const auto* rot = std::get_if<RotationSegment>(&segments[i])) {
      if (!std::isfinite(rot->azimuth_deg) ||
          !std::isfinite(rot->elevation_deg)) {
        Fail(ErrorCode::kInvalidSpec,
             "segment " + std::to_string(i) + " has non-finite angles");
      }
    } else {
      const auto& tr = std::get<TranslationSegment>(segments[i]);
      for (double c : {tr.dx, tr.dy, tr.dz}) {
        if (!(c >= -1.0 && c <= 1.0)) {
          Fail(ErrorCode::kInvalidSpec,
               "segment " + std::to_string(i) +
                   " translation components must lie in [-1, 1]");
        }
      }
    }
  }
}

RotationCenter ComputeRotationCenter(const DepthMap& depth,
                                     const CameraIntrinsics& intr,
                                     const CameraPose& pose,
                                     const std::vector<std::uint8_t>* fg_mask) {
  intr.Validate();
  if (depth.width != intr.width || depth.height != intr.height) {
    Fail(ErrorCode::kDimensionMismatch,
         "depth map does not match intrinsics size");
  }
  const std::size_t pixels = depth.values.size();
  bool use_mask = false;
  if (fg_mask != nullptr) {
    if (fg_mask->size() != pixels) {
      Fail(ErrorCode::kDimensionMismatch,
           "foreground mask does not match depth size");
    }
    use_mask = std::any_of(fg_mask->begin(), fg_mask->end(),
                           [](std::uint8_t m) { return m != 0; });
  }

  std::vector<double> samples;
  samples.reserve(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    if (depth.valid[i] && (!use_mask || (*fg_mask)[i])) {
      samples.push_back(depth.values[i]);
    }
  }
  if (samples.empty()) {
    Fail(ErrorCode::kNoValidDepth,
         use_mask ? "no valid depth inside the foreground mask"
                  : "depth map has no valid pixels");
  }

  const std::size_t mid = samples.size() / 2;
  std::nth_element(samples.begin(), samples.begin() + mid, samples.end());
  double median = samples[mid];
  if (samples.size() % 2 == 0) {
    const double lower = *std::max_element(samples.begin(),
                                           samples.begin() + mid);
    median = 0.5 * (lower + median);
  }

  RotationCenter rc;
  rc.radius = median;
  rc.center = pose.center + median * pose.OpticalAxis();
  return rc;
}

Mat3 LookAtRotation(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = target - eye;
  const Vec3 right = (-up).cross(forward);
  if (forward.norm() == 0.0 || right.norm() < 1e-12 * forward.norm()) {
    Fail(ErrorCode::kInvalidArgument, "look-at direction is parallel to up");
  }
  Mat3 r;
  r.col(2) = forward.normalized();
  r.col(0) = right.normalized();
  r.col(1) = r.col(2).cross(r.col(0));
  return r;
}

Trajectory BuildTrajectory(const TrajectorySpec& spec, const CameraPose& start,
                           const RotationCenter& rc,
                           const CameraIntrinsics& intr) {
  spec.Validate();
  intr.Validate();
  start.Validate(1e-6);
  if (!(rc.radius > 0.0) || !rc.center.allFinite()) {
    Fail(ErrorCode::kInvalidArgument, "rotation radius must be positive");
  }

  Trajectory traj;
  traj.intrinsics = intr;
  traj.poses.reserve(spec.frame_count);
  traj.poses.push_back(start);

  const std::size_t steps = std::size_t(spec.frame_count - 1);
  const std::size_t segs = spec.segments.size();
  CameraPose segment_start = start;
  for (std::size_t k = 0; k < segs && steps > 0; ++k) {
    const std::size_t count = steps / segs + (k < steps % segs ? 1 : 0);
    const SegmentEvaluator eval{segment_start, rc};
    CameraPose last = segment_start;
    for (std::size_t s = 1; s <= count; ++s) {
      const double t = double(s) / double(count);
      last = std::visit([&](const auto& seg) { return eval(seg, t); },
                        spec.segments[k]);
      traj.poses.push_back(last);
    }
    segment_start = last;
  }
  return traj;
}

Trajectory FollowShot(const Trajectory& trajectory,
                      const std::vector<Vec3>& roots, bool aim_at_root) {
  if (roots.size() != trajectory.frame_count()) {
    std::ostringstream why;
    why << "follow shot needs one root per frame: " << roots.size()
        << " roots for " << trajectory.frame_count() << " frames";
    Fail(ErrorCode::kLengthMismatch, why.str());
  }
  Trajectory out = trajectory;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    out.poses[i].center += roots[i] - roots[0];
    if (aim_at_root) {
      out.poses[i].rotation = LookAtRotation(out.poses[i].center, roots[i]);
    }
  }
  return out;
}

}  // namespace worldguide
