#include "worldguide/eval_metrics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "worldguide/error.h"

namespace worldguide {
namespace {

constexpr double kMinSpan = 1e-9;

void CheckPair(const Trajectory& est, const Trajectory& gt) {
  if (est.frame_count() != gt.frame_count()) {
    Fail(ErrorCode::kLengthMismatch,
         "estimated trajectory has " + std::to_string(est.frame_count()) +
             " frames, ground truth " + std::to_string(gt.frame_count()));
  }
  if (gt.frame_count() < 3) {
    Fail(ErrorCode::kInvalidArgument,
         "trajectory evaluation needs at least 3 frames");
  }
}

std::vector<Vec3> Centers(const Trajectory& t) {
  std::vector<Vec3> out;
  out.reserve(t.poses.size());
  for (const auto& p : t.poses) out.push_back(p.center);
  return out;
}

}  // namespace

AlignmentMode ParseAlignmentMode(std::string_view name) {
  if (name == "sim3") return AlignmentMode::kSim3;
  if (name == "se3") return AlignmentMode::kSE3;
  Fail(ErrorCode::kInvalidArgument,
       "unknown alignment mode '" + std::string(name) + "' (sim3|se3)");
}

std::string_view AlignmentModeName(AlignmentMode mode) {
  return mode == AlignmentMode::kSim3 ? "sim3" : "se3";
}

double RotationAngle(const Mat3& r) {
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0));
}

SimilarityTransform AlignTrajectories(const Trajectory& est,
                                      const Trajectory& gt,
                                      AlignmentMode mode) {
  CheckPair(est, gt);
  const auto src = Centers(est);
  const auto dst = Centers(gt);
  if (src == dst) return SimilarityTransform::Identity();

  const std::vector<double> weights(src.size(), 1.0);
  UmeyamaOptions options;
  options.estimate_scale = mode == AlignmentMode::kSim3;
  options.reject_degenerate = mode == AlignmentMode::kSim3;
  try {
    return WeightedUmeyama(src, dst, weights, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateConfiguration) throw;
    Fail(ErrorCode::kDegenerateTrajectory,
         "camera centers are collinear or coincident: " + e.detail());
  }
}

Trajectory TransformTrajectory(const Trajectory& trajectory,
                               const SimilarityTransform& transform) {
  Trajectory out = trajectory;
  for (auto& pose : out.poses) {
    pose.rotation = transform.rotation * pose.rotation;
    pose.center = transform(pose.center);
  }
  return out;
}

TrajectoryErrors ComputeTrajectoryErrors(const Trajectory& est,
                                         const Trajectory& gt,
                                         const EvalOptions& options) {
  CheckPair(est, gt);
  if (options.gap < 1 || std::size_t(options.gap) >= gt.frame_count()) {
    Fail(ErrorCode::kInvalidArgument, "frame gap must be in [1, frames)");
  }
  const SimilarityTransform align = AlignTrajectories(est, gt, options.mode);
  const Trajectory aligned = TransformTrajectory(est, align);
  const std::size_t n = gt.frame_count();

  double span = 1.0;
  if (options.normalize_by_span) {
    double longest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        longest = std::max(longest,
                           (gt.poses[i].center - gt.poses[j].center).norm());
      }
    }
    if (longest >= kMinSpan) span = longest;
  }

  TrajectoryErrors errors;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sq += (aligned.poses[i].center - gt.poses[i].center).squaredNorm();
  }
  errors.ate = std::sqrt(sq / double(n)) / span;

  const std::size_t gap = std::size_t(options.gap);
  const std::size_t pairs = n - gap;
  double rpe_sq = 0.0, rre_sum = 0.0;
  for (std::size_t i = 0; i + gap < n; ++i) {
    const auto& ea = aligned.poses[i];
    const auto& eb = aligned.poses[i + gap];
    const auto& ga = gt.poses[i];
    const auto& gb = gt.poses[i + gap];
    const Vec3 est_rel = ea.rotation.transpose() * (eb.center - ea.center);
    const Vec3 gt_rel = ga.rotation.transpose() * (gb.center - ga.center);
    rpe_sq += (est_rel - gt_rel).squaredNorm();
    const Mat3 est_rot = ea.rotation.transpose() * eb.rotation;
    const Mat3 gt_rot = ga.rotation.transpose() * gb.rotation;
    rre_sum += RotationAngle(est_rot.transpose() * gt_rot);
  }
  errors.rpe = std::sqrt(rpe_sq / double(pairs)) / span;
  errors.rre_deg = rre_sum / double(pairs) * 180.0 / std::numbers::pi;
  return errors;
}

}  // namespace worldguide
