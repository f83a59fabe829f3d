#pragma once

#include <string_view>

#include "worldguide/camera.h"
#include "worldguide/world_align.h"

namespace worldguide {

enum class AlignmentMode { kSE3, kSim3 };

AlignmentMode ParseAlignmentMode(std::string_view name);
std::string_view AlignmentModeName(AlignmentMode mode);

struct TrajectoryErrors {
  double ate = 0.0;
  double rpe = 0.0;
  double rre_deg = 0.0;
};

struct EvalOptions {
  AlignmentMode mode = AlignmentMode::kSim3;
  // Divide ATE and RPE by the largest pairwise ground-truth center distance.
  bool normalize_by_span = true;
  // Frame gap for relative motions (RPE and RRE).
  int gap = 1;
};

// Aligns estimated camera centers onto ground-truth centers with unit-weight
// Umeyama (scale fixed to 1 in SE3 mode). Throws DegenerateTrajectory when
// sim3 centers are collinear or coincide, LengthMismatch on differing frame
// counts and InvalidArgument below 3 frames.
SimilarityTransform AlignTrajectories(const Trajectory& est,
                                      const Trajectory& gt,
                                      AlignmentMode mode = AlignmentMode::kSim3);

// Poses of `trajectory` moved by a similarity: R' = T.R R, c' = T(c).
Trajectory TransformTrajectory(const Trajectory& trajectory,
                               const SimilarityTransform& transform);

// ATE: RMS center error after alignment. RPE: RMS norm of the difference of
// relative translations R_i^T (c_j - c_i) over pairs (i, i + gap). RRE: mean
// geodesic angle in degrees between relative rotations over the same pairs.
TrajectoryErrors ComputeTrajectoryErrors(const Trajectory& est,
                                         const Trajectory& gt,
                                         const EvalOptions& options = {});

double RotationAngle(const Mat3& rotation);

}  // namespace worldguide
