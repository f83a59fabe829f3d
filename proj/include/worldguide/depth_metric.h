#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "worldguide/camera.h"

namespace worldguide {

// A relative (monocular) depth sample paired with a metric reference.
struct DepthCorrespondence {
  double mono = 0.0;
  double metric = 0.0;
  double weight = 1.0;
};

// metric = scale * mono + shift.
struct ScaleShift {
  double scale = 1.0;
  double shift = 0.0;
  double inlier_ratio = 1.0;
};

struct RansacConfig {
  int iterations = 1000;
  // A pair is an inlier when |scale*mono + shift - metric| / metric is below
  // this value.
  double inlier_threshold_rel = 0.05;
  double min_inlier_ratio = 0.3;
  std::uint64_t seed = 0;
};

// Robust affine fit of metric depth against mono depth. Minimal samples are
// two pairs; the winning hypothesis is refit by weighted least squares over
// its inliers. Each iteration draws its sample from a counter-based stream
// keyed on (seed, iteration), so the result does not depend on evaluation
// order.
//
// Throws DegenerateDepth when the mono depths have (near) zero spread or no
// hypothesis with positive scale exists, InsufficientInliers when the final
// inlier ratio is below min_inlier_ratio.
ScaleShift EstimateScaleShift(std::span<const DepthCorrespondence> pairs,
                              const RansacConfig& config = {});

// Weighted least-squares fit over every pair given. Exposed for refits and
// for tests; requires at least two pairs with distinct mono depth.
ScaleShift FitScaleShiftLeastSquares(std::span<const DepthCorrespondence> pairs);

// values' = scale * values + shift; results <= 0 become invalid.
DepthMap ApplyScaleShift(const DepthMap& depth, const ScaleShift& scale_shift);

}  // namespace worldguide
