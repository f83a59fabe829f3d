#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "worldguide/camera.h"

namespace worldguide {

inline constexpr int kCocoKeypointCount = 17;
inline constexpr double kDefaultKeypointConfidence = 0.7;

// COCO-17 detections in the reference image.
struct KeypointSet2D {
  std::array<Vec2, kCocoKeypointCount> points{};
  std::array<double, kCocoKeypointCount> confidence{};
};

enum class KeypointFrame { kHumanWorld, kEnvWorld };

struct KeypointSet3D {
  std::array<Vec3, kCocoKeypointCount> points{};
  std::array<double, kCocoKeypointCount> weights{};
  KeypointFrame frame = KeypointFrame::kHumanWorld;
};

// x -> scale * rotation * x + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static SimilarityTransform Identity() { return {}; }

  Vec3 operator()(const Vec3& x) const {
    return scale * (rotation * x) + translation;
  }
  SimilarityTransform Inverse() const;
  // this∘other.
  SimilarityTransform Compose(const SimilarityTransform& other) const;
};

// Per-frame vertex arrays plus the character root track.
struct CharacterSequence {
  std::vector<std::vector<Vec3>> frames;
  std::vector<Vec3> roots;

  std::size_t frame_count() const { return frames.size(); }
  // Throws InvalidArgument on varying vertex counts, non-finite coordinates
  // or a non-empty root track whose length differs from the frame count.
  void Validate() const;
};

// Unprojects each confident keypoint through the reference depth. Depth is
// sampled bilinearly over the valid pixels among the four neighbors, falling
// back to the nearest valid pixel within 3 px. Keypoints below conf_min,
// outside the image or without depth get weight 0; the rest keep their
// confidence as weight. Throws FewerThan3Valid when fewer than 3 survive.
KeypointSet3D LiftKeypoints(const KeypointSet2D& keypoints,
                            const DepthMap& depth,
                            const CameraIntrinsics& intr,
                            const CameraPose& pose,
                            double conf_min = kDefaultKeypointConfidence);

// Depth at a continuous pixel coordinate using the lifting rule above.
std::optional<double> SampleDepth(const DepthMap& depth, double u, double v);

struct UmeyamaOptions {
  bool estimate_scale = true;
  // When false, rank-deficient (collinear) configurations return one of the
  // equally good minimizers instead of throwing.
  bool reject_degenerate = true;
};

// Closed-form minimizer of sum_i w_i |s R src_i + t - dst_i|^2 (weighted
// centroids, weighted cross-covariance, SVD with reflection correction).
// Throws DegenerateConfiguration with fewer than 3 positively weighted pairs
// or when those points are collinear.
SimilarityTransform WeightedUmeyama(std::span<const Vec3> src,
                                    std::span<const Vec3> dst,
                                    std::span<const double> weights,
                                    const UmeyamaOptions& options = {});

// Keypoint overload; pair weights are src.weights[i] * dst.weights[i].
SimilarityTransform WeightedUmeyama(const KeypointSet3D& src,
                                    const KeypointSet3D& dst);

double WeightedAlignmentCost(std::span<const Vec3> src,
                             std::span<const Vec3> dst,
                             std::span<const double> weights,
                             const SimilarityTransform& transform);

// Rotation about `pivot` by the smallest angle taking transform.rotation *
// g_hum onto g_env; returned as a similarity with unit scale.
SimilarityTransform GravityCorrection(const SimilarityTransform& transform,
                                      const Vec3& g_env, const Vec3& g_hum,
                                      const Vec3& pivot);

// correction ∘ transform. Scale is preserved and the pivot is a fixed point
// of the correction. Throws AntiparallelGravity when the directions oppose.
SimilarityTransform GravityCalibrate(const SimilarityTransform& transform,
                                     const Vec3& g_env, const Vec3& g_hum,
                                     const Vec3& pivot);

CharacterSequence ApplyTransform(const CharacterSequence& sequence,
                                 const SimilarityTransform& transform,
                                 int threads = 0);

inline const Vec3 kDefaultHumanGravity{0.0, -1.0, 0.0};

struct HumanAlignment {
  SimilarityTransform transform;  // gravity-calibrated
  SimilarityTransform raw_transform;
  KeypointSet3D env_keypoints;
  CharacterSequence sequence;
};

// LiftKeypoints -> WeightedUmeyama -> GravityCalibrate (pivot: aligned
// first-frame root) -> ApplyTransform.
HumanAlignment AlignHumanToEnv(const KeypointSet2D& keypoints,
                               const DepthMap& depth,
                               const CameraIntrinsics& intr,
                               const CameraPose& pose,
                               const KeypointSet3D& human_keypoints,
                               const Vec3& g_env, const Vec3& g_hum,
                               const CharacterSequence& sequence,
                               double conf_min = kDefaultKeypointConfidence);

}  // namespace worldguide
