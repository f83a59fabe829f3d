#include "worldguide/world_align.h"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

#include "worldguide/error.h"
#include "worldguide/parallel.h"

namespace worldguide {
namespace {

constexpr int kFallbackRadiusPx = 3;
constexpr double kRankTolerance = 1e-10;
constexpr double kUnitTolerance = 1e-6;
constexpr double kAntiparallelTolerance = 1e-6;

Vec3 CheckedUnit(const Vec3& v, const char* name) {
  const double norm = v.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitTolerance) {
    std::ostringstream why;
    why << name << " must be a unit vector (norm " << norm << ")";
    Fail(ErrorCode::kInvalidArgument, why.str());
  }
  return v / norm;
}

}  // namespace

SimilarityTransform SimilarityTransform::Inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.scale * (inv.rotation * translation));
  return inv;
}

SimilarityTransform SimilarityTransform::Compose(
    const SimilarityTransform& other) const {
  SimilarityTransform out;
  out.scale = scale * other.scale;
  out.rotation = rotation * other.rotation;
  out.translation = scale * (rotation * other.translation) + translation;
  return out;
}

void CharacterSequence::Validate() const {
  if (!roots.empty() && roots.size() != frames.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "sequence has " + std::to_string(frames.size()) + " frames but " +
             std::to_string(roots.size()) + " roots");
  }
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].size() != frames.front().size()) {
      Fail(ErrorCode::kInvalidArgument,
           "frame " + std::to_string(f) + " has " +
               std::to_string(frames[f].size()) + " vertices, expected " +
               std::to_string(frames.front().size()));
    }
    for (const auto& v : frames[f]) {
      if (!v.allFinite()) {
        Fail(ErrorCode::kInvalidArgument,
             "non-finite vertex in frame " + std::to_string(f));
      }
    }
    if (!roots.empty() && !roots[f].allFinite()) {
      Fail(ErrorCode::kInvalidArgument,
           "non-finite root in frame " + std::to_string(f));
    }
  }
}

std::optional<double> SampleDepth(const DepthMap& depth, double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v)) return std::nullopt;
  if (u < -0.5 || v < -0.5 || u >= depth.width - 0.5 ||
      v >= depth.height - 0.5) {
    return std::nullopt;
  }

  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double ax = u - x0;
  const double ay = v - y0;
  double sum = 0.0, total = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const int x = x0 + dx;
      const int y = y0 + dy;
      const double w = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
      if (w <= 0.0 || x < 0 || y < 0 || x >= depth.width ||
          y >= depth.height || !depth.IsValid(x, y)) {
        continue;
      }
      sum += w * depth.At(x, y);
      total += w;
    }
  }
  if (total > 0.0) return sum / total;

  const int cx = NearestPixel(u);
  const int cy = NearestPixel(v);
  double best = std::numeric_limits<double>::infinity();
  std::optional<double> found;
  for (int y = cy - kFallbackRadiusPx; y <= cy + kFallbackRadiusPx; ++y) {
    for (int x = cx - kFallbackRadiusPx; x <= cx + kFallbackRadiusPx; ++x) {
      if (x < 0 || y < 0 || x >= depth.width || y >= depth.height ||
          !depth.IsValid(x, y)) {
        continue;
      }
      const double d2 = (x - u) * (x - u) + (y - v) * (y - v);
      if (d2 <= kFallbackRadiusPx * kFallbackRadiusPx && d2 < best) {
        best = d2;
        found = depth.At(x, y);
      }
    }
  }
  return found;
}

KeypointSet3D LiftKeypoints(const KeypointSet2D& keypoints,
                            const DepthMap& depth,
                            const CameraIntrinsics& intr,
                            const CameraPose& pose, double conf_min) {
  intr.Validate();
  if (depth.width != intr.width || depth.height != intr.height) {
    Fail(ErrorCode::kDimensionMismatch,
         "depth map does not match intrinsics size");
  }
  KeypointSet3D out;
  out.frame = KeypointFrame::kEnvWorld;
  int retained = 0;
  for (int i = 0; i < kCocoKeypointCount; ++i) {
    out.points[i] = Vec3::Zero();
    out.weights[i] = 0.0;
    const double conf = keypoints.confidence[i];
    if (!(conf >= conf_min)) continue;
    const Vec2& px = keypoints.points[i];
    const auto d = SampleDepth(depth, px.x(), px.y());
    if (!d) continue;
    out.points[i] = pose.ToWorld(*d * intr.Backproject(px.x(), px.y()));
    out.weights[i] = std::min(conf, 1.0);
    ++retained;
  }
  if (retained < 3) {
    Fail(ErrorCode::kFewerThan3Valid,
         "only " + std::to_string(retained) +
             " keypoints passed the confidence and depth checks");
  }
  return out;
}

SimilarityTransform WeightedUmeyama(std::span<const Vec3> src,
                                    std::span<const Vec3> dst,
                                    std::span<const double> weights,
                                    const UmeyamaOptions& options) {
  if (src.size() != dst.size() || src.size() != weights.size()) {
    Fail(ErrorCode::kLengthMismatch, "src, dst and weights differ in length");
  }
  double total = 0.0;
  int positive = 0;
  Vec3 mu_src = Vec3::Zero(), mu_dst = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      Fail(ErrorCode::kInvalidArgument, "weights must be finite and >= 0");
    }
    if (w == 0.0) continue;
    ++positive;
    total += w;
    mu_src += w * src[i];
    mu_dst += w * dst[i];
  }
  if (positive < 3 && options.reject_degenerate) {
    Fail(ErrorCode::kDegenerateConfiguration,
         "need at least 3 positively weighted pairs, got " +
             std::to_string(positive));
  }
  if (positive == 0) {
    Fail(ErrorCode::kDegenerateConfiguration, "all weights are zero");
  }
  mu_src /= total;
  mu_dst /= total;

  Mat3 cov = Mat3::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    const Vec3 ds = src[i] - mu_src;
    cov += w * (dst[i] - mu_dst) * ds.transpose();
    var_src += w * ds.squaredNorm();
  }
  cov /= total;
  var_src /= total;

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (options.reject_degenerate && !(sv(1) > kRankTolerance * sv(0))) {
    Fail(ErrorCode::kDegenerateConfiguration,
         "weighted points are collinear; rotation is not unique");
  }
  Mat3 sign = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) {
    sign(2, 2) = -1.0;
  }

  SimilarityTransform out;
  out.rotation = svd.matrixU() * sign * svd.matrixV().transpose();
  if (options.estimate_scale && var_src > 0.0) {
    out.scale = (sv.asDiagonal() * sign).trace() / var_src;
  }
  if (!(out.scale > 0.0)) {
    Fail(ErrorCode::kDegenerateConfiguration,
         "estimated scale is not positive");
  }
  out.translation = mu_dst - out.scale * (out.rotation * mu_src);
  return out;
}

SimilarityTransform WeightedUmeyama(const KeypointSet3D& src,
                                    const KeypointSet3D& dst) {
  std::array<double, kCocoKeypointCount> w{};
  for (int i = 0; i < kCocoKeypointCount; ++i) {
    w[i] = src.weights[i] * dst.weights[i];
  }
  return WeightedUmeyama(src.points, dst.points, w);
}

double WeightedAlignmentCost(std::span<const Vec3> src,
                             std::span<const Vec3> dst,
                             std::span<const double> weights,
                             const SimilarityTransform& transform) {
  double cost = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    cost += weights[i] * (transform(src[i]) - dst[i]).squaredNorm();
  }
  return cost;
}

SimilarityTransform GravityCorrection(const SimilarityTransform& transform,
                                      const Vec3& g_env, const Vec3& g_hum,
                                      const Vec3& pivot) {
  const Vec3 target = CheckedUnit(g_env, "g_env");
  const Vec3 mapped = (transform.rotation * CheckedUnit(g_hum, "g_hum"))
                          .normalized();
  if ((mapped + target).norm() < kAntiparallelTolerance) {
    Fail(ErrorCode::kAntiparallelGravity,
         "transformed human gravity opposes the environment gravity");
  }
  const Vec3 axis = mapped.cross(target);
  const double sin_angle = axis.norm();
  const double cos_angle = mapped.dot(target);

  SimilarityTransform correction;
  if (sin_angle == 0.0) return correction;
  correction.rotation =
      Eigen::AngleAxisd(std::atan2(sin_angle, cos_angle), axis / sin_angle)
          .toRotationMatrix();
  correction.translation = pivot - correction.rotation * pivot;
  return correction;
}

SimilarityTransform GravityCalibrate(const SimilarityTransform& transform,
                                     const Vec3& g_env, const Vec3& g_hum,
                                     const Vec3& pivot) {
  const SimilarityTransform correction =
      GravityCorrection(transform, g_env, g_hum, pivot);
  if (correction.rotation == Mat3::Identity()) return transform;
  SimilarityTransform out;
  out.scale = transform.scale;
  out.rotation = correction.rotation * transform.rotation;
  out.translation =
      correction.rotation * (transform.translation - pivot) + pivot;
  return out;
}

CharacterSequence ApplyTransform(const CharacterSequence& sequence,
                                 const SimilarityTransform& transform,
                                 int threads) {
  sequence.Validate();
  CharacterSequence out;
  out.frames.resize(sequence.frames.size());
  out.roots.resize(sequence.roots.size());
  ParallelFor(sequence.frames.size(), threads, [&](std::size_t f) {
    auto& dst = out.frames[f];
    dst.reserve(sequence.frames[f].size());
    for (const auto& v : sequence.frames[f]) dst.push_back(transform(v));
    if (!sequence.roots.empty()) out.roots[f] = transform(sequence.roots[f]);
  });
  return out;
}

HumanAlignment AlignHumanToEnv(const KeypointSet2D& keypoints,
                               const DepthMap& depth,
                               const CameraIntrinsics& intr,
                               const CameraPose& pose,
                               const KeypointSet3D& human_keypoints,
                               const Vec3& g_env, const Vec3& g_hum,
                               const CharacterSequence& sequence,
                               double conf_min) {
  sequence.Validate();
  HumanAlignment out;
  out.env_keypoints = LiftKeypoints(keypoints, depth, intr, pose, conf_min);
  out.raw_transform = WeightedUmeyama(human_keypoints, out.env_keypoints);

  Vec3 pivot;
  if (!sequence.roots.empty()) {
    pivot = out.raw_transform(sequence.roots.front());
  } else {
    // No sequence: pivot on the weighted centroid of the aligned keypoints.
    Vec3 sum = Vec3::Zero();
    double total = 0.0;
    for (int i = 0; i < kCocoKeypointCount; ++i) {
      const double w = human_keypoints.weights[i] * out.env_keypoints.weights[i];
      sum += w * out.raw_transform(human_keypoints.points[i]);
      total += w;
    }
    pivot = sum / total;
  }
  out.transform = GravityCalibrate(out.raw_transform, g_env, g_hum, pivot);
  out.sequence = ApplyTransform(sequence, out.transform);
  return out;
}

}  // namespace worldguide
