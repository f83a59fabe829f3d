#include "worldguide/camera.h"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

#include "worldguide/error.h"

namespace worldguide {

void CameraIntrinsics::Validate() const {
  std::ostringstream why;
  if (width < 1 || height < 1) {
    why << "image size " << width << "x" << height << " must be at least 1x1";
  } else if (!(fx > 0) || !(fy > 0) || !std::isfinite(fx) ||
             !std::isfinite(fy)) {
    why << "focal lengths must be positive, got fx=" << fx << " fy=" << fy;
  } else if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height)) {
    why << "principal point (" << cx << ", " << cy
        << ") must lie strictly inside the image";
  } else {
    return;
  }
  Fail(ErrorCode::kInvalidArgument, why.str());
}

Mat3 CameraIntrinsics::K() const {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

void CameraPose::Validate(double tolerance) const {
  if (!rotation.allFinite() || !center.allFinite()) {
    Fail(ErrorCode::kInvalidArgument, "pose contains non-finite values");
  }
  const double ortho =
      (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = rotation.determinant();
  if (ortho > tolerance || std::abs(det - 1.0) > tolerance) {
    std::ostringstream why;
    why << "rotation is not proper orthonormal (|RtR - I|max=" << ortho
        << ", det=" << det << ")";
    Fail(ErrorCode::kInvalidArgument, why.str());
  }
}

CameraPose Compose(const CameraPose& a, const CameraPose& b) {
  return {a.rotation * b.rotation, a.rotation * b.center + a.center};
}

CameraPose Invert(const CameraPose& pose) {
  const Mat3 rt = pose.rotation.transpose();
  return {rt, -(rt * pose.center)};
}

Mat3 ProjectToRotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) {
    d(2, 2) = -1;
  }
  return svd.matrixU() * d * svd.matrixV().transpose();
}

void DepthMap::Set(int u, int v, double depth) {
  const std::size_t i = Index(u, v);
  const bool ok = std::isfinite(depth) && depth > 0;
  values[i] = ok ? depth : 0.0;
  valid[i] = ok ? 1 : 0;
}

std::size_t DepthMap::ValidCount() const {
  std::size_t n = 0;
  for (auto v : valid) n += v != 0;
  return n;
}

void PointCloud::Validate() const {
  if (positions.size() != colors.size()) {
    Fail(ErrorCode::kInvalidArgument, "positions and colors differ in length");
  }
  if (!source_pixel.empty() && source_pixel.size() != positions.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "source_pixel must be empty or match positions");
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!positions[i].allFinite()) {
      Fail(ErrorCode::kInvalidArgument,
           "non-finite position at index " + std::to_string(i));
    }
    if ((colors[i].array() < 0.f).any() || (colors[i].array() > 1.f).any() ||
        !colors[i].allFinite()) {
      Fail(ErrorCode::kInvalidArgument,
           "color outside [0,1] at index " + std::to_string(i));
    }
  }
}

PointCloud Unproject(const DepthMap& depth, const CameraIntrinsics& intr,
                     const CameraPose& pose, const Image& colors) {
  intr.Validate();
  if (depth.width != intr.width || depth.height != intr.height ||
      colors.width != intr.width || colors.height != intr.height) {
    std::ostringstream why;
    why << "intrinsics " << intr.width << "x" << intr.height << ", depth "
        << depth.width << "x" << depth.height << ", colors " << colors.width
        << "x" << colors.height;
    Fail(ErrorCode::kDimensionMismatch, why.str());
  }

  PointCloud cloud;
  const std::size_t n = depth.ValidCount();
  cloud.positions.reserve(n);
  cloud.colors.reserve(n);
  cloud.source_pixel.reserve(n);
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (!depth.IsValid(u, v)) continue;
      const Vec3 camera_point = depth.At(u, v) * intr.Backproject(u, v);
      cloud.positions.push_back(pose.ToWorld(camera_point));
      cloud.colors.push_back(colors.At(u, v));
      cloud.source_pixel.push_back({u, v});
    }
  }
  return cloud;
}

Projection ProjectPoint(const Vec3& point, const CameraIntrinsics& intr,
                        const CameraPose& pose) {
  const Vec3 p = pose.ToCamera(point);
  Projection out;
  out.depth = p.z();
  if (p.z() == 0.0) {
    out.pixel = Vec2(std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity());
    return out;
  }
  out.pixel = Vec2(intr.fx * p.x() / p.z() + intr.cx,
                   intr.fy * p.y() / p.z() + intr.cy);
  if (p.z() > 0 && std::isfinite(out.pixel.x()) &&
      std::isfinite(out.pixel.y())) {
    // Equivalent to NearestPixel() landing inside [0, width) x [0, height).
    out.visible = out.pixel.x() >= -0.5 && out.pixel.x() < intr.width - 0.5 &&
                  out.pixel.y() >= -0.5 && out.pixel.y() < intr.height - 0.5;
  }
  return out;
}

std::vector<Projection> Project(std::span<const Vec3> points,
                                const CameraIntrinsics& intr,
                                const CameraPose& pose) {
  std::vector<Projection> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(ProjectPoint(p, intr, pose));
  return out;
}

PluckerMap ComputePluckerMap(const CameraIntrinsics& intr,
                             const CameraPose& pose) {
  intr.Validate();
  PluckerMap map;
  map.width = intr.width;
  map.height = intr.height;
  const std::size_t plane = std::size_t(intr.width) * intr.height;
  map.channels.assign(6 * plane, 0.0);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Vec3 d = (pose.rotation * intr.Backproject(u, v)).normalized();
      const Vec3 m = pose.center.cross(d);
      const std::size_t i = std::size_t(v) * intr.width + u;
      for (int c = 0; c < 3; ++c) {
        map.channels[c * plane + i] = d[c];
        map.channels[(c + 3) * plane + i] = m[c];
      }
    }
  }
  return map;
}

ResolutionBucket PickResolutionBucket(int width, int height) {
  if (width < 1 || height < 1) {
    Fail(ErrorCode::kInvalidArgument, "image size must be at least 1x1");
  }
  const double aspect = std::log(double(width) / double(height));
  ResolutionBucket best = kResolutionBuckets.front();
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& bucket : kResolutionBuckets) {
    const double distance =
        std::abs(std::log(double(bucket.width) / bucket.height) - aspect);
    if (distance < best_distance) {
      best_distance = distance;
      best = bucket;
    }
  }
  return best;
}

}  // namespace worldguide
