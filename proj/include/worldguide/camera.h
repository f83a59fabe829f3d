#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace worldguide {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Color = Eigen::Vector3f;

// Pinhole intrinsics. Pixel centers sit at integer coordinates, so the
// homogeneous pixel for column u and row v is (u, v, 1).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  int width = 1;
  int height = 1;

  // Throws InvalidArgument unless fx, fy > 0, 0 < cx < width, 0 < cy < height.
  void Validate() const;

  Mat3 K() const;
  // Camera-frame ray K^-1 (u, v, 1); its z component is exactly 1.
  Vec3 Backproject(double u, double v) const {
    return Vec3((u - cx) / fx, (v - cy) / fy, 1.0);
  }
};

// Camera-to-world placement: x_world = rotation * x_cam + center.
// Axes follow x right, y down, z forward.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  static CameraPose Identity() { return {}; }

  // Throws InvalidArgument unless rotation is orthonormal with det +1.
  void Validate(double tolerance = 1e-9) const;

  Vec3 ToWorld(const Vec3& camera_point) const {
    return rotation * camera_point + center;
  }
  Vec3 ToCamera(const Vec3& world_point) const {
    return rotation.transpose() * (world_point - center);
  }
  Vec3 OpticalAxis() const { return rotation.col(2); }
};

// a∘b: first apply b, then a.
CameraPose Compose(const CameraPose& a, const CameraPose& b);
CameraPose Invert(const CameraPose& pose);

// Nearest rotation matrix in the Frobenius sense (SVD projection).
Mat3 ProjectToRotation(const Mat3& m);

// Row-major height x width grid of RGB values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(3 * std::size_t(w) * h, 0.f) {}

  std::size_t PixelCount() const { return std::size_t(width) * height; }
  Color At(int u, int v) const {
    const float* p = &rgb[3 * (std::size_t(v) * width + u)];
    return Color(p[0], p[1], p[2]);
  }
  void Set(int u, int v, const Color& c) {
    float* p = &rgb[3 * (std::size_t(v) * width + u)];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  bool operator==(const Image&) const = default;
};

// Metric depth along camera z with a validity mask.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w),
        height(h),
        values(std::size_t(w) * h, 0.0),
        valid(std::size_t(w) * h, 0) {}

  std::size_t Index(int u, int v) const { return std::size_t(v) * width + u; }
  bool IsValid(int u, int v) const { return valid[Index(u, v)] != 0; }
  double At(int u, int v) const { return values[Index(u, v)]; }
  void Set(int u, int v, double depth);  // marks invalid unless finite and > 0
  std::size_t ValidCount() const;
};

struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Color> colors;
  std::vector<std::array<int, 2>> source_pixel;  // empty when unknown

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  // Throws InvalidArgument on non-finite positions, colors outside [0, 1]
  // or mismatched lengths.
  void Validate() const;
};

struct Projection {
  Vec2 pixel = Vec2::Zero();
  double depth = 0.0;  // camera-frame z
  bool visible = false;
};

// Channel-major 6 x height x width: direction (3) then moment (3).
struct PluckerMap {
  int width = 0;
  int height = 0;
  std::vector<double> channels;

  double At(int channel, int u, int v) const {
    return channels[(std::size_t(channel) * height + v) * width + u];
  }
  Vec3 Direction(int u, int v) const {
    return Vec3(At(0, u, v), At(1, u, v), At(2, u, v));
  }
  Vec3 Moment(int u, int v) const {
    return Vec3(At(3, u, v), At(4, u, v), At(5, u, v));
  }
};

struct Trajectory {
  CameraIntrinsics intrinsics;
  std::vector<CameraPose> poses;

  std::size_t frame_count() const { return poses.size(); }
};

// One point per valid depth pixel, placed at R (d K^-1 x) + c with the pixel's
// color. Throws DimensionMismatch when depth, colors and intrinsics disagree.
PointCloud Unproject(const DepthMap& depth, const CameraIntrinsics& intr,
                     const CameraPose& pose, const Image& colors);

// Pixel coordinates are continuous; a point is visible when it lies in front
// of the camera and its nearest pixel center is inside the image.
Projection ProjectPoint(const Vec3& point, const CameraIntrinsics& intr,
                        const CameraPose& pose);
std::vector<Projection> Project(std::span<const Vec3> points,
                                const CameraIntrinsics& intr,
                                const CameraPose& pose);

// Integer pixel whose center is nearest to a continuous coordinate.
inline int NearestPixel(double coordinate) {
  return static_cast<int>(std::floor(coordinate + 0.5));
}

PluckerMap ComputePluckerMap(const CameraIntrinsics& intr,
                             const CameraPose& pose);

struct ResolutionBucket {
  int width;
  int height;
  bool operator==(const ResolutionBucket&) const = default;
};

// Training resolutions (w x h), widest first.
inline constexpr std::array<ResolutionBucket, 5> kResolutionBuckets{{
    {768, 480},
    {720, 512},
    {608, 608},
    {512, 720},
    {480, 768},
}};

// Default guidance clip length in frames.
inline constexpr int kDefaultFrameCount = 81;

// Bucket whose aspect ratio is nearest to width/height in log space.
ResolutionBucket PickResolutionBucket(int width, int height);

}  // namespace worldguide
