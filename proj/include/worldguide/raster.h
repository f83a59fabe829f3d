#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "worldguide/camera.h"

namespace worldguide {

// One rendered view. Uncovered pixels are black with depth 0 and mask false.
struct RenderFrame {
  int width = 0;
  int height = 0;
  Image color;
  std::vector<double> depth;
  std::vector<std::uint8_t> mask;

  RenderFrame() = default;
  RenderFrame(int w, int h)
      : width(w),
        height(h),
        color(w, h),
        depth(std::size_t(w) * h, 0.0),
        mask(std::size_t(w) * h, 0) {}

  std::size_t CoveredCount() const;
  bool operator==(const RenderFrame&) const = default;
};

struct GuidanceVideo {
  std::vector<RenderFrame> frames;
  int reference_frame_index = 0;
};

struct RasterConfig {
  // Every visible point fills the (2r+1)^2 pixel square around its nearest
  // pixel center.
  int splat_radius_px = 1;
  int tile_size = 64;
  // <= 0 resolves through ResolveThreadCount().
  int threads = 0;
};

// Z-buffered square-splat rasterization. A pixel keeps the point with the
// smallest (camera depth, point index); that order is total, so the result is
// identical for any tiling or thread count.
RenderFrame RenderFrameFromCloud(const PointCloud& cloud,
                                 const CameraIntrinsics& intr,
                                 const CameraPose& pose,
                                 const RasterConfig& config = {});

struct TrajectoryRenderOptions {
  // Frames to render; 0 means trajectory.frame_count().
  int frame_count = 0;
  // Frame 0 may be a higher-resolution reference than the rendered frames.
  bool allow_reference_resolution_mismatch = false;
};

// Frame 0 of a guidance video: the reference image as color, depth and mask
// from the render at `pose`, or all uncovered when the sizes differ.
RenderFrame RenderReferenceFrame(const PointCloud& cloud,
                                 const CameraIntrinsics& intr,
                                 const CameraPose& pose, const Image& reference,
                                 const RasterConfig& config = {});

// Frame 0 carries the reference image verbatim as its color, with depth and
// mask from the render at pose 0 (all uncovered when the reference resolution
// differs). Frames 1.. are renders from the trajectory poses. Frames are
// rendered in parallel.
GuidanceVideo RenderTrajectory(const PointCloud& cloud,
                               const Trajectory& trajectory,
                               const Image& reference,
                               const RasterConfig& config = {},
                               const TrajectoryRenderOptions& options = {});

// True where the front render (hands) is hidden behind the back render
// (body) by more than eps_m.
std::vector<std::uint8_t> OcclusionMask(const RenderFrame& front,
                                        const RenderFrame& back, double eps_m);

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

// Area-weighted uniform surface samples appended after the mesh vertices.
// Each face receives floor(area * density) samples plus one more with the
// fractional remainder as probability, so the expected sample count is
// total_area * density.
PointCloud SampleMeshSurface(const TriangleMesh& mesh,
                             double points_per_sq_meter, std::uint64_t seed,
                             const Color& color = Color(0.5f, 0.5f, 0.5f));

}  // namespace worldguide
