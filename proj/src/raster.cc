#include "worldguide/raster.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "worldguide/error.h"
#include "worldguide/parallel.h"
#include "worldguide/random.h"

namespace worldguide {
namespace {

constexpr std::uint32_t kNoPoint = std::numeric_limits<std::uint32_t>::max();
constexpr std::size_t kProjectChunk = 1 << 14;

// Projected point in integer pixel coordinates; x < 0 marks invisible.
struct Splat {
  std::int32_t x;
  std::int32_t y;
  double z;
};

}  // namespace

std::size_t RenderFrame::CoveredCount() const {
  std::size_t n = 0;
  for (auto m : mask) n += m != 0;
  return n;
}

RenderFrame RenderFrameFromCloud(const PointCloud& cloud,
                                 const CameraIntrinsics& intr,
                                 const CameraPose& pose,
                                 const RasterConfig& config) {
  intr.Validate();
  if (config.splat_radius_px < 0 || config.tile_size < 1) {
    Fail(ErrorCode::kInvalidArgument,
         "splat radius must be >= 0 and tile size >= 1");
  }
  if (cloud.colors.size() != cloud.positions.size()) {
    Fail(ErrorCode::kInvalidArgument, "cloud positions and colors differ");
  }
  if (cloud.size() >= kNoPoint) {
    Fail(ErrorCode::kInvalidArgument, "cloud too large for 32-bit indices");
  }

  const int width = intr.width;
  const int height = intr.height;
  const int radius = config.splat_radius_px;
  const int tile = config.tile_size;
  const int threads = ResolveThreadCount(config.threads);
  RenderFrame frame(width, height);
  if (cloud.empty()) return frame;

  const std::size_t n = cloud.size();
  std::vector<Splat> splats(n);
  const std::size_t chunks = (n + kProjectChunk - 1) / kProjectChunk;
  ParallelFor(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kProjectChunk);
    for (std::size_t i = c * kProjectChunk; i < end; ++i) {
      const Projection p = ProjectPoint(cloud.positions[i], intr, pose);
      Splat s{-1, -1, p.depth};
      if (p.visible) {
        const int x = NearestPixel(p.pixel.x());
        const int y = NearestPixel(p.pixel.y());
        if (x >= 0 && x < width && y >= 0 && y < height) {
          s.x = x;
          s.y = y;
        }
      }
      splats[i] = s;
    }
  });

  // Bin point indices by every tile their footprint touches. Filling in index
  // order keeps each bin sorted by point index.
  const int tiles_x = (width + tile - 1) / tile;
  const int tiles_y = (height + tile - 1) / tile;
  const std::size_t tile_count = std::size_t(tiles_x) * tiles_y;
  std::vector<std::uint32_t> offsets(tile_count + 1, 0);
  auto for_each_tile = [&](const Splat& s, auto&& fn) {
    const int tx0 = std::max(s.x - radius, 0) / tile;
    const int tx1 = std::min(s.x + radius, width - 1) / tile;
    const int ty0 = std::max(s.y - radius, 0) / tile;
    const int ty1 = std::min(s.y + radius, height - 1) / tile;
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) fn(std::size_t(ty) * tiles_x + tx);
    }
  };
  for (const auto& s : splats) {
    if (s.x < 0) continue;
    for_each_tile(s, [&](std::size_t t) { ++offsets[t + 1]; });
  }
  for (std::size_t t = 0; t < tile_count; ++t) offsets[t + 1] += offsets[t];
  std::vector<std::uint32_t> binned(offsets.back());
  {
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::uint32_t i = 0; i < n; ++i) {
      if (splats[i].x < 0) continue;
      for_each_tile(splats[i], [&](std::size_t t) { binned[cursor[t]++] = i; });
    }
  }

  ParallelFor(tile_count, threads, [&](std::size_t t) {
    const int x0 = int(t % tiles_x) * tile;
    const int y0 = int(t / tiles_x) * tile;
    const int x1 = std::min(x0 + tile, width);
    const int y1 = std::min(y0 + tile, height);
    const int tw = x1 - x0;
    const int th = y1 - y0;
    std::vector<double> zbuf(std::size_t(tw) * th,
                             std::numeric_limits<double>::infinity());
    std::vector<std::uint32_t> winner(std::size_t(tw) * th, kNoPoint);

    for (std::uint32_t k = offsets[t]; k < offsets[t + 1]; ++k) {
      const std::uint32_t i = binned[k];
      const Splat& s = splats[i];
      const int sx0 = std::max(s.x - radius, x0);
      const int sx1 = std::min(s.x + radius, x1 - 1);
      const int sy0 = std::max(s.y - radius, y0);
      const int sy1 = std::min(s.y + radius, y1 - 1);
      for (int y = sy0; y <= sy1; ++y) {
        const std::size_t row = std::size_t(y - y0) * tw;
        for (int x = sx0; x <= sx1; ++x) {
          const std::size_t p = row + (x - x0);
          if (s.z < zbuf[p] || (s.z == zbuf[p] && i < winner[p])) {
            zbuf[p] = s.z;
            winner[p] = i;
          }
        }
      }
    }

    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const std::size_t p = std::size_t(y - y0) * tw + (x - x0);
        if (winner[p] == kNoPoint) continue;
        const std::size_t out = std::size_t(y) * width + x;
        frame.color.Set(x, y, cloud.colors[winner[p]]);
        frame.depth[out] = zbuf[p];
        frame.mask[out] = 1;
      }
    }
  });
  return frame;
}

RenderFrame RenderReferenceFrame(const PointCloud& cloud,
                                const CameraIntrinsics& intr,
                                const CameraPose& pose, const Image& reference,
                                const RasterConfig& config) {
  RenderFrame first;
  if (reference.width == intr.width && reference.height == intr.height) {
    first = RenderFrameFromCloud(cloud, intr, pose, config);
  } else {
    first = RenderFrame(reference.width, reference.height);
  }
  first.color = reference;
  return first;
}

GuidanceVideo RenderTrajectory(const PointCloud& cloud,
                               const Trajectory& trajectory,
                               const Image& reference,
                               const RasterConfig& config,
                               const TrajectoryRenderOptions& options) {
  const auto& intr = trajectory.intrinsics;
  intr.Validate();
  if (trajectory.frame_count() < 1) {
    Fail(ErrorCode::kInvalidArgument, "trajectory has no poses");
  }
  const bool same_size =
      reference.width == intr.width && reference.height == intr.height;
  if (!same_size && !options.allow_reference_resolution_mismatch) {
    std::ostringstream why;
    why << "reference image " << reference.width << "x" << reference.height
        << " does not match intrinsics " << intr.width << "x" << intr.height;
    Fail(ErrorCode::kDimensionMismatch, why.str());
  }
  if (reference.rgb.size() != 3 * reference.PixelCount()) {
    Fail(ErrorCode::kDimensionMismatch, "reference image buffer size");
  }
  std::size_t frames = options.frame_count > 0
                           ? std::size_t(options.frame_count)
                           : trajectory.frame_count();
  if (frames > trajectory.frame_count()) {
    Fail(ErrorCode::kLengthMismatch,
         "requested " + std::to_string(frames) + " frames but trajectory has " +
             std::to_string(trajectory.frame_count()));
  }

  GuidanceVideo video;
  video.frames.resize(frames);
  RasterConfig per_frame = config;
  per_frame.threads = 1;
  ParallelFor(frames, ResolveThreadCount(config.threads), [&](std::size_t i) {
    if (i == 0) {
      video.frames[0] = RenderReferenceFrame(cloud, intr, trajectory.poses[0],
                                             reference, per_frame);
    } else {
      video.frames[i] =
          RenderFrameFromCloud(cloud, intr, trajectory.poses[i], per_frame);
    }
  });
  return video;
}

std::vector<std::uint8_t> OcclusionMask(const RenderFrame& front,
                                        const RenderFrame& back, double eps_m) {
  if (front.width != back.width || front.height != back.height) {
    Fail(ErrorCode::kDimensionMismatch, "occlusion inputs differ in size");
  }
  std::vector<std::uint8_t> hidden(front.mask.size(), 0);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    hidden[i] = front.mask[i] && back.mask[i] &&
                front.depth[i] > back.depth[i] + eps_m;
  }
  return hidden;
}

PointCloud SampleMeshSurface(const TriangleMesh& mesh,
                             double points_per_sq_meter, std::uint64_t seed,
                             const Color& color) {
  if (!(points_per_sq_meter >= 0.0) || !std::isfinite(points_per_sq_meter)) {
    Fail(ErrorCode::kInvalidArgument, "sampling density must be >= 0");
  }
  const int vertex_count = static_cast<int>(mesh.vertices.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int k : mesh.faces[f]) {
      if (k < 0 || k >= vertex_count) {
        Fail(ErrorCode::kInvalidArgument,
             "face " + std::to_string(f) + " references vertex " +
                 std::to_string(k) + " of " + std::to_string(vertex_count));
      }
    }
  }

  PointCloud cloud;
  cloud.positions = mesh.vertices;
  cloud.colors.assign(mesh.vertices.size(), color);
  if (points_per_sq_meter == 0.0) return cloud;

  SplitMix64 rng(seed);
  for (const auto& face : mesh.faces) {
    const Vec3& a = mesh.vertices[face[0]];
    const Vec3& b = mesh.vertices[face[1]];
    const Vec3& c = mesh.vertices[face[2]];
    const double area = 0.5 * (b - a).cross(c - a).norm();
    const double expected = area * points_per_sq_meter;
    if (!(expected > 0.0)) continue;
    const double whole = std::floor(expected);
    std::size_t count = static_cast<std::size_t>(whole);
    if (rng.Uniform() < expected - whole) ++count;
    for (std::size_t k = 0; k < count; ++k) {
      const double s = std::sqrt(rng.Uniform());
      const double r = rng.Uniform();
      cloud.positions.push_back((1.0 - s) * a + s * (1.0 - r) * b + s * r * c);
      cloud.colors.push_back(color);
    }
  }
  return cloud;
}

}  // namespace worldguide
