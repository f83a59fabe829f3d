#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "worldguide/camera.h"

namespace worldguide {

namespace fs = std::filesystem;

// Resolution override applied to the reference view before unprojection.
struct BucketOption {
  enum class Kind { kNone, kAuto, kFixed } kind = Kind::kNone;
  ResolutionBucket fixed{0, 0};

  // "none", "auto" or "WxH".
  static BucketOption Parse(const std::string& text);
};

// Reference image, depth, intrinsics and optional foreground mask, kept at
// one resolution.
struct ReferenceView {
  Image image;
  DepthMap depth;
  CameraIntrinsics intrinsics;
  std::vector<std::uint8_t> foreground;  // empty when absent
};

// Resamples the view to the requested bucket; returns the (x, y) scale
// factors applied to pixel coordinates, (1, 1) for kNone.
Vec2 ApplyBucket(const BucketOption& bucket, ReferenceView* view);
// Maps a pixel coordinate through the same resampling.
Vec2 ScalePixel(const Vec2& pixel, const Vec2& factors);

struct PipelineConfig {
  fs::path reference_image;
  fs::path depth;
  fs::path cameras;  // intrinsics + reference pose (frame 0)
  fs::path trajectory_spec;
  fs::path output_dir;

  std::optional<fs::path> correspondences;  // enables metric depth alignment
  std::optional<fs::path> foreground_mask;
  std::optional<fs::path> highres_reference;

  // Human inputs; all three or none.
  std::optional<fs::path> keypoints_2d;
  std::optional<fs::path> human_keypoints;
  std::optional<fs::path> human_sequence;
  std::optional<fs::path> hand_sequence;
  // Follow the aligned character root when the spec names no roots file.
  bool follow_character = false;

  Vec3 g_env{0.0, 1.0, 0.0};
  Vec3 g_hum{0.0, -1.0, 0.0};

  std::uint64_t seed = 0;
  BucketOption bucket;
  std::optional<int> frame_count;  // overrides the spec
  int threads = 0;
  int splat_radius_px = 1;
  double mesh_points_per_sq_meter = 20000.0;
  double occlusion_eps_m = 0.02;
  bool write_packed_video = false;

  bool has_human() const { return human_sequence.has_value(); }
  // Throws InvalidArgument naming the first missing path or bad value.
  void Validate() const;
};

// Relative paths resolve against the config file's directory; the output
// directory may be overridden by the caller afterwards.
PipelineConfig ReadPipelineConfig(const fs::path& path);

struct PipelineArtifact {
  std::string kind;
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct PipelineReport {
  int exit_code = 0;
  std::string failed_stage;
  std::string error_code;
  std::string error_message;
  std::vector<PipelineArtifact> artifacts;
  fs::path manifest_path;
  std::string manifest_sha256;
};

// Runs every stage in order and writes manifest.json (or error.json naming
// the failing stage) into the output directory. Does not throw for stage
// failures; they are reported through exit_code.
PipelineReport RunPipeline(const PipelineConfig& config);

// Resampling helpers used by the bucket override. Pixel centers stay at
// integer coordinates, so u' = (u + 0.5) * sx - 0.5.
Image ResizeImageBilinear(const Image& image, int width, int height);
DepthMap ResizeDepthNearest(const DepthMap& depth, int width, int height);
std::vector<std::uint8_t> ResizeMaskNearest(const std::vector<std::uint8_t>& mask,
                                            int src_width, int src_height,
                                            int width, int height);
CameraIntrinsics ScaleIntrinsics(const CameraIntrinsics& intr, int width,
                                 int height);

}  // namespace worldguide
