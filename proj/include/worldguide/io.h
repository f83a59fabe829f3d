#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "worldguide/camera.h"
#include "worldguide/depth_metric.h"
#include "worldguide/eval_metrics.h"
#include "worldguide/raster.h"
#include "worldguide/traj_gen.h"
#include "worldguide/world_align.h"

namespace worldguide::io {

namespace fs = std::filesystem;

inline constexpr const char* kCameraConvention =
    "cam2world,x-right,y-down,z-forward";

// Point clouds: binary little-endian PLY with float xyz and uchar rgb. The
// reader also takes ascii / big-endian files, double coordinates and float
// colors. Malformed input raises FormatError with a byte offset.
PointCloud ReadPly(const fs::path& path);
void WritePly(const fs::path& path, const PointCloud& cloud);

// Triangle meshes from PLY (vertex + face elements) or Wavefront OBJ.
// Polygons are fan-triangulated.
TriangleMesh ReadMesh(const fs::path& path);
void WriteMeshPly(const fs::path& path, const TriangleMesh& mesh);

// Single-channel PFM. Either endianness is accepted; rows are stored bottom
// to top. Non-positive or non-finite samples read as invalid; invalid pixels
// are written as 0.
DepthMap ReadPfm(const fs::path& path);
void WritePfm(const fs::path& path, const DepthMap& depth);
void WritePfm(const fs::path& path, int width, int height,
              std::span<const double> values);

// 8- or 16-bit PNG (gray, gray+alpha, RGB, RGBA, palette) to RGB in [0, 1];
// alpha is dropped. Writing quantizes to 8-bit with round-to-nearest.
Image ReadPng(const fs::path& path);
void WritePng(const fs::path& path, const Image& image);
// Masks: 8-bit gray, nonzero = set.
std::vector<std::uint8_t> ReadMaskPng(const fs::path& path, int* width,
                                      int* height);
void WriteMaskPng(const fs::path& path, int width, int height,
                  std::span<const std::uint8_t> mask);

// 16-bit gray PNG plus a sidecar JSON {"scale": meters per unit} named
// <stem>.json next to it. Zero samples are invalid.
DepthMap ReadDepthPng16(const fs::path& path);
void WriteDepthPng16(const fs::path& path, const DepthMap& depth, double scale);
// Dispatches on extension: .pfm or .png.
DepthMap ReadDepth(const fs::path& path);

// Camera/trajectory JSON shared by every tool.
Trajectory ReadCameraJson(const fs::path& path);
void WriteCameraJson(const fs::path& path, const Trajectory& trajectory);

KeypointSet2D ReadKeypoints2D(const fs::path& path);
KeypointSet3D ReadKeypoints3D(const fs::path& path);
std::vector<Vec3> ReadRoots(const fs::path& path);
void WriteRoots(const fs::path& path, std::span<const Vec3> roots);

// Relative "follow" paths resolve against the spec's directory.
TrajectorySpec ReadTrajectorySpec(const fs::path& path);
std::vector<DepthCorrespondence> ReadCorrespondences(const fs::path& path);

void WriteTransformJson(const fs::path& path,
                        const SimilarityTransform& transform);
SimilarityTransform ReadTransformJson(const fs::path& path);

// Per-frame meshes (sorted *.ply / *.obj) plus roots.json in one directory.
struct MeshSequence {
  CharacterSequence sequence;
  std::vector<std::array<int, 3>> faces;
  std::vector<std::string> frame_names;
};
MeshSequence ReadMeshSequence(const fs::path& dir);
void WriteMeshSequence(const fs::path& dir, const MeshSequence& meshes);

// NumPy .npy, little-endian float32, C order.
void WriteNpyFloat32(const fs::path& path, std::span<const std::size_t> shape,
                     std::span<const double> values);
std::vector<float> ReadNpyFloat32(const fs::path& path,
                                  std::vector<std::size_t>* shape);

// Packed guidance stream: "WGV1", then per frame uint32 height, uint32 width
// and height*width*3 float32 RGB, all little-endian.
void WritePackedVideo(const fs::path& path, const GuidanceVideo& video);

// Streams the same format one frame at a time.
class PackedVideoWriter {
 public:
  explicit PackedVideoWriter(const fs::path& path);
  void Append(const Image& frame);
  void Close();

 private:
  fs::path path_;
  std::ofstream out_;
};
std::vector<Image> ReadPackedVideo(const fs::path& path);

std::string Sha256File(const fs::path& path);
std::string Sha256Bytes(std::span<const std::uint8_t> bytes);

// Renders of one frame: <stem>_color.png, <stem>_depth.pfm, <stem>_mask.png.
struct FrameFiles {
  fs::path color, depth, mask;
};
FrameFiles WriteRenderFrame(const fs::path& dir, const std::string& stem,
                            const RenderFrame& frame);
// "frame_0007" style stems shared by guidance, human and Plücker outputs.
std::string FrameStem(std::size_t index);
// <dir>/index.json listing the frame files in order.
fs::path WriteGuidanceIndex(const fs::path& dir, int width, int height,
                            std::span<const FrameFiles> frames);

}  // namespace worldguide::io
