#include "worldguide/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "io_internal.h"
#include "json.hpp"
#include "worldguide/depth_metric.h"
#include "worldguide/error.h"
#include "worldguide/io.h"
#include "worldguide/parallel.h"
#include "worldguide/random.h"
#include "worldguide/raster.h"
#include "worldguide/traj_gen.h"
#include "worldguide/world_align.h"

namespace worldguide {
namespace {

using nlohmann::json;

void RequireFile(const fs::path& path, const char* what) {
  if (path.empty()) {
    Fail(ErrorCode::kInvalidArgument, std::string(what) + " not set");
  }
  if (!fs::exists(path)) {
    Fail(ErrorCode::kInvalidArgument,
         std::string(what) + " does not exist: " + path.string());
  }
}

// Nearest source frame when a sequence of length m is stretched to n frames.
std::size_t ResampleIndex(std::size_t f, std::size_t n, std::size_t m) {
  if (n <= 1 || m <= 1) return 0;
  return static_cast<std::size_t>(
      std::llround(double(f) * double(m - 1) / double(n - 1)));
}

class ArtifactLog {
 public:
  explicit ArtifactLog(fs::path root) : root_(std::move(root)) {}

  void Add(const std::string& kind, const fs::path& path) {
    items_.push_back({kind, fs::relative(path, root_).generic_string(),
                      io::Sha256File(path)});
  }
  void AddFrame(const std::string& prefix, const io::FrameFiles& files) {
    Add(prefix + "_color", files.color);
    Add(prefix + "_depth", files.depth);
    Add(prefix + "_mask", files.mask);
  }
  std::vector<PipelineArtifact>& items() { return items_; }

 private:
  fs::path root_;
  std::vector<PipelineArtifact> items_;
};

void SaveJson(const fs::path& path, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  io::internal::WriteFileBytes(path, {text.begin(), text.end()});
}

PointCloud SampleFrame(const std::vector<Vec3>& vertices,
                       const std::vector<std::array<int, 3>>& faces,
                       double density, std::uint64_t seed, const Color& color) {
  return SampleMeshSurface(TriangleMesh{vertices, faces}, density, seed, color);
}

}  // namespace

BucketOption BucketOption::Parse(const std::string& text) {
  BucketOption out;
  if (text.empty() || text == "none") return out;
  if (text == "auto") {
    out.kind = Kind::kAuto;
    return out;
  }
  int w = 0, h = 0;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || !in.eof() || w < 1 ||
      h < 1) {
    Fail(ErrorCode::kInvalidArgument,
         "bucket must be 'none', 'auto' or WxH, got '" + text + "'");
  }
  out.kind = Kind::kFixed;
  out.fixed = {w, h};
  return out;
}

void PipelineConfig::Validate() const {
  RequireFile(reference_image, "reference image");
  RequireFile(depth, "depth");
  RequireFile(cameras, "cameras");
  RequireFile(trajectory_spec, "trajectory spec");
  if (output_dir.empty()) Fail(ErrorCode::kInvalidArgument, "output not set");
  if (correspondences) RequireFile(*correspondences, "correspondences");
  if (foreground_mask) RequireFile(*foreground_mask, "foreground mask");
  if (highres_reference) RequireFile(*highres_reference, "highres reference");
  const int human_inputs = int(keypoints_2d.has_value()) +
                           int(human_keypoints.has_value()) +
                           int(human_sequence.has_value());
  if (human_inputs != 0 && human_inputs != 3) {
    Fail(ErrorCode::kInvalidArgument,
         "keypoints2d, human_keypoints and human_sequence go together");
  }
  if (hand_sequence && !has_human()) {
    Fail(ErrorCode::kInvalidArgument, "hand_sequence needs human inputs");
  }
  if (follow_character && !has_human()) {
    Fail(ErrorCode::kInvalidArgument, "follow_character needs human inputs");
  }
  if (keypoints_2d) RequireFile(*keypoints_2d, "keypoints2d");
  if (human_keypoints) RequireFile(*human_keypoints, "human keypoints");
  if (human_sequence) RequireFile(*human_sequence, "human sequence");
  if (hand_sequence) RequireFile(*hand_sequence, "hand sequence");
  if (frame_count && *frame_count < 1) {
    Fail(ErrorCode::kInvalidArgument, "frame count must be >= 1");
  }
  if (splat_radius_px < 0) {
    Fail(ErrorCode::kInvalidArgument, "splat radius must be >= 0");
  }
  if (!(mesh_points_per_sq_meter >= 0.0) || !(occlusion_eps_m >= 0.0)) {
    Fail(ErrorCode::kInvalidArgument,
         "mesh density and occlusion eps must be >= 0");
  }
}

PipelineConfig ReadPipelineConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path out = p;
    return out.is_relative() ? base / out : out;
  };
  try {
    const json doc = json::parse(in);
    PipelineConfig cfg;
    auto opt_path = [&](const char* key) -> std::optional<fs::path> {
      if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
      return resolve(doc.at(key).get<std::string>());
    };
    auto vec3 = [&](const char* key, const Vec3& fallback) {
      if (!doc.contains(key)) return fallback;
      const json& v = doc.at(key);
      if (!v.is_array() || v.size() != 3) {
        Fail(ErrorCode::kFormatError,
             path.string() + ": " + key + " must be a 3-element array");
      }
      return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    };
    cfg.reference_image = resolve(doc.at("reference").get<std::string>());
    cfg.depth = resolve(doc.at("depth").get<std::string>());
    cfg.cameras = resolve(doc.at("cameras").get<std::string>());
    cfg.trajectory_spec = resolve(doc.at("trajectory_spec").get<std::string>());
    cfg.output_dir = resolve(doc.value("output", std::string("out")));
    cfg.correspondences = opt_path("correspondences");
    cfg.foreground_mask = opt_path("foreground");
    cfg.highres_reference = opt_path("highres_reference");
    cfg.keypoints_2d = opt_path("keypoints2d");
    cfg.human_keypoints = opt_path("human_keypoints");
    cfg.human_sequence = opt_path("human_sequence");
    cfg.hand_sequence = opt_path("hand_sequence");
    cfg.follow_character = doc.value("follow_character", false);
    cfg.g_env = vec3("g_env", cfg.g_env);
    cfg.g_hum = vec3("g_hum", cfg.g_hum);
    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.bucket = BucketOption::Parse(doc.value("bucket", std::string("none")));
    if (doc.contains("frames")) cfg.frame_count = doc.at("frames").get<int>();
    cfg.threads = doc.value("threads", 0);
    cfg.splat_radius_px = doc.value("splat_radius", cfg.splat_radius_px);
    cfg.mesh_points_per_sq_meter =
        doc.value("mesh_density", cfg.mesh_points_per_sq_meter);
    cfg.occlusion_eps_m = doc.value("occlusion_eps", cfg.occlusion_eps_m);
    cfg.write_packed_video = doc.value("packed", false);
    return cfg;
  } catch (const json::parse_error& e) {
    io::internal::FormatFail(path, e.byte, e.what());
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
}

Image ResizeImageBilinear(const Image& image, int width, int height) {
  if (image.width == width && image.height == height) return image;
  Image out(width, height);
  const double sx = double(image.width) / width;
  const double sy = double(image.height) / height;
  for (int v = 0; v < height; ++v) {
    const double y =
        std::clamp((v + 0.5) * sy - 0.5, 0.0, double(image.height - 1));
    const int y0 = static_cast<int>(y);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const float fy = float(y - y0);
    for (int u = 0; u < width; ++u) {
      const double x =
          std::clamp((u + 0.5) * sx - 0.5, 0.0, double(image.width - 1));
      const int x0 = static_cast<int>(x);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const float fx = float(x - x0);
      const Color top = image.At(x0, y0) * (1 - fx) + image.At(x1, y0) * fx;
      const Color bottom = image.At(x0, y1) * (1 - fx) + image.At(x1, y1) * fx;
      out.Set(u, v, top * (1 - fy) + bottom * fy);
    }
  }
  return out;
}

namespace {

int NearestSource(int dst, int src_size, int dst_size) {
  const double s = (dst + 0.5) * double(src_size) / dst_size - 0.5;
  return std::clamp(NearestPixel(s), 0, src_size - 1);
}

}  // namespace

DepthMap ResizeDepthNearest(const DepthMap& depth, int width, int height) {
  if (depth.width == width && depth.height == height) return depth;
  DepthMap out(width, height);
  for (int v = 0; v < height; ++v) {
    const int sv = NearestSource(v, depth.height, height);
    for (int u = 0; u < width; ++u) {
      const int su = NearestSource(u, depth.width, width);
      out.values[out.Index(u, v)] = depth.At(su, sv);
      out.valid[out.Index(u, v)] = depth.valid[depth.Index(su, sv)];
    }
  }
  return out;
}

std::vector<std::uint8_t> ResizeMaskNearest(const std::vector<std::uint8_t>& mask,
                                            int src_width, int src_height,
                                            int width, int height) {
  if (mask.size() != std::size_t(src_width) * src_height) {
    Fail(ErrorCode::kDimensionMismatch, "mask does not match its size");
  }
  std::vector<std::uint8_t> out(std::size_t(width) * height);
  for (int v = 0; v < height; ++v) {
    const int sv = NearestSource(v, src_height, height);
    for (int u = 0; u < width; ++u) {
      const int su = NearestSource(u, src_width, width);
      out[std::size_t(v) * width + u] = mask[std::size_t(sv) * src_width + su];
    }
  }
  return out;
}

CameraIntrinsics ScaleIntrinsics(const CameraIntrinsics& intr, int width,
                                 int height) {
  const double sx = double(width) / intr.width;
  const double sy = double(height) / intr.height;
  CameraIntrinsics out = intr;
  out.fx *= sx;
  out.fy *= sy;
  out.cx = (intr.cx + 0.5) * sx - 0.5;
  out.cy = (intr.cy + 0.5) * sy - 0.5;
  out.width = width;
  out.height = height;
  return out;
}

Vec2 ScalePixel(const Vec2& pixel, const Vec2& factors) {
  return Vec2((pixel.x() + 0.5) * factors.x() - 0.5,
              (pixel.y() + 0.5) * factors.y() - 0.5);
}

Vec2 ApplyBucket(const BucketOption& bucket, ReferenceView* view) {
  CameraIntrinsics& intr = view->intrinsics;
  if (bucket.kind == BucketOption::Kind::kNone) return Vec2(1.0, 1.0);
  const ResolutionBucket target =
      bucket.kind == BucketOption::Kind::kAuto
          ? PickResolutionBucket(intr.width, intr.height)
          : bucket.fixed;
  const Vec2 factors(double(target.width) / intr.width,
                     double(target.height) / intr.height);
  if (!view->foreground.empty()) {
    view->foreground = ResizeMaskNearest(view->foreground, intr.width,
                                         intr.height, target.width,
                                         target.height);
  }
  view->image = ResizeImageBilinear(view->image, target.width, target.height);
  view->depth = ResizeDepthNearest(view->depth, target.width, target.height);
  intr = ScaleIntrinsics(intr, target.width, target.height);
  return factors;
}

PipelineReport RunPipeline(const PipelineConfig& config) {
  PipelineReport report;
  const fs::path out = config.output_dir;
  std::string stage = "config";
  ArtifactLog log(out);

  auto fail = [&](const std::string& code, const std::string& message) {
    report.exit_code = 2;
    report.failed_stage = stage;
    report.error_code = code;
    report.error_message = message;
    try {
      fs::create_directories(out);
      SaveJson(out / "error.json",
               json{{"stage", stage}, {"error", code}, {"message", message}});
    } catch (const std::exception&) {
      // The report still carries the failure.
    }
    return report;
  };

  try {
    config.Validate();
    fs::create_directories(out);
    fs::remove(out / "error.json");
    const int threads = ResolveThreadCount(config.threads);

    stage = "load";
    Image reference = io::ReadPng(config.reference_image);
    DepthMap depth = io::ReadDepth(config.depth);
    const Trajectory cameras = io::ReadCameraJson(config.cameras);
    CameraIntrinsics intr = cameras.intrinsics;
    const CameraPose pose0 = cameras.poses.front();
    TrajectorySpec spec = io::ReadTrajectorySpec(config.trajectory_spec);
    if (config.frame_count) spec.frame_count = *config.frame_count;
    spec.Validate();
    const std::size_t n = std::size_t(spec.frame_count);
    if (reference.width != intr.width || reference.height != intr.height ||
        depth.width != intr.width || depth.height != intr.height) {
      std::ostringstream why;
      why << "reference " << reference.width << "x" << reference.height
          << ", depth " << depth.width << "x" << depth.height
          << " and intrinsics " << intr.width << "x" << intr.height
          << " must agree";
      Fail(ErrorCode::kDimensionMismatch, why.str());
    }
    std::vector<std::uint8_t> fg_mask;
    if (config.foreground_mask) {
      int mw = 0, mh = 0;
      fg_mask = io::ReadMaskPng(*config.foreground_mask, &mw, &mh);
      if (mw != intr.width || mh != intr.height) {
        Fail(ErrorCode::kDimensionMismatch,
             "foreground mask does not match the reference size");
      }
    }
    std::optional<Image> highres;
    if (config.highres_reference) {
      highres = io::ReadPng(*config.highres_reference);
    }
    std::optional<KeypointSet2D> kp2d;
    if (config.keypoints_2d) kp2d = io::ReadKeypoints2D(*config.keypoints_2d);

    stage = "bucket";
    ReferenceView view{std::move(reference), std::move(depth), intr,
                       std::move(fg_mask)};
    const Vec2 factors = ApplyBucket(config.bucket, &view);
    reference = std::move(view.image);
    depth = std::move(view.depth);
    intr = view.intrinsics;
    fg_mask = std::move(view.foreground);
    if (kp2d) {
      for (auto& p : kp2d->points) p = ScalePixel(p, factors);
    }

    if (config.correspondences) {
      stage = "align-depth";
      const auto pairs = io::ReadCorrespondences(*config.correspondences);
      RansacConfig rc;
      rc.seed = StageSeed(config.seed, "align-depth");
      const ScaleShift ss = EstimateScaleShift(pairs, rc);
      depth = ApplyScaleShift(depth, ss);
      const fs::path p = out / "depth" / "metric_depth.pfm";
      io::WritePfm(p, depth);
      log.Add("metric_depth", p);
      const fs::path j = out / "depth" / "scale_shift.json";
      SaveJson(j, json{{"scale", ss.scale},
                       {"shift", ss.shift},
                       {"inlier_ratio", ss.inlier_ratio}});
      log.Add("scale_shift", j);
    }

    stage = "unproject";
    const PointCloud scene = Unproject(depth, intr, pose0, reference);
    {
      const fs::path p = out / "scene.ply";
      io::WritePly(p, scene);
      log.Add("scene_cloud", p);
    }

    stage = "rotation-center";
    const RotationCenter rc = ComputeRotationCenter(
        depth, intr, pose0, fg_mask.empty() ? nullptr : &fg_mask);

    stage = "make-traj";
    Trajectory traj = BuildTrajectory(spec, pose0, rc, intr);

    std::optional<HumanAlignment> human;
    std::optional<io::MeshSequence> body_meshes, hand_meshes;
    if (config.has_human()) {
      stage = "align-human";
      const KeypointSet3D kp_hum = io::ReadKeypoints3D(*config.human_keypoints);
      body_meshes = io::ReadMeshSequence(*config.human_sequence);
      human = AlignHumanToEnv(*kp2d, depth, intr, pose0, kp_hum, config.g_env,
                              config.g_hum, body_meshes->sequence);
      if (config.hand_sequence) {
        hand_meshes = io::ReadMeshSequence(*config.hand_sequence);
        hand_meshes->sequence =
            ApplyTransform(hand_meshes->sequence, human->transform, threads);
      }
      const fs::path p = out / "human" / "transform.json";
      io::WriteTransformJson(p, human->transform);
      log.Add("human_transform", p);
      if (!human->sequence.roots.empty()) {
        const fs::path r = out / "human" / "roots.json";
        io::WriteRoots(r, human->sequence.roots);
        log.Add("human_roots", r);
      }
    }

    if (spec.follow || config.follow_character) {
      stage = "follow-shot";
      std::vector<Vec3> roots;
      if (spec.follow) {
        roots = io::ReadRoots(*spec.follow);
      } else {
        const auto& src = human->sequence.roots;
        if (src.empty()) {
          Fail(ErrorCode::kInvalidArgument,
               "follow_character needs roots.json in the human sequence");
        }
        for (std::size_t f = 0; f < n; ++f) {
          roots.push_back(src[ResampleIndex(f, n, src.size())]);
        }
      }
      traj = FollowShot(traj, roots, spec.follow_aim);
    }
    {
      const fs::path p = out / "trajectory.json";
      io::WriteCameraJson(p, traj);
      log.Add("trajectory", p);
    }

    stage = "render-scene";
    RasterConfig raster;
    raster.splat_radius_px = config.splat_radius_px;
    raster.threads = threads;
    {
      const fs::path dir = out / "guidance";
      const Image& ref_color = highres ? *highres : reference;
      std::optional<io::PackedVideoWriter> packed;
      const fs::path packed_path = dir / "guidance.wgv";
      if (config.write_packed_video) packed.emplace(packed_path);
      std::vector<io::FrameFiles> frames;
      for (std::size_t f = 0; f < n; ++f) {
        const RenderFrame frame =
            f == 0 ? RenderReferenceFrame(scene, intr, traj.poses[0],
                                          ref_color, raster)
                   : RenderFrameFromCloud(scene, intr, traj.poses[f], raster);
        frames.push_back(io::WriteRenderFrame(dir, io::FrameStem(f), frame));
        log.AddFrame("guidance", frames.back());
        if (packed) packed->Append(frame.color);
      }
      if (packed) {
        packed->Close();
        log.Add("guidance_packed", packed_path);
      }
      log.Add("guidance_index",
              io::WriteGuidanceIndex(dir, intr.width, intr.height, frames));
    }

    if (human) {
      stage = "render-human";
      const auto& body = human->sequence;
      const std::uint64_t mesh_seed = StageSeed(config.seed, "mesh");
      const std::uint64_t hand_seed = StageSeed(config.seed, "hand-mesh");
      const fs::path dir = out / "human";
      for (std::size_t f = 0; f < n; ++f) {
        const std::size_t bf = ResampleIndex(f, n, body.frame_count());
        const PointCloud body_cloud =
            SampleFrame(body.frames[bf], body_meshes->faces,
                        config.mesh_points_per_sq_meter, mesh_seed ^ f,
                        Color(0.5f, 0.5f, 0.5f));
        const RenderFrame body_frame =
            RenderFrameFromCloud(body_cloud, intr, traj.poses[f], raster);
        log.AddFrame("character",
                     io::WriteRenderFrame(dir, "character_" + io::FrameStem(f),
                                          body_frame));
        if (!hand_meshes) continue;
        const auto& hands = hand_meshes->sequence;
        const std::size_t hf = ResampleIndex(f, n, hands.frame_count());
        const PointCloud hand_cloud =
            SampleFrame(hands.frames[hf], hand_meshes->faces,
                        config.mesh_points_per_sq_meter, hand_seed ^ f,
                        Color(0.8f, 0.6f, 0.5f));
        const RenderFrame hand_frame =
            RenderFrameFromCloud(hand_cloud, intr, traj.poses[f], raster);
        log.AddFrame("hand", io::WriteRenderFrame(dir, "hand_" + io::FrameStem(f),
                                                  hand_frame));
        const auto hidden =
            OcclusionMask(hand_frame, body_frame, config.occlusion_eps_m);
        const fs::path p = dir / ("hand_occlusion_" + io::FrameStem(f) + ".png");
        io::WriteMaskPng(p, intr.width, intr.height, hidden);
        log.Add("hand_occlusion", p);
      }
    }

    stage = "plucker";
    for (std::size_t f = 0; f < n; ++f) {
      const PluckerMap map = ComputePluckerMap(intr, traj.poses[f]);
      const std::size_t shape[3] = {6, std::size_t(map.height),
                                    std::size_t(map.width)};
      const fs::path p = out / "plucker" / (io::FrameStem(f) + ".npy");
      io::WriteNpyFloat32(p, shape, map.channels);
      log.Add("plucker", p);
    }

    stage = "manifest";
    json artifacts = json::array();
    for (const auto& a : log.items()) {
      artifacts.push_back(
          {{"kind", a.kind}, {"path", a.path}, {"sha256", a.sha256}});
    }
    report.manifest_path = out / "manifest.json";
    SaveJson(report.manifest_path,
             json{{"format", "worldguide-manifest-1"},
                  {"seed", config.seed},
                  {"frames", n},
                  {"width", intr.width},
                  {"height", intr.height},
                  {"human", human.has_value()},
                  {"artifacts", artifacts}});
    report.manifest_sha256 = io::Sha256File(report.manifest_path);
    report.artifacts = std::move(log.items());
    return report;
  } catch (const Error& e) {
    return fail(std::string(ErrorCodeName(e.code())), e.detail());
  } catch (const std::exception& e) {
    return fail("Internal", e.what());
  }
}

}  // namespace worldguide
