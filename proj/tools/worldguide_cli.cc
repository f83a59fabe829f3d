// Command-line front end. Each subcommand reads its inputs, calls one library
// operation and writes the result; all numerics live in the library.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "worldguide/depth_metric.h"
#include "worldguide/error.h"
#include "worldguide/eval_metrics.h"
#include "worldguide/io.h"
#include "worldguide/parallel.h"
#include "worldguide/pipeline.h"
#include "worldguide/random.h"
#include "worldguide/raster.h"
#include "worldguide/traj_gen.h"
#include "worldguide/world_align.h"

namespace wg = worldguide;
namespace io = worldguide::io;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string bucket = "none";
};

void SaveJson(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path) << doc.dump(2) << "\n";
}

wg::Vec3 ToVec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

// Reference view with the --bucket override applied.
wg::ReferenceView LoadView(const Globals& g, const fs::path& depth,
                           const fs::path& cam, const fs::path* image,
                           const fs::path* fg, wg::CameraPose* pose,
                           wg::Vec2* factors) {
  const wg::Trajectory cameras = io::ReadCameraJson(cam);
  wg::ReferenceView view;
  view.intrinsics = cameras.intrinsics;
  view.depth = io::ReadDepth(depth);
  view.image = image ? io::ReadPng(*image)
                     : wg::Image(view.depth.width, view.depth.height);
  if (fg && !fg->empty()) {
    view.foreground = io::ReadMaskPng(*fg, nullptr, nullptr);
  }
  *pose = cameras.poses.front();
  const wg::Vec2 f = wg::ApplyBucket(wg::BucketOption::Parse(g.bucket), &view);
  if (factors) *factors = f;
  return view;
}

int AlignDepth(const Globals& g, const fs::path& depth_path,
               const fs::path& corr, const fs::path& out,
               const std::string& report) {
  wg::RansacConfig config;
  config.seed = wg::StageSeed(g.seed, "align-depth");
  const wg::ScaleShift ss =
      wg::EstimateScaleShift(io::ReadCorrespondences(corr), config);
  const json summary{{"scale", ss.scale},
                     {"shift", ss.shift},
                     {"inlier_ratio", ss.inlier_ratio}};
  if (!depth_path.empty() && !out.empty()) {
    io::WritePfm(out, wg::ApplyScaleShift(io::ReadDepth(depth_path), ss));
  }
  if (!report.empty()) SaveJson(report, summary);
  std::cout << summary.dump() << "\n";
  return 0;
}

int Unproject(const Globals& g, const fs::path& depth, const fs::path& cam,
              const fs::path& image, const fs::path& out) {
  wg::CameraPose pose;
  const wg::ReferenceView view =
      LoadView(g, depth, cam, &image, nullptr, &pose, nullptr);
  const wg::PointCloud cloud =
      wg::Unproject(view.depth, view.intrinsics, pose, view.image);
  io::WritePly(out, cloud);
  std::cout << "points: " << cloud.size() << "\n";
  return 0;
}

int MakeTraj(const Globals& g, const fs::path& spec_path, const fs::path& depth,
             const fs::path& cam, const fs::path& fg, const fs::path& out,
             int frames) {
  wg::TrajectorySpec spec = io::ReadTrajectorySpec(spec_path);
  if (frames > 0) spec.frame_count = frames;
  spec.Validate();
  wg::CameraPose pose;
  const wg::ReferenceView view =
      LoadView(g, depth, cam, nullptr, &fg, &pose, nullptr);
  const wg::RotationCenter rc = wg::ComputeRotationCenter(
      view.depth, view.intrinsics, pose,
      view.foreground.empty() ? nullptr : &view.foreground);
  wg::Trajectory traj = wg::BuildTrajectory(spec, pose, rc, view.intrinsics);
  if (spec.follow) traj = wg::FollowShot(traj, io::ReadRoots(*spec.follow), spec.follow_aim);
  io::WriteCameraJson(out, traj);
  std::cout << "frames: " << traj.frame_count() << " radius: " << rc.radius
            << "\n";
  return 0;
}

int AlignHuman(const Globals& g, const fs::path& kp2d_path,
               const fs::path& depth, const fs::path& cam,
               const fs::path& kp_hum, const fs::path& seq,
               const fs::path& hand_seq, const std::vector<double>& g_env,
               const std::vector<double>& g_hum, const fs::path& out) {
  wg::CameraPose pose;
  wg::Vec2 factors;
  const wg::ReferenceView view =
      LoadView(g, depth, cam, nullptr, nullptr, &pose, &factors);
  wg::KeypointSet2D kp2d = io::ReadKeypoints2D(kp2d_path);
  for (auto& p : kp2d.points) p = wg::ScalePixel(p, factors);
  io::MeshSequence body = io::ReadMeshSequence(seq);
  const wg::HumanAlignment aligned = wg::AlignHumanToEnv(
      kp2d, view.depth, view.intrinsics, pose, io::ReadKeypoints3D(kp_hum),
      ToVec3(g_env), ToVec3(g_hum), body.sequence);
  io::WriteTransformJson(out / "transform.json", aligned.transform);
  body.sequence = aligned.sequence;
  io::WriteMeshSequence(out / "sequence", body);
  if (!hand_seq.empty()) {
    io::MeshSequence hands = io::ReadMeshSequence(hand_seq);
    hands.sequence =
        wg::ApplyTransform(hands.sequence, aligned.transform, g.threads);
    io::WriteMeshSequence(out / "hands", hands);
  }
  std::cout << "scale: " << aligned.transform.scale << "\n";
  return 0;
}

int RenderTraj(const Globals& g, const fs::path& cloud_path,
               const fs::path& traj_path, const fs::path& ref,
               const fs::path& out, int frames, int radius, int tile,
               const fs::path& packed) {
  wg::RasterConfig config;
  config.splat_radius_px = radius;
  config.tile_size = tile;
  config.threads = g.threads;
  wg::TrajectoryRenderOptions options;
  options.frame_count = frames;
  const wg::Trajectory traj = io::ReadCameraJson(traj_path);
  const wg::Image reference = io::ReadPng(ref);
  options.allow_reference_resolution_mismatch =
      reference.width != traj.intrinsics.width ||
      reference.height != traj.intrinsics.height;
  const wg::GuidanceVideo video = wg::RenderTrajectory(
      io::ReadPly(cloud_path), traj, reference, config, options);
  std::vector<io::FrameFiles> files;
  for (std::size_t f = 0; f < video.frames.size(); ++f) {
    files.push_back(io::WriteRenderFrame(out, io::FrameStem(f), video.frames[f]));
  }
  io::WriteGuidanceIndex(out, traj.intrinsics.width, traj.intrinsics.height,
                         files);
  if (!packed.empty()) io::WritePackedVideo(packed, video);
  std::cout << "frames: " << video.frames.size() << "\n";
  return 0;
}

int Plucker(const fs::path& traj_path, const fs::path& out) {
  const wg::Trajectory traj = io::ReadCameraJson(traj_path);
  for (std::size_t f = 0; f < traj.frame_count(); ++f) {
    const wg::PluckerMap map =
        wg::ComputePluckerMap(traj.intrinsics, traj.poses[f]);
    const std::size_t shape[3] = {6, std::size_t(map.height),
                                  std::size_t(map.width)};
    io::WriteNpyFloat32(out / (io::FrameStem(f) + ".npy"), shape, map.channels);
  }
  std::cout << "frames: " << traj.frame_count() << "\n";
  return 0;
}

json ErrorsJson(const wg::TrajectoryErrors& e) {
  return {{"ate", e.ate}, {"rpe", e.rpe}, {"rre_deg", e.rre_deg}};
}

void PrintRow(const std::string& name, const wg::TrajectoryErrors& e) {
  std::printf("%-24s %12.6f %12.6f %12.6f\n", name.c_str(), e.ate, e.rpe,
              e.rre_deg);
}

int EvalTraj(const fs::path& est, const fs::path& gt, const std::string& mode,
             int gap, bool raw, const fs::path& report) {
  wg::EvalOptions options;
  options.mode = wg::ParseAlignmentMode(mode);
  options.gap = gap;
  options.normalize_by_span = !raw;

  if (!fs::is_directory(est)) {
    const wg::Trajectory est_traj = io::ReadCameraJson(est);
    const wg::TrajectoryErrors e = wg::ComputeTrajectoryErrors(
        est_traj, io::ReadCameraJson(gt), options);
    json doc = ErrorsJson(e);
    doc["frames"] = est_traj.frame_count();
    doc["mode"] = std::string(wg::AlignmentModeName(options.mode));
    if (!report.empty()) SaveJson(report, doc);
    std::cout << doc.dump() << "\n";
    return 0;
  }

  // Batch mode: pair <est>/<name>.json with <gt>/<name>.json.
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(est)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    wg::Fail(wg::ErrorCode::kInvalidArgument,
             "no trajectory files in " + est.string());
  }
  std::printf("%-24s %12s %12s %12s\n", "sequence", "ATE", "RPE", "RRE(deg)");
  wg::TrajectoryErrors mean;
  json rows = json::object();
  for (const auto& file : files) {
    const wg::TrajectoryErrors e = wg::ComputeTrajectoryErrors(
        io::ReadCameraJson(file), io::ReadCameraJson(gt / file.filename()),
        options);
    PrintRow(file.stem().string(), e);
    rows[file.stem().string()] = ErrorsJson(e);
    mean.ate += e.ate / files.size();
    mean.rpe += e.rpe / files.size();
    mean.rre_deg += e.rre_deg / files.size();
  }
  PrintRow("mean", mean);
  if (!report.empty()) {
    SaveJson(report, json{{"sequences", rows},
                          {"mean", ErrorsJson(mean)},
                          {"mode", std::string(wg::AlignmentModeName(options.mode))}});
  }
  return 0;
}

int Pipeline(const Globals& g, const fs::path& config_path, const fs::path& out,
             bool seed_given, bool threads_given, bool bucket_given) {
  wg::PipelineConfig config = wg::ReadPipelineConfig(config_path);
  if (!out.empty()) config.output_dir = out;
  if (seed_given) config.seed = g.seed;
  if (threads_given) config.threads = g.threads;
  if (bucket_given) config.bucket = wg::BucketOption::Parse(g.bucket);
  const wg::PipelineReport report = wg::RunPipeline(config);
  if (report.exit_code != 0) {
    std::cerr << "error: stage " << report.failed_stage << ": "
              << report.error_code << ": " << report.error_message << "\n";
    return report.exit_code;
  }
  std::cout << "manifest: " << report.manifest_path.string() << "\n"
            << "sha256: " << report.manifest_sha256 << "\n"
            << "artifacts: " << report.artifacts.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"worldguide: geometry conditioning toolkit"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Base random seed");
  auto* threads_opt = app.add_option(
      "--threads", g.threads,
      "Worker threads (default: WORLDGUIDE_THREADS, then all cores)");
  auto* bucket_opt = app.add_option("--bucket", g.bucket,
                                    "Resolution override: none, auto or WxH");
  seed_opt->capture_default_str();
  bucket_opt->capture_default_str();

  std::string depth, corr, out, report, cam, image, spec, fg, kp2d, kp_hum,
      seq, hand_seq, cloud, traj, ref, packed, est, gt, config, mode = "sim3";
  int frames = 0, radius = 1, tile = 64, gap = 1;
  bool raw = false;
  std::vector<double> g_env{0.0, 1.0, 0.0}, g_hum{0.0, -1.0, 0.0};

  auto* align_depth = app.add_subcommand(
      "align-depth", "Robust scale/shift fit of mono depth to metric anchors");
  align_depth->add_option("--corr", corr, "Correspondence JSON")->required();
  align_depth->add_option("--depth", depth, "Mono depth (.pfm or .png)");
  align_depth->add_option("--out", out, "Metric depth output (.pfm)");
  align_depth->add_option("--report", report, "Scale/shift JSON output");

  auto* unproject =
      app.add_subcommand("unproject", "Lift the reference view to a point cloud");
  unproject->add_option("--depth", depth)->required();
  unproject->add_option("--cam", cam, "Camera JSON")->required();
  unproject->add_option("--image", image, "Reference PNG")->required();
  unproject->add_option("--out", out, "Output PLY")->required();

  auto* make_traj =
      app.add_subcommand("make-traj", "Camera trajectory from a spec");
  make_traj->add_option("--spec", spec)->required();
  make_traj->add_option("--depth", depth)->required();
  make_traj->add_option("--cam", cam)->required();
  make_traj->add_option("--fg", fg, "Foreground mask PNG");
  make_traj->add_option("--frames", frames, "Override the spec frame count");
  make_traj->add_option("--out", out, "Trajectory JSON")->required();

  auto* align_human =
      app.add_subcommand("align-human", "Align a character into the scene");
  align_human->add_option("--kp2d", kp2d)->required();
  align_human->add_option("--depth", depth)->required();
  align_human->add_option("--cam", cam)->required();
  align_human->add_option("--kp-hum", kp_hum)->required();
  align_human->add_option("--seq", seq, "Mesh sequence directory")->required();
  align_human->add_option("--hand-seq", hand_seq);
  align_human->add_option("--g-env", g_env)->expected(3)->delimiter(',');
  align_human->add_option("--g-hum", g_hum)->expected(3)->delimiter(',');
  align_human->add_option("--out", out, "Output directory")->required();

  auto* render_traj =
      app.add_subcommand("render-traj", "Render the guidance video");
  render_traj->add_option("--cloud", cloud)->required();
  render_traj->add_option("--traj", traj)->required();
  render_traj->add_option("--ref", ref, "Reference PNG (frame 0)")->required();
  render_traj->add_option("--out", out, "Output directory")->required();
  render_traj->add_option("--frames", frames);
  render_traj->add_option("--radius", radius)->capture_default_str();
  render_traj->add_option("--tile", tile)->capture_default_str();
  render_traj->add_option("--packed", packed, "Packed video output");

  auto* plucker = app.add_subcommand("plucker", "Plücker ray maps per frame");
  plucker->add_option("--traj", traj)->required();
  plucker->add_option("--out", out, "Output directory")->required();

  auto* eval_traj = app.add_subcommand(
      "eval-traj", "ATE / RPE / RRE of a trajectory (or directory of them)");
  eval_traj->add_option("--est", est)->required();
  eval_traj->add_option("--gt", gt)->required();
  eval_traj->add_option("--mode", mode, "se3 or sim3")->capture_default_str();
  eval_traj->add_option("--gap", gap)->capture_default_str();
  eval_traj->add_flag("--raw", raw, "Do not normalize by trajectory span");
  eval_traj->add_option("--report", report, "JSON output");

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage");
  pipeline->add_option("--config", config)->required();
  pipeline->add_option("--out", out, "Override the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*align_depth) return AlignDepth(g, depth, corr, out, report);
    if (*unproject) return Unproject(g, depth, cam, image, out);
    if (*make_traj) return MakeTraj(g, spec, depth, cam, fg, out, frames);
    if (*align_human) {
      return AlignHuman(g, kp2d, depth, cam, kp_hum, seq, hand_seq, g_env,
                        g_hum, out);
    }
    if (*render_traj) {
      return RenderTraj(g, cloud, traj, ref, out, frames, radius, tile, packed);
    }
    if (*plucker) return Plucker(traj, out);
    if (*eval_traj) return EvalTraj(est, gt, mode, gap, raw, report);
    if (*pipeline) {
      return Pipeline(g, config, out, bool(*seed_opt), bool(*threads_opt),
                      bool(*bucket_opt));
    }
  } catch (const wg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
