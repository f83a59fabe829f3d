#include <algorithm>
#include <cstdio>
#include <fstream>

#include "io_internal.h"
#include "json.hpp"
#include "worldguide/io.h"

namespace worldguide::io {
namespace {

using nlohmann::json;

json LoadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    internal::FormatFail(path, e.byte, e.what());
  }
}

void SaveJson(const fs::path& path, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  internal::WriteFileBytes(path, {text.begin(), text.end()});
}

// Wraps nlohmann type/key errors into FormatError naming the file.
template <typename Fn>
auto Parse(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
}

Vec3 ToVec3(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw json::type_error::create(302, "expected a 3-element array", &j);
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json FromVec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Mat3 ToMat3(const json& j) {
  if (!j.is_array() || j.size() != 9) {
    throw json::type_error::create(302, "expected 9 row-major floats", &j);
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = j[3 * r + c].get<double>();
  }
  return m;
}

json FromMat3(const Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  }
  return out;
}

// Rotations typed by hand or printed at low precision are snapped to the
// nearest rotation; anything further than 1e-6 from SO(3) is rejected.
Mat3 CheckedRotation(const fs::path& path, const Mat3& m, std::size_t frame) {
  CameraPose probe{m, Vec3::Zero()};
  try {
    probe.Validate(1e-6);
  } catch (const Error& e) {
    Fail(ErrorCode::kFormatError, path.string() + ": frame " +
                                      std::to_string(frame) + ": " + e.detail());
  }
  return ProjectToRotation(m);
}

}  // namespace

Trajectory ReadCameraJson(const fs::path& path) {
  const json doc = LoadJson(path);
  Trajectory traj = Parse(path, [&] {
    Trajectory t;
    const json& in = doc.at("intrinsics");
    t.intrinsics.fx = in.at("fx").get<double>();
    t.intrinsics.fy = in.at("fy").get<double>();
    t.intrinsics.cx = in.at("cx").get<double>();
    t.intrinsics.cy = in.at("cy").get<double>();
    t.intrinsics.width = in.at("width").get<int>();
    t.intrinsics.height = in.at("height").get<int>();
    for (const auto& frame : doc.at("frames")) {
      t.poses.push_back({ToMat3(frame.at("rotation")),
                         ToVec3(frame.at("center"))});
    }
    if (doc.contains("convention") &&
        doc.at("convention").get<std::string>() != kCameraConvention) {
      Fail(ErrorCode::kFormatError,
           path.string() + ": unsupported convention '" +
               doc.at("convention").get<std::string>() + "'");
    }
    return t;
  });
  if (traj.poses.empty()) {
    Fail(ErrorCode::kFormatError, path.string() + ": no frames");
  }
  for (std::size_t i = 0; i < traj.poses.size(); ++i) {
    traj.poses[i].rotation = CheckedRotation(path, traj.poses[i].rotation, i);
  }
  traj.intrinsics.Validate();
  return traj;
}

void WriteCameraJson(const fs::path& path, const Trajectory& trajectory) {
  const auto& k = trajectory.intrinsics;
  json doc;
  doc["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy},       {"cx", k.cx},
                       {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  json frames = json::array();
  for (const auto& pose : trajectory.poses) {
    frames.push_back({{"rotation", FromMat3(pose.rotation)},
                      {"center", FromVec3(pose.center)}});
  }
  doc["frames"] = std::move(frames);
  doc["convention"] = kCameraConvention;
  SaveJson(path, doc);
}

KeypointSet2D ReadKeypoints2D(const fs::path& path) {
  const json doc = LoadJson(path);
  return Parse(path, [&] {
    if (doc.contains("format") && doc.at("format") != "coco17") {
      Fail(ErrorCode::kFormatError, path.string() + ": format must be coco17");
    }
    const json& points = doc.at("points");
    const json& conf = doc.at("confidence");
    if (points.size() != kCocoKeypointCount ||
        conf.size() != kCocoKeypointCount) {
      Fail(ErrorCode::kFormatError,
           path.string() + ": expected 17 points and 17 confidences");
    }
    KeypointSet2D kp;
    for (int i = 0; i < kCocoKeypointCount; ++i) {
      kp.points[i] = Vec2(points[i].at(0).get<double>(),
                          points[i].at(1).get<double>());
      kp.confidence[i] = conf[i].get<double>();
    }
    return kp;
  });
}

KeypointSet3D ReadKeypoints3D(const fs::path& path) {
  const json doc = LoadJson(path);
  return Parse(path, [&] {
    const json& points = doc.at("points3d");
    if (points.size() != kCocoKeypointCount) {
      Fail(ErrorCode::kFormatError, path.string() + ": expected 17 points3d");
    }
    KeypointSet3D kp;
    kp.frame = KeypointFrame::kHumanWorld;
    for (int i = 0; i < kCocoKeypointCount; ++i) {
      kp.points[i] = ToVec3(points[i]);
      kp.weights[i] = 1.0;
    }
    if (doc.contains("weights")) {
      const json& w = doc.at("weights");
      if (w.size() != kCocoKeypointCount) {
        Fail(ErrorCode::kFormatError, path.string() + ": expected 17 weights");
      }
      for (int i = 0; i < kCocoKeypointCount; ++i) {
        kp.weights[i] = w[i].get<double>();
      }
    }
    return kp;
  });
}

std::vector<Vec3> ReadRoots(const fs::path& path) {
  const json doc = LoadJson(path);
  return Parse(path, [&] {
    std::vector<Vec3> roots;
    for (const auto& r : doc.at("roots")) roots.push_back(ToVec3(r));
    return roots;
  });
}

void WriteRoots(const fs::path& path, std::span<const Vec3> roots) {
  json arr = json::array();
  for (const auto& r : roots) arr.push_back(FromVec3(r));
  SaveJson(path, json{{"roots", arr}});
}

TrajectorySpec ReadTrajectorySpec(const fs::path& path) {
  const json doc = LoadJson(path);
  TrajectorySpec spec = Parse(path, [&] {
    TrajectorySpec s;
    s.frame_count = doc.value("frames", kDefaultFrameCount);
    for (const auto& seg : doc.at("segments")) {
      if (seg.contains("rotate")) {
        const json& r = seg.at("rotate");
        s.segments.push_back(RotationSegment{r.value("azimuth", 0.0),
                                             r.value("elevation", 0.0)});
      } else if (seg.contains("translate")) {
        const Vec3 d = ToVec3(seg.at("translate"));
        s.segments.push_back(TranslationSegment{d.x(), d.y(), d.z()});
      } else {
        Fail(ErrorCode::kInvalidSpec,
             path.string() + ": segment must be 'rotate' or 'translate'");
      }
    }
    if (doc.contains("follow") && !doc.at("follow").is_null()) {
      fs::path follow = doc.at("follow").get<std::string>();
      if (follow.is_relative()) follow = path.parent_path() / follow;
      s.follow = follow.string();
    }
    s.follow_aim = doc.value("follow_aim", false);
    return s;
  });
  spec.Validate();
  return spec;
}

std::vector<DepthCorrespondence> ReadCorrespondences(const fs::path& path) {
  const json doc = LoadJson(path);
  return Parse(path, [&] {
    std::vector<DepthCorrespondence> pairs;
    for (const auto& item : doc) {
      pairs.push_back({item.at("mono").get<double>(),
                       item.at("metric").get<double>(),
                       item.value("weight", 1.0)});
    }
    return pairs;
  });
}

void WriteTransformJson(const fs::path& path,
                        const SimilarityTransform& transform) {
  SaveJson(path, json{{"scale", transform.scale},
                      {"rotation", FromMat3(transform.rotation)},
                      {"translation", FromVec3(transform.translation)}});
}

SimilarityTransform ReadTransformJson(const fs::path& path) {
  const json doc = LoadJson(path);
  return Parse(path, [&] {
    SimilarityTransform t;
    t.scale = doc.at("scale").get<double>();
    t.rotation = ToMat3(doc.at("rotation"));
    t.translation = ToVec3(doc.at("translation"));
    return t;
  });
}

MeshSequence ReadMeshSequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    Fail(ErrorCode::kIoError, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (entry.is_regular_file() && (ext == ".ply" || ext == ".obj")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  MeshSequence out;
  for (const auto& file : files) {
    TriangleMesh mesh = ReadMesh(file);
    if (out.frame_names.empty()) out.faces = mesh.faces;
    out.sequence.frames.push_back(std::move(mesh.vertices));
    out.frame_names.push_back(file.filename().string());
  }
  const fs::path roots = dir / "roots.json";
  if (fs::exists(roots)) out.sequence.roots = ReadRoots(roots);
  out.sequence.Validate();
  return out;
}

void WriteMeshSequence(const fs::path& dir, const MeshSequence& meshes) {
  fs::create_directories(dir);
  const auto& seq = meshes.sequence;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    std::string name = f < meshes.frame_names.size()
                           ? meshes.frame_names[f]
                           : "frame_" + std::to_string(f) + ".ply";
    fs::path out = dir / name;
    out.replace_extension(".ply");
    WriteMeshPly(out, TriangleMesh{seq.frames[f], meshes.faces});
  }
  WriteRoots(dir / "roots.json", seq.roots);
}

std::string FrameStem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu", index);
  return buf;
}

fs::path WriteGuidanceIndex(const fs::path& dir, int width, int height,
                            std::span<const FrameFiles> frames) {
  json list = json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    list.push_back({{"index", i},
                    {"color", frames[i].color.filename().string()},
                    {"depth", frames[i].depth.filename().string()},
                    {"mask", frames[i].mask.filename().string()}});
  }
  const fs::path path = dir / "index.json";
  SaveJson(path, json{{"reference_frame_index", 0},
                      {"width", width},
                      {"height", height},
                      {"frames", list}});
  return path;
}

}  // namespace worldguide::io
