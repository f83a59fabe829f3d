#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <string>
#include <vector>

#include "worldguide/camera.h"
#include "worldguide/depth_metric.h"
#include "worldguide/error.h"
#include "worldguide/eval_metrics.h"
#include "worldguide/pipeline.h"
#include "worldguide/raster.h"
#include "worldguide/traj_gen.h"
#include "worldguide/world_align.h"

namespace py = pybind11;
using namespace worldguide;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

void RequireShape(const py::array& a, std::vector<py::ssize_t> shape,
                  const char* name) {
  bool ok = a.ndim() == py::ssize_t(shape.size());
  for (std::size_t i = 0; ok && i < shape.size(); ++i) {
    ok = shape[i] < 0 || a.shape(i) == shape[i];
  }
  if (!ok) {
    Fail(ErrorCode::kDimensionMismatch,
         std::string(name) + " has the wrong shape");
  }
}

std::vector<Vec3> ToPoints(const Array<double>& a, const char* name) {
  RequireShape(a, {-1, 3}, name);
  std::vector<Vec3> out(a.shape(0));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = Vec3(r(i, 0), r(i, 1), r(i, 2));
  return out;
}

Array<double> FromPoints(const std::vector<Vec3>& pts) {
  Array<double> out({py::ssize_t(pts.size()), py::ssize_t(3)});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int k = 0; k < 3; ++k) w(i, k) = pts[i][k];
  }
  return out;
}

// Non-finite or non-positive entries are invalid.
DepthMap ToDepth(const Array<double>& a) {
  RequireShape(a, {-1, -1}, "depth");
  DepthMap d(int(a.shape(1)), int(a.shape(0)));
  auto r = a.unchecked<2>();
  for (int v = 0; v < d.height; ++v) {
    for (int u = 0; u < d.width; ++u) d.Set(u, v, r(v, u));
  }
  return d;
}

Image ToImage(const Array<float>& a) {
  RequireShape(a, {-1, -1, 3}, "image");
  Image img(int(a.shape(1)), int(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.rgb.begin());
  return img;
}

Array<float> FromImage(const Image& img) {
  Array<float> out({py::ssize_t(img.height), py::ssize_t(img.width), py::ssize_t(3)});
  std::copy(img.rgb.begin(), img.rgb.end(), out.mutable_data());
  return out;
}

PointCloud ToCloud(const Array<double>& points, const Array<float>& colors) {
  PointCloud cloud;
  cloud.positions = ToPoints(points, "points");
  RequireShape(colors, {py::ssize_t(cloud.size()), 3}, "colors");
  auto c = colors.unchecked<2>();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cloud.colors.emplace_back(c(i, 0), c(i, 1), c(i, 2));
  }
  return cloud;
}

py::tuple FromFrame(const RenderFrame& f) {
  Array<double> depth({py::ssize_t(f.height), py::ssize_t(f.width)});
  std::copy(f.depth.begin(), f.depth.end(), depth.mutable_data());
  py::array_t<bool> mask({py::ssize_t(f.height), py::ssize_t(f.width)});
  std::copy(f.mask.begin(), f.mask.end(), mask.mutable_data());
  return py::make_tuple(FromImage(f.color), depth, mask);
}

Trajectory ToTrajectory(const std::vector<CameraPose>& poses,
                        const CameraIntrinsics& intr) {
  Trajectory t;
  t.intrinsics = intr;
  t.poses = poses;
  return t;
}

std::vector<TrajectorySegment> ToSegments(const py::list& segments) {
  std::vector<TrajectorySegment> out;
  for (const auto& item : segments) {
    const auto d = item.cast<py::dict>();
    const auto type = d["type"].cast<std::string>();
    auto get = [&](const char* key) {
      return d.contains(key) ? d[key].cast<double>() : 0.0;
    };
    if (type == "rotate") {
      out.push_back(RotationSegment{get("azimuth_deg"), get("elevation_deg")});
    } else if (type == "translate") {
      out.push_back(TranslationSegment{get("dx"), get("dy"), get("dz")});
    } else {
      Fail(ErrorCode::kInvalidSpec, "unknown segment type '" + type + "'");
    }
  }
  return out;
}

py::dict ReportDict(const PipelineReport& r) {
  py::list artifacts;
  for (const auto& a : r.artifacts) {
    artifacts.append(py::dict(py::arg("kind") = a.kind, py::arg("path") = a.path,
                              py::arg("sha256") = a.sha256));
  }
  return py::dict(py::arg("exit_code") = r.exit_code,
                  py::arg("failed_stage") = r.failed_stage,
                  py::arg("error_code") = r.error_code,
                  py::arg("error_message") = r.error_message,
                  py::arg("artifacts") = artifacts,
                  py::arg("manifest_path") = r.manifest_path.string(),
                  py::arg("manifest_sha256") = r.manifest_sha256);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Camera geometry, guidance rendering and alignment for world-guided video";

  static py::handle error_type =
      py::exception<Error>(m, "WorldGuideError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = error_type(e.what());
      inst.attr("code") = std::string(ErrorCodeName(e.code()));
      inst.attr("detail") = e.detail();
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width,
                       int height) {
             CameraIntrinsics k{fx, fy, cx, cy, width, height};
             k.Validate();
             return k;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"),
           py::arg("width"), py::arg("height"))
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height)
      .def("K", &CameraIntrinsics::K)
      .def("__repr__", [](const CameraIntrinsics& k) {
        return "CameraIntrinsics(fx=" + std::to_string(k.fx) +
               ", fy=" + std::to_string(k.fy) + ", cx=" + std::to_string(k.cx) +
               ", cy=" + std::to_string(k.cy) + ", width=" +
               std::to_string(k.width) + ", height=" + std::to_string(k.height) + ")";
      });

  py::class_<CameraPose>(m, "CameraPose")
      .def(py::init([](const Mat3& rotation, const Vec3& center) {
             CameraPose p{rotation, center};
             p.Validate();
             return p;
           }),
           py::arg("rotation") = Mat3::Identity(), py::arg("center") = Vec3::Zero())
      .def_readwrite("rotation", &CameraPose::rotation)
      .def_readwrite("center", &CameraPose::center)
      .def("optical_axis", &CameraPose::OpticalAxis);

  py::class_<SimilarityTransform>(m, "SimilarityTransform")
      .def(py::init([](double scale, const Mat3& rotation, const Vec3& translation) {
             return SimilarityTransform{scale, rotation, translation};
           }),
           py::arg("scale") = 1.0, py::arg("rotation") = Mat3::Identity(),
           py::arg("translation") = Vec3::Zero())
      .def_readwrite("scale", &SimilarityTransform::scale)
      .def_readwrite("rotation", &SimilarityTransform::rotation)
      .def_readwrite("translation", &SimilarityTransform::translation)
      .def("inverse", &SimilarityTransform::Inverse)
      .def("__call__", [](const SimilarityTransform& t, const Array<double>& pts) {
        auto v = ToPoints(pts, "points");
        for (auto& p : v) p = t(p);
        return FromPoints(v);
      });

  m.def(
      "unproject",
      [](const Array<double>& depth, const CameraIntrinsics& intr,
         const CameraPose& pose, std::optional<Array<float>> colors) {
        const DepthMap d = ToDepth(depth);
        const Image img = colors ? ToImage(*colors) : Image(d.width, d.height);
        const PointCloud cloud = Unproject(d, intr, pose, img);
        Array<float> rgb({py::ssize_t(cloud.size()), py::ssize_t(3)});
        Array<int> pixels({py::ssize_t(cloud.size()), py::ssize_t(2)});
        auto c = rgb.mutable_unchecked<2>();
        auto px = pixels.mutable_unchecked<2>();
        for (std::size_t i = 0; i < cloud.size(); ++i) {
          for (int k = 0; k < 3; ++k) c(i, k) = cloud.colors[i][k];
          px(i, 0) = cloud.source_pixel[i][0];
          px(i, 1) = cloud.source_pixel[i][1];
        }
        return py::make_tuple(FromPoints(cloud.positions), rgb, pixels);
      },
      py::arg("depth"), py::arg("intrinsics"), py::arg("pose"),
      py::arg("colors") = py::none(),
      "Returns (points Nx3, colors Nx3, source pixels Nx2 as (u, v)).");

  m.def(
      "project",
      [](const Array<double>& points, const CameraIntrinsics& intr,
         const CameraPose& pose) {
        const auto pts = ToPoints(points, "points");
        const auto proj = Project(pts, intr, pose);
        Array<double> pixels({py::ssize_t(pts.size()), py::ssize_t(2)});
        Array<double> depth(py::ssize_t(pts.size()));
        py::array_t<bool> visible(py::ssize_t(pts.size()));
        auto px = pixels.mutable_unchecked<2>();
        for (std::size_t i = 0; i < proj.size(); ++i) {
          px(i, 0) = proj[i].pixel.x();
          px(i, 1) = proj[i].pixel.y();
          depth.mutable_data()[i] = proj[i].depth;
          visible.mutable_data()[i] = proj[i].visible;
        }
        return py::make_tuple(pixels, depth, visible);
      },
      py::arg("points"), py::arg("intrinsics"), py::arg("pose"));

  m.def(
      "plucker",
      [](const CameraIntrinsics& intr, const CameraPose& pose) {
        const PluckerMap map = ComputePluckerMap(intr, pose);
        Array<double> out({py::ssize_t(6), py::ssize_t(map.height), py::ssize_t(map.width)});
        std::copy(map.channels.begin(), map.channels.end(), out.mutable_data());
        return out;
      },
      py::arg("intrinsics"), py::arg("pose"),
      "6 x H x W world-frame ray map: direction then moment.");

  m.def(
      "estimate_scale_shift",
      [](const Array<double>& mono, const Array<double>& metric,
         std::optional<Array<double>> weights, int iterations,
         double inlier_threshold_rel, double min_inlier_ratio, std::uint64_t seed) {
        RequireShape(mono, {-1}, "mono");
        RequireShape(metric, {mono.shape(0)}, "metric");
        if (weights) RequireShape(*weights, {mono.shape(0)}, "weights");
        std::vector<DepthCorrespondence> pairs(mono.shape(0));
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          pairs[i] = {mono.at(i), metric.at(i), weights ? weights->at(i) : 1.0};
        }
        RansacConfig cfg;
        cfg.iterations = iterations;
        cfg.inlier_threshold_rel = inlier_threshold_rel;
        cfg.min_inlier_ratio = min_inlier_ratio;
        cfg.seed = seed;
        const ScaleShift ss = EstimateScaleShift(pairs, cfg);
        return py::make_tuple(ss.scale, ss.shift, ss.inlier_ratio);
      },
      py::arg("mono"), py::arg("metric"), py::arg("weights") = py::none(),
      py::arg("iterations") = 1000, py::arg("inlier_threshold_rel") = 0.05,
      py::arg("min_inlier_ratio") = 0.3, py::arg("seed") = 0,
      "Returns (scale, shift, inlier_ratio).");

  m.def(
      "umeyama",
      [](const Array<double>& src, const Array<double>& dst,
         std::optional<Array<double>> weights, bool estimate_scale) {
        const auto s = ToPoints(src, "src");
        const auto d = ToPoints(dst, "dst");
        std::vector<double> w(s.size(), 1.0);
        if (weights) {
          RequireShape(*weights, {py::ssize_t(s.size())}, "weights");
          w.assign(weights->data(), weights->data() + s.size());
        }
        UmeyamaOptions opts;
        opts.estimate_scale = estimate_scale;
        return WeightedUmeyama(s, d, w, opts);
      },
      py::arg("src"), py::arg("dst"), py::arg("weights") = py::none(),
      py::arg("estimate_scale") = true);

  m.def("gravity_calibrate", &GravityCalibrate, py::arg("transform"),
        py::arg("g_env"), py::arg("g_hum"), py::arg("pivot"));

  m.def(
      "render",
      [](const Array<double>& points, const Array<float>& colors,
         const CameraIntrinsics& intr, const CameraPose& pose, int splat_radius_px,
         int tile_size, int threads) {
        RasterConfig cfg;
        cfg.splat_radius_px = splat_radius_px;
        cfg.tile_size = tile_size;
        cfg.threads = threads;
        const PointCloud cloud = ToCloud(points, colors);
        RenderFrame frame;
        {
          py::gil_scoped_release release;
          frame = RenderFrameFromCloud(cloud, intr, pose, cfg);
        }
        return FromFrame(frame);
      },
      py::arg("points"), py::arg("colors"), py::arg("intrinsics"), py::arg("pose"),
      py::arg("splat_radius_px") = 1, py::arg("tile_size") = 64, py::arg("threads") = 0,
      "Returns (color HxWx3, depth HxW, mask HxW).");

  m.def(
      "rotation_center",
      [](const Array<double>& depth, const CameraIntrinsics& intr,
         const CameraPose& pose, std::optional<py::array_t<bool>> foreground) {
        const DepthMap d = ToDepth(depth);
        std::vector<std::uint8_t> fg;
        if (foreground) {
          RequireShape(*foreground, {d.height, d.width}, "foreground");
          fg.assign(foreground->data(), foreground->data() + foreground->size());
        }
        const RotationCenter rc =
            ComputeRotationCenter(d, intr, pose, foreground ? &fg : nullptr);
        return py::make_tuple(rc.radius, rc.center);
      },
      py::arg("depth"), py::arg("intrinsics"), py::arg("pose"),
      py::arg("foreground") = py::none(), "Returns (radius, center).");

  m.def(
      "build_trajectory",
      [](const py::list& segments, const CameraPose& start, double radius,
         const Vec3& center, const CameraIntrinsics& intr, int frame_count) {
        TrajectorySpec spec;
        spec.frame_count = frame_count;
        spec.segments = ToSegments(segments);
        return BuildTrajectory(spec, start, RotationCenter{radius, center}, intr).poses;
      },
      py::arg("segments"), py::arg("start"), py::arg("radius"), py::arg("center"),
      py::arg("intrinsics"), py::arg("frame_count") = kDefaultFrameCount,
      "Segments are dicts: {'type': 'rotate', 'azimuth_deg', 'elevation_deg'} or "
      "{'type': 'translate', 'dx', 'dy', 'dz'}.");

  m.def(
      "trajectory_errors",
      [](const std::vector<CameraPose>& est, const std::vector<CameraPose>& gt,
         const std::string& mode, int gap, bool normalize_by_span) {
        EvalOptions opts;
        opts.mode = ParseAlignmentMode(mode);
        opts.gap = gap;
        opts.normalize_by_span = normalize_by_span;
        const CameraIntrinsics unused;
        const TrajectoryErrors e = ComputeTrajectoryErrors(
            ToTrajectory(est, unused), ToTrajectory(gt, unused), opts);
        return py::dict(py::arg("ate") = e.ate, py::arg("rpe") = e.rpe,
                        py::arg("rre_deg") = e.rre_deg);
      },
      py::arg("est"), py::arg("gt"), py::arg("mode") = "sim3", py::arg("gap") = 1,
      py::arg("normalize_by_span") = true);

  m.def(
      "pick_resolution_bucket",
      [](int width, int height) {
        const ResolutionBucket b = PickResolutionBucket(width, height);
        return py::make_tuple(b.width, b.height);
      },
      py::arg("width"), py::arg("height"), "Returns (width, height).");

  py::list buckets;
  for (const auto& b : kResolutionBuckets) buckets.append(py::make_tuple(b.width, b.height));
  m.attr("RESOLUTION_BUCKETS") = buckets;
  m.attr("DEFAULT_FRAME_COUNT") = kDefaultFrameCount;

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
         std::optional<int> threads, std::optional<std::string> bucket) {
        PipelineConfig cfg = ReadPipelineConfig(config_path);
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (bucket) cfg.bucket = BucketOption::Parse(*bucket);
        PipelineReport report;
        {
          py::gil_scoped_release release;
          report = RunPipeline(cfg);
        }
        return ReportDict(report);
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = py::none(),
      py::arg("bucket") = py::none());
}
