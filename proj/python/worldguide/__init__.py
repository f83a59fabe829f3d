"""Camera geometry, guidance rendering and alignment for world-guided video."""

from ._core import (
    DEFAULT_FRAME_COUNT,
    RESOLUTION_BUCKETS,
    CameraIntrinsics,
    CameraPose,
    SimilarityTransform,
    WorldGuideError,
    build_trajectory,
    estimate_scale_shift,
    gravity_calibrate,
    pick_resolution_bucket,
    plucker,
    project,
    render,
    rotation_center,
    run_pipeline,
    trajectory_errors,
    umeyama,
    unproject,
)

__all__ = [
    "DEFAULT_FRAME_COUNT",
    "RESOLUTION_BUCKETS",
    "CameraIntrinsics",
    "CameraPose",
    "SimilarityTransform",
    "WorldGuideError",
    "build_trajectory",
    "estimate_scale_shift",
    "gravity_calibrate",
    "pick_resolution_bucket",
    "plucker",
    "project",
    "render",
    "rotation_center",
    "run_pipeline",
    "trajectory_errors",
    "umeyama",
    "unproject",
]
