"""Camera-LiDAR extrinsic calibration by aligning monodepth structure and
intensity texture through a derivative-free coarse-to-fine search."""

from .errors import (
    BadInputError,
    CalibrationError,
    DegenerateSceneError,
    DimensionMismatchError,
)
from .geometry import (
    CameraIntrinsics,
    EulerAngles,
    PointCloud,
    ProjectedPoints,
    RigidTransform,
    euler_to_matrix,
    matrix_to_euler,
    project_points,
    wrap_degrees,
)
from .metrics import CalibrationErrors, compute_errors
from .objective import (
    FrameBreakdown,
    FramePacket,
    ObjectiveConfig,
    ObjectiveEvaluator,
    evaluate,
)
from .raster import (
    DenseImage,
    SparseRaster,
    equalize_intensity,
    load_monodepth,
    rasterize,
    save_monodepth,
    to_grayscale_equalized,
)
from .search import (
    SearchConfig,
    SearchTrace,
    StageTrace,
    calibrate,
    grid_search_rotation,
    random_search_stage,
)
from .structure import PatchGridSpec, spcc, structure_loss
from .synthetic import SyntheticScene, SyntheticSceneSpec, generate_synthetic_scene
from .texture import JointHistogram, build_joint_histogram, nid

__version__ = "0.1.0"

__all__ = [
    "BadInputError",
    "CalibrationError",
    "CalibrationErrors",
    "CameraIntrinsics",
    "DegenerateSceneError",
    "DenseImage",
    "DimensionMismatchError",
    "EulerAngles",
    "FrameBreakdown",
    "FramePacket",
    "JointHistogram",
    "ObjectiveConfig",
    "ObjectiveEvaluator",
    "PatchGridSpec",
    "PointCloud",
    "ProjectedPoints",
    "RigidTransform",
    "SearchConfig",
    "SearchTrace",
    "SparseRaster",
    "StageTrace",
    "SyntheticScene",
    "SyntheticSceneSpec",
    "build_joint_histogram",
    "calibrate",
    "compute_errors",
    "equalize_intensity",
    "euler_to_matrix",
    "evaluate",
    "generate_synthetic_scene",
    "grid_search_rotation",
    "load_monodepth",
    "matrix_to_euler",
    "nid",
    "project_points",
    "random_search_stage",
    "rasterize",
    "save_monodepth",
    "spcc",
    "structure_loss",
    "to_grayscale_equalized",
    "wrap_degrees",
]
