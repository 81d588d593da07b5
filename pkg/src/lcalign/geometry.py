"""Rigid-transform and pinhole-projection primitives.

Conventions used throughout the package:

* Euler angles are in degrees. ``roll``, ``pitch``, ``yaw`` rotate about the
  fixed x, y, z axes, composed as ``R = Rx(roll) @ Ry(pitch) @ Rz(yaw)``
  (yaw applied first). Under this convention the common LiDAR(FLU) to
  camera(RDF) mounting is (roll=90, pitch=0, yaw=90), far from the
  pitch = +/-90 singularity.
* A transform maps LiDAR-frame points into the camera frame:
  ``p_cam = R @ p_lidar + t``.
* The camera looks along +z; pixel u grows with x, pixel v grows with y.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BadInputError

# Near-plane cull distance in meters. Points closer than this (or behind the
# camera) never rasterize; keeps inverse depth bounded.
Z_MIN = 0.1

# |sin(pitch)| above this is treated as gimbal lock (pitch = +/-90 exactly,
# up to float noise); roll is then fixed to 0 by convention.
_GIMBAL_EPS = 1e-12


def wrap_degrees(angle):
    """Wrap angle(s) in degrees into (-180, 180]."""
    wrapped = np.remainder(np.asarray(angle, dtype=float), 360.0)
    wrapped = np.where(wrapped > 180.0, wrapped - 360.0, wrapped)
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class EulerAngles:
    """Rotation as roll/pitch/yaw in degrees (see module docstring)."""

    roll: float
    pitch: float
    yaw: float

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw], dtype=float)


def _rot_x(deg: float) -> np.ndarray:
    c, s = np.cos(np.deg2rad(deg)), np.sin(np.deg2rad(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(deg: float) -> np.ndarray:
    c, s = np.cos(np.deg2rad(deg)), np.sin(np.deg2rad(deg))
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(deg: float) -> np.ndarray:
    c, s = np.cos(np.deg2rad(deg)), np.sin(np.deg2rad(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_matrix(angles) -> np.ndarray:
    """Rotation matrix for roll/pitch/yaw degrees.

    ``angles`` is an EulerAngles or any 3-sequence (roll, pitch, yaw).
    """
    if isinstance(angles, EulerAngles):
        roll, pitch, yaw = angles.roll, angles.pitch, angles.yaw
    else:
        roll, pitch, yaw = (float(a) for a in angles)
    return _rot_x(roll) @ _rot_y(pitch) @ _rot_z(yaw)


def matrix_to_euler(rotation: np.ndarray) -> EulerAngles:
    """Extract canonical roll/pitch/yaw degrees from a rotation matrix.

    Canonical ranges: roll, yaw in (-180, 180], pitch in [-90, 90]. At
    gimbal lock (|pitch| = 90) the decomposition is not unique; roll is set
    to 0 and yaw absorbs the free angle, deterministically. The returned
    angles always reproduce ``rotation`` through euler_to_matrix.
    """
    r = np.asarray(rotation, dtype=float)
    s_pitch = np.clip(r[0, 2], -1.0, 1.0)
    if abs(s_pitch) >= 1.0 - _GIMBAL_EPS:
        pitch = np.copysign(90.0, s_pitch)
        roll = 0.0
        yaw = np.rad2deg(np.arctan2(r[1, 0], r[1, 1]))
    else:
        pitch = np.rad2deg(np.arcsin(s_pitch))
        roll = np.rad2deg(np.arctan2(-r[1, 2], r[2, 2]))
        yaw = np.rad2deg(np.arctan2(-r[0, 1], r[0, 0]))
    return EulerAngles(wrap_degrees(roll), float(pitch), wrap_degrees(yaw))


def assert_rotation(matrix: np.ndarray, tol: float = 1e-6) -> None:
    """Raise BadInputError unless ``matrix`` is a proper rotation."""
    r = np.asarray(matrix, dtype=float)
    if r.shape != (3, 3):
        raise BadInputError(f"rotation must be 3x3, got shape {r.shape}")
    if not np.allclose(r.T @ r, np.eye(3), atol=tol):
        raise BadInputError("matrix is not orthonormal")
    if np.linalg.det(r) < 0.0:
        raise BadInputError("matrix is a reflection, not a rotation")


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) pose: 3x3 rotation plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_euler_translation(cls, angles, translation) -> "RigidTransform":
        return cls(euler_to_matrix(angles), np.asarray(translation, dtype=float))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "RigidTransform":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (4, 4):
            raise BadInputError(f"homogeneous transform must be 4x4, got {m.shape}")
        assert_rotation(m[:3, :3])
        return cls(m[:3, :3], m[:3, 3])

    @property
    def euler(self) -> EulerAngles:
        return matrix_to_euler(self.rotation)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: ``result.apply(p) == self.apply(other.apply(p))``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (N, 3) or (3,) points."""
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            return self.rotation @ p + self.translation
        return p @ self.rotation.T + self.translation


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole matrix parameters plus image size in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise BadInputError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise BadInputError("image dimensions must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class PointCloud:
    """LiDAR points: xyz in meters, per-point intensity in [0, 1]."""

    xyz: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        xyz = np.ascontiguousarray(np.asarray(self.xyz, dtype=float).reshape(-1, 3))
        intensity = np.asarray(self.intensity, dtype=float).reshape(-1)
        if xyz.shape[0] != intensity.shape[0]:
            raise BadInputError("xyz and intensity row counts differ")
        if not np.all(np.isfinite(xyz)) or not np.all(np.isfinite(intensity)):
            raise BadInputError("point cloud contains non-finite values")
        if intensity.size and (intensity.min() < 0.0 or intensity.max() > 1.0):
            raise BadInputError("intensity outside [0, 1]; normalize at load time")
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "intensity", intensity)

    @classmethod
    def from_array(cls, points: np.ndarray) -> "PointCloud":
        """Build from an (N, 4) array of x, y, z, intensity rows."""
        p = np.asarray(points, dtype=float).reshape(-1, 4)
        return cls(p[:, :3], p[:, 3])

    def __len__(self) -> int:
        return self.xyz.shape[0]


class ProjectedPoints(NamedTuple):
    """Points surviving projection: continuous pixel coords, 1/depth, intensity."""

    u: np.ndarray
    v: np.ndarray
    inv_depth: np.ndarray
    intensity: np.ndarray

    def __len__(self) -> int:
        return self.u.shape[0]


def project_points(
    cloud: PointCloud, transform: RigidTransform, intrinsics: CameraIntrinsics
) -> ProjectedPoints:
    """Project a cloud through ``p_cam = R p + t`` and the pinhole model.

    Emits only points in front of the near plane whose rounded pixel lands
    inside the image. u, v stay continuous; rasterization rounds them.
    """
    cam = cloud.xyz @ transform.rotation.T + transform.translation
    z = cam[:, 2]
    front = z > Z_MIN
    cam = cam[front]
    inv_z = 1.0 / z[front]
    u = intrinsics.fx * cam[:, 0] * inv_z + intrinsics.cx
    v = intrinsics.fy * cam[:, 1] * inv_z + intrinsics.cy
    ui = np.rint(u)
    vi = np.rint(v)
    inside = (ui >= 0) & (ui < intrinsics.width) & (vi >= 0) & (vi < intrinsics.height)
    return ProjectedPoints(
        u[inside], v[inside], inv_z[inside], cloud.intensity[front][inside]
    )
