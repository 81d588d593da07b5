"""Calibration error metrics: Euler component and translation errors.

Rotation error is the componentwise absolute difference of canonical Euler
angles, wrapped onto the circle so near-identical rotations straddling
+/-180 degrees read as small errors. Translation error comes in two flavors:
e_t_plus compares the raw translation vectors, e_t_minus compares them
after mapping through the respective inverse rotations (the LiDAR-origin
position in each frame). Magnitudes are Euclidean norms of the component
vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RigidTransform, wrap_degrees


@dataclass(frozen=True)
class CalibrationErrors:
    e_r_vec: np.ndarray
    e_r: float
    e_t_plus_vec: np.ndarray
    e_t_plus: float
    e_t_minus_vec: np.ndarray
    e_t_minus: float

    def as_row(self) -> dict:
        """Roll/Pitch/Yaw/X/Y/Z layout used by the CLI tables."""
        return {
            "roll_deg": float(self.e_r_vec[0]),
            "pitch_deg": float(self.e_r_vec[1]),
            "yaw_deg": float(self.e_r_vec[2]),
            "x_m": float(self.e_t_plus_vec[0]),
            "y_m": float(self.e_t_plus_vec[1]),
            "z_m": float(self.e_t_plus_vec[2]),
            "e_r_deg": self.e_r,
            "e_t_plus_m": self.e_t_plus,
            "e_t_minus_m": self.e_t_minus,
        }


def compute_errors(truth: RigidTransform, estimate: RigidTransform) -> CalibrationErrors:
    """Errors of ``estimate`` against ``truth``."""
    r_true = truth.euler.as_array()
    r_est = estimate.euler.as_array()
    e_r_vec = np.abs(wrap_degrees(r_true - r_est))
    e_t_plus_vec = np.abs(truth.translation - estimate.translation)
    e_t_minus_vec = np.abs(
        truth.rotation.T @ truth.translation - estimate.rotation.T @ estimate.translation
    )
    return CalibrationErrors(
        e_r_vec=e_r_vec,
        e_r=float(np.linalg.norm(e_r_vec)),
        e_t_plus_vec=e_t_plus_vec,
        e_t_plus=float(np.linalg.norm(e_t_plus_vec)),
        e_t_minus_vec=e_t_minus_vec,
        e_t_minus=float(np.linalg.norm(e_t_minus_vec)),
    )
