"""Offline monodepth preprocessing for camera-LiDAR calibration inputs."""

from .backends import DEFAULT_MODEL, resolve_backend
from .prep import PrepJob, PrepSummary, normalize_to_u16, prep, save_depth16

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "PrepJob",
    "PrepSummary",
    "normalize_to_u16",
    "prep",
    "resolve_backend",
    "save_depth16",
]
