"""Structured run reports: everything a calibration run produced.

Reports serialize to JSON (human-readable, machine-parseable, schema
versioned). All numeric fields round-trip losslessly through ``repr``-exact
floats; the only fields that vary between identical runs are the wall-clock
entries under ``timing_s`` and the ``created`` timestamp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import BadInputError
from .geometry import RigidTransform
from .metrics import CalibrationErrors

REPORT_SCHEMA_VERSION = 1

# Fields expected to differ between byte-identical reruns.
VOLATILE_FIELDS = ("timing_s", "created")


def transform_to_dict(t: RigidTransform) -> dict:
    e = t.euler
    return {
        "euler_deg": [e.roll, e.pitch, e.yaw],
        "translation_m": [float(v) for v in t.translation],
        "matrix_4x4": [[float(v) for v in row] for row in t.as_matrix()],
    }


def transform_from_dict(d: dict) -> RigidTransform:
    if "matrix_4x4" in d:
        return RigidTransform.from_matrix(np.asarray(d["matrix_4x4"], dtype=float))
    return RigidTransform.from_euler_translation(d["euler_deg"], d["translation_m"])


def errors_to_dict(e: CalibrationErrors) -> dict:
    return {
        "e_r_vec_deg": [float(v) for v in e.e_r_vec],
        "e_r_deg": e.e_r,
        "e_t_plus_vec_m": [float(v) for v in e.e_t_plus_vec],
        "e_t_plus_m": e.e_t_plus,
        "e_t_minus_vec_m": [float(v) for v in e.e_t_minus_vec],
        "e_t_minus_m": e.e_t_minus,
    }


@dataclass
class RunReport:
    """Calibration run record; see the README for the field glossary."""

    command: str
    seed: int
    frames: list
    config: dict
    initial: dict
    result: dict
    stages: list
    per_frame: list
    timing_s: dict = field(default_factory=dict)
    created: str = ""
    schema_version: int = REPORT_SCHEMA_VERSION

    def result_transform(self) -> RigidTransform:
        return transform_from_dict(self.result)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "seed": self.seed,
            "frames": self.frames,
            "config": self.config,
            "initial": self.initial,
            "result": self.result,
            "stages": self.stages,
            "per_frame": self.per_frame,
            "timing_s": self.timing_s,
            "created": self.created,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        if data.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise BadInputError(
                f"unsupported report schema version {data.get('schema_version')!r}"
            )
        return cls(
            command=data["command"],
            seed=data["seed"],
            frames=data["frames"],
            config=data["config"],
            initial=data["initial"],
            result=data["result"],
            stages=data["stages"],
            per_frame=data["per_frame"],
            timing_s=data.get("timing_s", {}),
            created=data.get("created", ""),
            schema_version=data["schema_version"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "RunReport":
        path = Path(path)
        if not path.exists():
            raise BadInputError(f"report not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as e:
            raise BadInputError(f"{path}: not valid JSON ({e})") from e


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()
