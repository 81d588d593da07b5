"""Batch preprocessing: images in, 16-bit inverse-depth files out.

Each output is a single-channel 16-bit PNG named after its input, holding
the model's relative inverse depth min-max normalized to the full 16-bit
range per image (downstream structure losses are invariant to positive
affine rescaling, so normalization only standardizes storage). Dimensions
always match the input image. Per-image failures are collected in the
summary without aborting the batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .backends import DEFAULT_MODEL, resolve_backend


@dataclass(frozen=True)
class PrepJob:
    inputs: tuple
    output_dir: Path
    model: str = DEFAULT_MODEL
    device: str = "cpu"


@dataclass
class PrepSummary:
    written: list = field(default_factory=list)  # (input, output, lo, hi)
    failed: list = field(default_factory=list)  # (input, reason)

    def __str__(self) -> str:
        lines = [f"{len(self.written)} written, {len(self.failed)} failed"]
        for src, dst, lo, hi in self.written:
            lines.append(f"  {src} -> {dst} raw range [{lo:.6g}, {hi:.6g}]")
        for src, reason in self.failed:
            lines.append(f"  {src} FAILED: {reason}")
        return "\n".join(lines)


def normalize_to_u16(depth: np.ndarray) -> np.ndarray:
    """Min-max normalize to the full 16-bit range; constant input maps to 0.

    The constancy guard is relative, so float-rounding dust on a flat
    prediction does not get stretched into full-range noise.
    """
    depth = np.asarray(depth, dtype=float)
    lo = depth.min()
    hi = depth.max()
    span = hi - lo
    if span <= 1e-9 * max(1.0, abs(lo), abs(hi)):
        return np.zeros(depth.shape, dtype=np.uint16)
    return np.rint((depth - lo) / span * 65535.0).astype(np.uint16)


def save_depth16(path: Path, depth: np.ndarray) -> None:
    Image.fromarray(normalize_to_u16(depth)).save(path)


def prep(job: PrepJob) -> PrepSummary:
    """Run the model over every input; returns which files were written."""
    backend = resolve_backend(job.model, job.device)
    out_dir = Path(job.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = PrepSummary()
    for src in job.inputs:
        src = Path(src)
        try:
            image = np.asarray(Image.open(src).convert("RGB"))
            depth = np.asarray(backend(image), dtype=float)
            if depth.shape != image.shape[:2]:
                raise ValueError(
                    f"backend returned {depth.shape}, image is {image.shape[:2]}"
                )
            dst = out_dir / (src.stem + ".png")
            save_depth16(dst, depth)
            summary.written.append((str(src), str(dst), float(depth.min()), float(depth.max())))
        except Exception as e:  # keep the batch going
            summary.failed.append((str(src), str(e)))
    return summary
