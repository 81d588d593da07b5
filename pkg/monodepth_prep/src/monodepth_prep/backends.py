"""Relative-depth backends.

A backend is any callable mapping an (H, W, 3) uint8 image to a float
relative inverse-depth array of the same height/width (larger = nearer;
scale and shift are arbitrary, the writer normalizes per image).

``depth-anything-v2-*`` identifiers load the corresponding pretrained
model through transformers; they need torch plus downloaded weights. The
``luma`` backend is a dependency-free stand-in (smoothed inverse
brightness) that exercises the full file pipeline when no model is
available; it is not a depth estimator.
"""

from __future__ import annotations

import numpy as np

HF_MODEL_IDS = {
    "depth-anything-v2-small": "depth-anything/Depth-Anything-V2-Small-hf",
    "depth-anything-v2-base": "depth-anything/Depth-Anything-V2-Base-hf",
    "depth-anything-v2-large": "depth-anything/Depth-Anything-V2-Large-hf",
}

DEFAULT_MODEL = "depth-anything-v2-large"


def _box_blur(values: np.ndarray, radius: int = 4) -> np.ndarray:
    # normalize by the in-bounds kernel mass so edges are unbiased and a
    # constant image stays exactly constant
    kernel = np.ones(2 * radius + 1)

    def smooth(axis_vals):
        mass = np.convolve(np.ones_like(axis_vals), kernel, mode="same")
        return np.convolve(axis_vals, kernel, mode="same") / mass

    out = np.apply_along_axis(smooth, 1, values)
    return np.apply_along_axis(smooth, 0, out)


def luma_proxy(image: np.ndarray) -> np.ndarray:
    """Pipeline stand-in: smoothed inverted brightness as pseudo inverse depth."""
    img = np.asarray(image, dtype=float)
    luma = img @ [0.299, 0.587, 0.114] if img.ndim == 3 else img
    return _box_blur(255.0 - luma)


class TransformersBackend:
    """Depth Anything V2 via the transformers depth-estimation pipeline."""

    def __init__(self, model_key: str, device: str):
        try:
            from transformers import pipeline
        except ImportError as e:
            raise RuntimeError(
                f"backend '{model_key}' needs the 'model' extra (torch + transformers): {e}"
            ) from e
        self._pipe = pipeline(
            task="depth-estimation",
            model=HF_MODEL_IDS[model_key],
            device=device,
        )

    def __call__(self, image: np.ndarray) -> np.ndarray:
        from PIL import Image

        result = self._pipe(Image.fromarray(image))
        depth = np.asarray(result["predicted_depth"], dtype=float)
        if depth.ndim == 3:
            depth = depth[0]
        if depth.shape != image.shape[:2]:
            pil = Image.fromarray(depth.astype(np.float32), mode="F")
            pil = pil.resize((image.shape[1], image.shape[0]), Image.BILINEAR)
            depth = np.asarray(pil, dtype=float)
        return depth


def resolve_backend(model: str, device: str = "cpu"):
    """Map a model identifier to a backend callable."""
    if model == "luma":
        return luma_proxy
    if model in HF_MODEL_IDS:
        return TransformersBackend(model, device)
    raise ValueError(
        f"unknown model '{model}'; choose from {sorted(HF_MODEL_IDS)} or 'luma'"
    )
