"""Sliding-window full-volume inference with Gaussian importance weighting."""

from __future__ import annotations

import numpy as np

from ..promptsim import GuidanceConfig, encode_guidance
from ..volgrid import BinaryMask, ImageVolume


def gaussian_importance(patch_size) -> np.ndarray:
    """Separable Gaussian window, sigma = patch/8, peak 1 at the center."""
    out = np.ones(tuple(patch_size), dtype=np.float64)
    for axis, n in enumerate(patch_size):
        x = np.arange(n, dtype=np.float64)
        center = (n - 1) / 2
        sigma = n / 8.0
        w = np.exp(-0.5 * ((x - center) / sigma) ** 2)
        w = np.maximum(w, 1e-6)
        shape = [1, 1, 1]
        shape[axis] = n
        out = out * w.reshape(shape)
    return out


def _tile_starts(size: int, patch: int) -> list[int]:
    """Start offsets covering [0, size) with 50% overlap."""
    if size <= patch:
        return [0]
    step = patch // 2
    starts = list(range(0, size - patch, step))
    starts.append(size - patch)
    return sorted(set(starts))


def sliding_window_probs(predict_logits, stack: np.ndarray,
                         patch_size) -> np.ndarray:
    """Weighted average of per-tile sigmoid outputs over the full stack.

    predict_logits maps a (C, pz, py, px) array to (pz, py, px) logits.
    """
    spatial = stack.shape[1:]
    patch = tuple(min(p, s) for p, s in zip(patch_size, spatial))
    weight = gaussian_importance(patch)
    acc = np.zeros(spatial, dtype=np.float64)
    norm = np.zeros(spatial, dtype=np.float64)
    for z0 in _tile_starts(spatial[0], patch[0]):
        for y0 in _tile_starts(spatial[1], patch[1]):
            for x0 in _tile_starts(spatial[2], patch[2]):
                sl = (slice(z0, z0 + patch[0]), slice(y0, y0 + patch[1]),
                      slice(x0, x0 + patch[2]))
                logits = predict_logits(stack[(slice(None),) + sl])
                probs = 1.0 / (1.0 + np.exp(-logits.astype(np.float64)))
                acc[sl] += probs * weight
                norm[sl] += weight
    return acc / norm


def _guidance_roi(stack: np.ndarray, patch_size) -> tuple[slice, slice, slice] | None:
    """Window of at least patch_size centered on the guidance stamps.

    The network is trained on patches where the interaction sits near the
    middle, so inference re-creates that frame: crop around the prompts at
    training scale instead of tiling stamps across windows that mostly
    cannot see them.
    """
    marked = np.argwhere(stack[2:].max(axis=0) > 0)
    if len(marked) == 0:
        return None
    lo, hi = marked.min(axis=0), marked.max(axis=0) + 1
    spatial = stack.shape[1:]
    out = []
    for axis in range(3):
        size = max(patch_size[axis], int(hi[axis] - lo[axis]))
        size = min(size, spatial[axis])
        center = (lo[axis] + hi[axis]) // 2
        start = int(np.clip(center - size // 2, 0, spatial[axis] - size))
        out.append(slice(start, start + size))
    return tuple(out)


def predict_full(model, volume: ImageVolume, prompts, prev_seg,
                 guidance_cfg: GuidanceConfig, patch_size=(64, 64, 64),
                 threshold: float = 0.5) -> tuple[np.ndarray, BinaryMask]:
    """Encode guidance, run the network, and binarize at threshold.

    Without prompts the whole volume is tiled. With prompts the network
    runs in a guidance-centered window at its training scale and the
    previous segmentation is kept unchanged outside that window.
    """
    stack = encode_guidance(prompts, prev_seg, volume, guidance_cfg)
    roi = _guidance_roi(stack, patch_size)
    if roi is None:
        probs = sliding_window_probs(model.predict_logits, stack, patch_size)
    else:
        if prev_seg is not None:
            prev = prev_seg.data if isinstance(prev_seg, BinaryMask) else np.asarray(prev_seg)
            probs = prev.astype(np.float64)
        else:
            probs = np.zeros(stack.shape[1:], dtype=np.float64)
        sub = np.ascontiguousarray(stack[(slice(None),) + roi])
        probs[roi] = sliding_window_probs(model.predict_logits, sub, patch_size)
    mask = BinaryMask(geometry=volume.geometry,
                      data=(probs >= threshold).astype(np.uint8))
    return probs, mask


class SlidingWindowPredictor:
    """Callable bundling a model with its guidance layout and patch size.

    Sessions and the benchmark talk to this interface only, so test stubs
    (oracle, constant) can stand in for a trained network.
    """

    def __init__(self, model, guidance_cfg: GuidanceConfig,
                 patch_size=(64, 64, 64), threshold: float = 0.5):
        self.model = model
        self.guidance_cfg = guidance_cfg
        self.patch_size = tuple(patch_size)
        self.threshold = threshold

    def __call__(self, volume: ImageVolume, prompts, prev_seg):
        return predict_full(self.model, volume, prompts, prev_seg,
                            self.guidance_cfg, self.patch_size, self.threshold)
