"""DSC/IoU metrics and the simulated-interaction benchmark harness."""

from __future__ import annotations

import io
import json
import zlib
from dataclasses import dataclass, asdict

import numpy as np

from . import session as sess
from .promptsim import GuidanceConfig, PointPrompt, Prompt, simulate_prompts
from .volgrid import BinaryMask, ImageVolume, preprocess, restore_mask


class EvalError(RuntimeError):
    pass


def _counts(a: BinaryMask | np.ndarray, b: BinaryMask | np.ndarray):
    da = a.data if isinstance(a, BinaryMask) else np.asarray(a)
    db = b.data if isinstance(b, BinaryMask) else np.asarray(b)
    if da.shape != db.shape:
        raise EvalError(f"shape mismatch {da.shape} vs {db.shape}")
    da = da > 0
    db = db > 0
    inter = int((da & db).sum())
    return inter, int(da.sum()), int(db.sum())


def dice(a, b) -> float:
    """2|a n b| / (|a| + |b|); both empty -> 1.0."""
    inter, na, nb = _counts(a, b)
    if na + nb == 0:
        return 1.0
    return 2.0 * inter / (na + nb)


def iou(a, b) -> float:
    """|a n b| / |a u b|; both empty -> 1.0."""
    inter, na, nb = _counts(a, b)
    union = na + nb - inter
    if union == 0:
        return 1.0
    return inter / union


class OraclePredictor:
    """Upper-bound stub: returns the current case's ground truth verbatim.

    The benchmark binds the preprocessed GT before each case via bind_gt.
    """

    def __init__(self):
        self._gt = None

    def bind_gt(self, gt: BinaryMask):
        self._gt = gt

    def __call__(self, volume, prompts, prev_seg):
        if self._gt is None:
            raise EvalError("oracle predictor has no bound ground truth")
        probs = self._gt.data.astype(np.float64)
        return probs, self._gt


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    prompt_type: str
    rounds: int
    dsc: float
    iou: float


def _corrective_prompt(gt: BinaryMask, pred: BinaryMask, rng,
                       cfg: GuidanceConfig, negative_on_fp: bool = False) -> Prompt | None:
    """One corrective point: positive in a false-negative voxel (default)."""
    fn = np.argwhere((gt.data > 0) & (pred.data == 0))
    if len(fn) > 0:
        z, y, x = fn[rng.integers(len(fn))]
        r = int(rng.integers(cfg.point_radius_range[0], cfg.point_radius_range[1] + 1))
        return Prompt(PointPrompt(center=(int(z), int(y), int(x)), radius=r))
    if negative_on_fp:
        fp = np.argwhere((gt.data == 0) & (pred.data > 0))
        if len(fp) > 0:
            z, y, x = fp[rng.integers(len(fp))]
            return Prompt(PointPrompt(center=(int(z), int(y), int(x)), radius=1),
                          polarity="negative")
    return None


def evaluate_case(predictor, volume: ImageVolume, gt: BinaryMask, case_id: str,
                  prompt_type: str, rounds: int, rng,
                  guidance_cfg: GuidanceConfig,
                  preprocess_args: dict | None = None) -> CaseResult:
    """Preprocess, simulate prompts from GT, run the session, score in original geometry."""
    vol_pp, record = preprocess(volume, **(preprocess_args or {}))
    gt_pp = _preprocess_mask(gt, record)
    if hasattr(predictor, "bind_gt"):
        predictor.bind_gt(gt_pp)
    state = sess.create_session(vol_pp, predictor, case_id=case_id,
                                preprocess_record=record)

    if prompt_type == "none":
        probs, mask = predictor(vol_pp, [], None)
        state = sess.SessionState(case_id=case_id, volume=vol_pp, predictor=predictor,
                                  preprocess_record=record,
                                  predictions=((probs, mask),))
    else:
        for p in simulate_prompts(gt_pp, prompt_type, rng, guidance_cfg):
            state, _ = sess.add_prompt(state, p)
    for _ in range(rounds - 1):
        corrective = _corrective_prompt(gt_pp, state.current_mask, rng, guidance_cfg,
                                        negative_on_fp=True)
        if corrective is None:
            break
        state, _ = sess.add_prompt(state, corrective)

    pred_full = sess.export_result(state)
    return CaseResult(case_id=case_id, prompt_type=prompt_type,
                      rounds=len(state.predictions),
                      dsc=dice(pred_full, gt), iou=iou(pred_full, gt))


def _preprocess_mask(gt: BinaryMask, record) -> BinaryMask:
    """Project the ground truth into the preprocessed grid for prompt simulation."""
    from .volgrid import Geometry, resample
    res = resample(gt, record.resampled_geometry.spacing, mode="nearest")
    sl = tuple(slice(lo, hi) for lo, hi in zip(record.crop.lower, record.crop.upper))
    data = res.data[sl]
    return BinaryMask(geometry=Geometry(shape=data.shape,
                                        spacing=record.resampled_geometry.spacing),
                      data=data.copy())


def run_benchmark(predictor, dataset, prompt_type: str, rounds: int = 1,
                  seed: int = 0, guidance_cfg: GuidanceConfig | None = None,
                  preprocess_args: dict | None = None) -> dict:
    """Score every (case_id, volume, gt) triple; aggregate mean +/- SD.

    `predictor` follows the session predictor interface; a torch model can
    be wrapped with segnet.SlidingWindowPredictor first.
    """
    if prompt_type not in ("none", "point", "box", "lasso", "scribble"):
        raise EvalError(f"unknown prompt type {prompt_type!r}")
    guidance_cfg = guidance_cfg or GuidanceConfig()
    results = []
    for case_id, volume, gt in sorted(dataset, key=lambda c: c[0]):
        rng = np.random.default_rng((seed, zlib.crc32(case_id.encode())))
        results.append(evaluate_case(predictor, volume, gt, case_id, prompt_type,
                                     rounds, rng, guidance_cfg, preprocess_args))
    dscs = np.array([r.dsc for r in results])
    ious = np.array([r.iou for r in results])
    return {
        "prompt_type": prompt_type,
        "rounds": rounds,
        "seed": seed,
        "cases": [{"id": r.case_id, "dsc": r.dsc, "iou": r.iou} for r in results],
        "summary": {
            "dsc_mean": float(dscs.mean()),
            "dsc_sd": float(dscs.std()),
            "iou_mean": float(ious.mean()),
            "iou_sd": float(ious.std()),
        },
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def report_table(report: dict, method: str = "promptseg") -> str:
    """Aligned text row(s) in the column order Prompt | Method | DSC | IoU."""
    s = report["summary"]
    header = f"{'Prompt':<10} {'Method':<20} {'DSC (%)':>14} {'IoU (%)':>14}"
    row = (f"{report['prompt_type']:<10} {method:<20} "
           f"{100 * s['dsc_mean']:>6.1f}±{100 * s['dsc_sd']:<4.1f}   "
           f"{100 * s['iou_mean']:>6.1f}±{100 * s['iou_sd']:<4.1f}")
    return header + "\n" + row


def render_overlay(volume: ImageVolume, mask: BinaryMask, gt: BinaryMask,
                   slice_index: int) -> bytes:
    """PNG of one axial slice with prediction and GT contours in two colors."""
    from PIL import Image
    from scipy import ndimage

    if not (0 <= slice_index < volume.data.shape[0]):
        raise EvalError(f"slice {slice_index} out of range")
    if mask.data.shape != volume.data.shape or gt.data.shape != volume.data.shape:
        raise EvalError("shape mismatch")
    sl = volume.data[slice_index].astype(np.float64)
    lo, hi = sl.min(), sl.max()
    gray = np.zeros_like(sl, dtype=np.uint8) if hi <= lo else \
        np.round(255 * (sl - lo) / (hi - lo)).astype(np.uint8)
    rgb = np.stack([gray, gray, gray], axis=-1)

    def contour(m):
        plane = m[slice_index].astype(bool)
        return plane & ~ndimage.binary_erosion(plane)

    rgb[contour(mask.data)] = (255, 64, 64)   # prediction: red
    rgb[contour(gt.data)] = (64, 255, 64)     # ground truth: green
    buf = io.BytesIO()
    Image.fromarray(rgb).save(buf, format="PNG")
    return buf.getvalue()
