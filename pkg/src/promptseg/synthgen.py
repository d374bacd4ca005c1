"""Synthetic phantom generator: brain-like ellipsoid with 1-2 "tumors".

Stands in for license-gated clinical data so the whole pipeline trains and
evaluates at desk scale. The easy preset has high lesion contrast; the hard
preset lowers contrast, perturbs lesion shape, and adds unlabeled distractor
lesions so prompts genuinely matter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from .volgrid import BinaryMask, Geometry, ImageVolume, save_volume


class PhantomError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhantomConfig:
    shape: tuple[int, int, int] = (64, 64, 64)
    brain_intensity: float = 1.0
    noise_sigma: float = 0.05
    tumor_count_range: tuple[int, int] = (1, 2)
    tumor_radius_range: tuple[float, float] = (4.0, 10.0)
    contrast_range: tuple[float, float] = (0.2, 1.0)
    rim_probability: float = 0.5
    rim_width: float = 1.5
    rim_boost: float = 0.4
    lobulation_amplitude: float = 0.0   # radial shape perturbation, 0 = ellipsoid
    distractor_probability: float = 0.0  # unlabeled lesion-like structure
    distractor_reach: float = 28.0       # max center distance from a tumor
    seed: int = 0


EASY = PhantomConfig(tumor_count_range=(1, 1), tumor_radius_range=(4.0, 8.0),
                     contrast_range=(0.3, 1.0), rim_probability=0.0,
                     distractor_probability=1.0, distractor_reach=22.0)
HARD = PhantomConfig(tumor_count_range=(1, 1), tumor_radius_range=(4.0, 8.0),
                     contrast_range=(0.15, 0.35), noise_sigma=0.08,
                     lobulation_amplitude=0.35, rim_probability=0.0,
                     distractor_probability=1.0, distractor_reach=22.0)

PRESETS = {"easy": EASY, "hard": HARD}


def _rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def _lesion_mask(shape, center, radii, rot, rng, lobulation):
    """Boolean mask of a rotated ellipsoid, optionally radially perturbed."""
    grids = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in shape), indexing="ij")
    rel = np.stack([g - c for g, c in zip(grids, center)])
    local = np.einsum("ij,j...->i...", rot.T, rel)
    u = local / radii[:, None, None, None]
    rho = np.sqrt((u ** 2).sum(axis=0))
    limit = 1.0
    if lobulation > 0:
        # low-order angular harmonics keep the shape star-convex (connected)
        with np.errstate(invalid="ignore", divide="ignore"):
            theta = np.arccos(np.clip(np.where(rho > 0, u[0] / np.maximum(rho, 1e-9), 1.0), -1, 1))
            phi = np.arctan2(u[1], u[2])
        a = rng.uniform(-1, 1, size=3)
        pert = (a[0] * np.sin(2 * theta) * np.cos(phi)
                + a[1] * np.sin(3 * phi) * np.sin(theta)
                + a[2] * np.cos(2 * theta))
        limit = 1.0 + lobulation * pert / max(np.abs(a).sum(), 1e-9)
    return rho <= limit, rho


def generate_phantom(cfg: PhantomConfig,
                     rng: np.random.Generator) -> tuple[ImageVolume, BinaryMask]:
    """One synthetic case: image plus exact tumor mask. Deterministic per rng state."""
    shape = tuple(cfg.shape)
    grids = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in shape), indexing="ij")
    center = (np.asarray(shape) - 1) / 2
    brain_radii = np.asarray(shape) * 0.42
    brain = sum(((g - c) / r) ** 2 for g, c, r in zip(grids, center, brain_radii)) <= 1.0

    image = np.where(brain, cfg.brain_intensity, 0.0)
    mask = np.zeros(shape, dtype=np.uint8)

    n_tumors = int(rng.integers(cfg.tumor_count_range[0], cfg.tumor_count_range[1] + 1))
    inside = np.argwhere(brain)
    placed = []

    def place_lesion(label_into_mask: bool, near: np.ndarray | None = None):
        for _ in range(50):
            radii = rng.uniform(*cfg.tumor_radius_range, size=3)
            rot = _rotation(rng)
            # keep the lesion inside the brain ellipsoid
            margin = radii.max() * 1.1
            shrunk = brain_radii - margin
            if np.any(shrunk <= 0):
                continue
            ok = (((inside - center) / shrunk) ** 2).sum(axis=1) <= 1.0
            # lesions must stay disjoint so mask components count tumors
            for p, m in placed:
                ok &= np.linalg.norm(inside - p, axis=1) >= margin + m + 2
            if near is not None:
                # distractors sit close to a tumor so local appearance
                # alone cannot tell target from confuser
                ok &= np.linalg.norm(inside - near, axis=1) <= cfg.distractor_reach
            candidates = np.flatnonzero(ok)
            if candidates.size == 0:
                continue
            c = inside[rng.choice(candidates)].astype(np.float64)
            lesion, rho = _lesion_mask(shape, c, radii, rot, rng,
                                       cfg.lobulation_amplitude)
            if not lesion.any():
                continue
            contrast = rng.uniform(*cfg.contrast_range)
            image[lesion] = cfg.brain_intensity + contrast
            if rng.uniform() < cfg.rim_probability:
                rim_scale = cfg.rim_width / radii.mean()
                rim = (~lesion) & (rho <= 1.0 + rim_scale) & brain
                image[rim] = cfg.brain_intensity + contrast + cfg.rim_boost
            if label_into_mask:
                mask[lesion] = 1
            placed.append((c, radii.max() * 1.1))
            return True
        return False

    for _ in range(n_tumors):
        if not place_lesion(True):
            raise PhantomError("could not place a tumor after 50 tries")
    if cfg.distractor_probability > 0 and rng.uniform() < cfg.distractor_probability:
        anchor = placed[int(rng.integers(len(placed)))][0]
        place_lesion(False, near=anchor)  # best-effort; a crowded brain just skips it

    if cfg.noise_sigma > 0:
        image = image + rng.normal(0.0, cfg.noise_sigma, size=shape)
    image = np.clip(image, 0.0, None)
    # never let noise zero out a voxel inside the head (keeps cropping stable)
    image[brain] = np.maximum(image[brain], 1e-3)

    geom = Geometry(shape=shape)
    return (ImageVolume(geometry=geom, data=image.astype(np.float32)),
            BinaryMask(geometry=geom, data=mask))


def generate_dataset(cfg: PhantomConfig, n_train: int, n_val: int,
                     out_dir) -> dict:
    """Write train/val phantom pairs plus a manifest; deterministic by cfg.seed."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cases = []
    for split, count, offset in (("train", n_train, 0), ("val", n_val, n_train)):
        for i in range(count):
            case_seed = cfg.seed * 1_000_003 + offset + i
            rng = np.random.default_rng(case_seed)
            image, mask = generate_phantom(cfg, rng)
            case_id = f"{split}_{i:04d}"
            save_volume(image, out_dir / f"{case_id}_img.nii.gz")
            save_volume(mask, out_dir / f"{case_id}_gt.nii.gz")
            cases.append({"id": case_id, "split": split, "seed": case_seed})
    manifest = {"seed": cfg.seed, "config": asdict(cfg), "cases": cases}
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def load_manifest(data_dir) -> dict:
    path = Path(data_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest.json in {data_dir}")
    with open(path) as f:
        return json.load(f)
