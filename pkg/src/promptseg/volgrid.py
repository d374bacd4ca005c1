"""Volumetric data model, NIfTI I/O, preprocessing, and augmentation.

Arrays use (z, y, x) index order throughout, C-contiguous. Images are
float32, masks uint8 in {0, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from . import nifti


class VolumeError(ValueError):
    """Raised on contract violations in volume operations."""


@dataclass(frozen=True)
class Geometry:
    """Physical grid geometry: shape, spacing (mm), origin (mm), direction cosines."""

    shape: tuple[int, int, int]
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    direction: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def __post_init__(self):
        if len(self.shape) != 3 or any(int(s) < 1 for s in self.shape):
            raise VolumeError(f"bad shape {self.shape}")
        if any(s <= 0 for s in self.spacing):
            raise VolumeError(f"spacing must be positive, got {self.spacing}")
        d = np.asarray(self.direction, dtype=np.float64)
        if d.shape != (3, 3) or not np.allclose(d.T @ d, np.eye(3), atol=1e-6):
            raise VolumeError("direction must be a 3x3 orthonormal matrix")

    @property
    def direction_matrix(self) -> np.ndarray:
        return np.asarray(self.direction, dtype=np.float64)


def _as_geometry_tuple(m):
    return tuple(tuple(float(x) for x in row) for row in np.asarray(m))


@dataclass(frozen=True)
class ImageVolume:
    geometry: Geometry
    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.shape != tuple(self.geometry.shape):
            raise VolumeError(
                f"data shape {data.shape} != geometry shape {self.geometry.shape}")
        if not np.all(np.isfinite(data)):
            raise VolumeError("image contains non-finite voxels")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class BinaryMask:
    geometry: Geometry
    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data)
        if data.shape != tuple(self.geometry.shape):
            raise VolumeError(
                f"mask shape {data.shape} != geometry shape {self.geometry.shape}")
        if not np.isin(data, (0, 1)).all():
            raise VolumeError("mask values must be exactly 0 or 1")
        data = data.astype(np.uint8)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class CropRecord:
    """Inverse information for crop_to_foreground."""

    lower: tuple[int, int, int]
    upper: tuple[int, int, int]  # exclusive
    original_shape: tuple[int, int, int]

    def __post_init__(self):
        for lo, hi, n in zip(self.lower, self.upper, self.original_shape):
            if not (0 <= lo < hi <= n):
                raise VolumeError(f"invalid crop record {self}")

    @property
    def cropped_shape(self) -> tuple[int, int, int]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))


def load_volume(path) -> ImageVolume:
    """Load a 3D scalar NIfTI file as an ImageVolume."""
    try:
        data, spacing, origin, direction = nifti.read(path)
    except nifti.NiftiError as e:
        raise VolumeError(str(e)) from e
    data = np.asarray(data, dtype=np.float32)
    if not np.all(np.isfinite(data)):
        raise VolumeError(f"{path}: non-finite voxels")
    geom = Geometry(shape=data.shape, spacing=tuple(spacing),
                    origin=tuple(origin), direction=_as_geometry_tuple(direction))
    return ImageVolume(geometry=geom, data=data)


def load_mask(path) -> BinaryMask:
    """Load a NIfTI file as a BinaryMask (nonzero voxels become 1)."""
    vol = load_volume(path)
    return BinaryMask(geometry=vol.geometry, data=(vol.data > 0.5).astype(np.uint8))


def save_volume(vol: ImageVolume | BinaryMask, path) -> None:
    """Write to NIfTI-1; masks as uint8, images as float32."""
    if isinstance(vol, BinaryMask):
        data = vol.data.astype(np.uint8)
    else:
        data = vol.data.astype(np.float32)
    g = vol.geometry
    nifti.write(path, data, g.spacing, g.origin, g.direction_matrix)


def zscore_normalize(vol: ImageVolume, foreground_only: bool = False) -> ImageVolume:
    """Standardize intensities to zero mean, unit population std.

    With foreground_only, statistics come from strictly-positive voxels
    but the transform is applied everywhere.
    """
    data = vol.data.astype(np.float64)
    sample = data[data > 0] if foreground_only else data
    if sample.size == 0:
        raise VolumeError("degenerate intensity distribution")
    std = sample.std()
    if std <= 1e-8:
        raise VolumeError("degenerate intensity distribution")
    out = (data - sample.mean()) / std
    return ImageVolume(geometry=vol.geometry, data=out.astype(np.float32))


def resample(vol, target_spacing, mode: str | None = None):
    """Resample to a new spacing; trilinear for images, nearest for masks.

    New shape is ceil(old_shape * old_spacing / target_spacing); the world
    position of the first voxel center is preserved.
    """
    target = np.asarray(target_spacing, dtype=np.float64)
    if target.shape != (3,) or np.any(target <= 0):
        raise VolumeError(f"target spacing must be 3 positive values, got {target_spacing}")
    is_mask = isinstance(vol, BinaryMask)
    if mode is None:
        mode = "nearest" if is_mask else "trilinear"
    if is_mask and mode != "nearest":
        raise VolumeError("masks must be resampled with nearest mode")
    if mode not in ("trilinear", "nearest"):
        raise VolumeError(f"unknown mode {mode!r}")

    g = vol.geometry
    old_spacing = np.asarray(g.spacing, dtype=np.float64)
    old_shape = np.asarray(g.shape)
    new_shape = np.ceil(old_shape * old_spacing / target).astype(int)
    new_shape = np.maximum(new_shape, 1)

    if np.array_equal(new_shape, old_shape) and np.allclose(target, old_spacing):
        out_data = vol.data.copy()
    else:
        scale = target / old_spacing  # new voxel step in old index units
        grids = np.meshgrid(*(np.arange(n) * s for n, s in zip(new_shape, scale)),
                            indexing="ij")
        coords = np.stack([grid.ravel() for grid in grids])
        order = 0 if mode == "nearest" else 1
        out_data = ndimage.map_coordinates(
            vol.data.astype(np.float32), coords, order=order, mode="nearest",
        ).reshape(tuple(new_shape))

    new_geom = Geometry(shape=tuple(int(n) for n in new_shape),
                        spacing=tuple(float(t) for t in target),
                        origin=g.origin, direction=g.direction)
    if is_mask:
        return BinaryMask(geometry=new_geom, data=(out_data > 0.5).astype(np.uint8))
    return ImageVolume(geometry=new_geom, data=out_data)


def crop_to_foreground(vol: ImageVolume, margin: int = 4,
                       threshold: float = 0.0) -> tuple[ImageVolume, CropRecord]:
    """Crop to the bounding box of voxels with intensity > threshold, dilated by margin."""
    fg = vol.data > threshold
    if not fg.any():
        raise VolumeError("all-background volume, nothing to crop to")
    lower, upper = [], []
    for axis in range(3):
        axes = tuple(a for a in range(3) if a != axis)
        nonzero = np.where(fg.any(axis=axes))[0]
        lo = max(int(nonzero[0]) - margin, 0)
        hi = min(int(nonzero[-1]) + 1 + margin, vol.data.shape[axis])
        lower.append(lo)
        upper.append(hi)
    record = CropRecord(lower=tuple(lower), upper=tuple(upper),
                        original_shape=vol.data.shape)
    sl = tuple(slice(lo, hi) for lo, hi in zip(lower, upper))
    cropped = vol.data[sl]
    geom = replace(vol.geometry, shape=cropped.shape)
    return ImageVolume(geometry=geom, data=cropped.copy()), record


def uncrop(mask: BinaryMask, record: CropRecord,
           original_geometry: Geometry | None = None) -> BinaryMask:
    """Place a cropped mask back into the original grid, zero elsewhere."""
    if mask.data.shape != record.cropped_shape:
        raise VolumeError(
            f"mask shape {mask.data.shape} != cropped shape {record.cropped_shape}")
    full = np.zeros(record.original_shape, dtype=np.uint8)
    sl = tuple(slice(lo, hi) for lo, hi in zip(record.lower, record.upper))
    full[sl] = mask.data
    if original_geometry is None:
        original_geometry = replace(mask.geometry, shape=record.original_shape)
    return BinaryMask(geometry=original_geometry, data=full)


@dataclass(frozen=True)
class AugmentConfig:
    """Joint spatial + intensity augmentation parameters."""

    rotation_deg: float = 15.0
    scale_range: tuple[float, float] = (0.9, 1.1)
    elastic_prob: float = 0.3
    elastic_sigma: float = 3.0     # voxels, displacement std at control points
    elastic_grid: int = 4          # control points per axis
    gain_range: tuple[float, float] = (0.9, 1.1)
    shift_range: tuple[float, float] = (-0.1, 0.1)

    @classmethod
    def identity(cls):
        return cls(rotation_deg=0.0, scale_range=(1.0, 1.0), elastic_prob=0.0,
                   gain_range=(1.0, 1.0), shift_range=(0.0, 0.0))


def _rotation_matrix(angles_rad):
    az, ay, ax = angles_rad
    cz, sz = np.cos(az), np.sin(az)
    cy, sy = np.cos(ay), np.sin(ay)
    cx, sx = np.cos(ax), np.sin(ax)
    rz = np.array([[1, 0, 0], [0, cz, -sz], [0, sz, cz]])   # rotate about z: mixes (y,x)
    ry = np.array([[cy, 0, -sy], [0, 1, 0], [sy, 0, cy]])
    rx = np.array([[cx, -sx, 0], [sx, cx, 0], [0, 0, 1]])
    return rz @ ry @ rx


def augment(vol: ImageVolume, mask: BinaryMask, params: AugmentConfig,
            rng: np.random.Generator) -> tuple[ImageVolume, BinaryMask]:
    """One jointly-sampled spatial transform plus image-only intensity jitter."""
    if vol.geometry != mask.geometry:
        raise VolumeError("image and mask geometries differ")

    shape = vol.data.shape
    angles = np.deg2rad(rng.uniform(-params.rotation_deg, params.rotation_deg, size=3))
    scale = rng.uniform(*params.scale_range)
    rot = _rotation_matrix(angles)

    center = (np.asarray(shape, dtype=np.float64) - 1) / 2
    grids = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in shape), indexing="ij")
    coords = np.stack([g.ravel() for g in grids]) - center[:, None]
    # inverse map: output voxel -> input voxel
    coords = (rot.T @ coords) / scale + center[:, None]

    if params.elastic_prob > 0 and rng.uniform() < params.elastic_prob:
        n = params.elastic_grid
        disp = rng.normal(0.0, params.elastic_sigma, size=(3, n, n, n))
        zoom = [s / n for s in shape]
        for axis in range(3):
            coords[axis] += ndimage.zoom(disp[axis], zoom, order=1).ravel()

    img_out = ndimage.map_coordinates(vol.data, coords, order=1,
                                      mode="nearest").reshape(shape)
    mask_out = ndimage.map_coordinates(mask.data, coords, order=0,
                                       mode="constant", cval=0).reshape(shape)

    gain = rng.uniform(*params.gain_range)
    shift = rng.uniform(*params.shift_range)
    img_out = img_out * gain + shift

    return (ImageVolume(geometry=vol.geometry, data=img_out.astype(np.float32)),
            BinaryMask(geometry=mask.geometry, data=mask_out.astype(np.uint8)))


@dataclass(frozen=True)
class PreprocessRecord:
    """Everything needed to map a prediction back to the source geometry."""

    original_geometry: Geometry
    resampled_geometry: Geometry
    crop: CropRecord


def preprocess(vol: ImageVolume, target_spacing=(1.0, 1.0, 1.0), margin: int = 4,
               threshold: float = 0.0) -> tuple[ImageVolume, PreprocessRecord]:
    """Standard pipeline: resample -> crop to foreground -> z-score normalize."""
    resampled = resample(vol, target_spacing, mode="trilinear")
    cropped, crop_rec = crop_to_foreground(resampled, margin=margin, threshold=threshold)
    normalized = zscore_normalize(cropped)
    record = PreprocessRecord(original_geometry=vol.geometry,
                              resampled_geometry=resampled.geometry,
                              crop=crop_rec)
    return normalized, record


def restore_mask(mask: BinaryMask, record: PreprocessRecord) -> BinaryMask:
    """Invert preprocessing for a predicted mask: uncrop, resample to source spacing."""
    full = uncrop(mask, record.crop, original_geometry=record.resampled_geometry)
    back = resample(full, record.original_geometry.spacing, mode="nearest")
    # ceil arithmetic can overshoot the source shape by a voxel; trim/pad to match
    src = record.original_geometry.shape
    data = back.data
    sl = tuple(slice(0, min(a, b)) for a, b in zip(data.shape, src))
    out = np.zeros(src, dtype=np.uint8)
    out[sl] = data[sl]
    return BinaryMask(geometry=record.original_geometry, data=out)
