"""Prompt domain types, training-time simulation samplers, and guidance encoding.

Prompts are 2D gestures anchored to an axial slice (except points, which
are 3D), carrying a positive/negative polarity. Simulators draw prompts
from a ground-truth mask the way a clinician would place them; the encoder
rasterizes accumulated prompts into image-shaped guidance channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .volgrid import BinaryMask, Geometry, ImageVolume


class PromptError(ValueError):
    """Raised for malformed or out-of-bounds prompts."""


POSITIVE = "positive"
NEGATIVE = "negative"
PROMPT_KINDS = ("point", "box", "lasso", "scribble")


@dataclass(frozen=True)
class PointPrompt:
    kind = "point"
    center: tuple[int, int, int]  # (z, y, x)
    radius: int = 1

    def __post_init__(self):
        if not (1 <= self.radius <= 5):
            raise PromptError(f"point radius must be in [1, 5], got {self.radius}")


@dataclass(frozen=True)
class BoxPrompt:
    kind = "box"
    slice: int
    min_corner: tuple[int, int]  # (y, x), inclusive
    max_corner: tuple[int, int]  # (y, x), exclusive

    def __post_init__(self):
        if not all(lo < hi for lo, hi in zip(self.min_corner, self.max_corner)):
            raise PromptError(f"box min {self.min_corner} must be < max {self.max_corner}")


@dataclass(frozen=True)
class ScribblePrompt:
    kind = "scribble"
    slice: int
    vertices: tuple  # ((y, x), ...) with >= 2 entries
    thickness: int = 1

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise PromptError("scribble needs at least 2 vertices")
        if self.thickness not in (1, 2):
            raise PromptError(f"scribble thickness must be 1 or 2, got {self.thickness}")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if tuple(a) == tuple(b):
                raise PromptError("consecutive scribble vertices must be distinct")


@dataclass(frozen=True)
class LassoPrompt:
    kind = "lasso"
    slice: int
    vertices: tuple  # ((y, x), ...), 4..12 entries, implicitly closed

    def __post_init__(self):
        if not (4 <= len(self.vertices) <= 12):
            raise PromptError(f"lasso needs 4-12 vertices, got {len(self.vertices)}")
        verts = np.asarray(self.vertices, dtype=np.float64)
        if abs(_polygon_area(verts)) <= 0:
            raise PromptError("lasso polygon has zero area")
        if not _polygon_is_simple(verts):
            raise PromptError("lasso polygon self-intersects")


@dataclass(frozen=True)
class Prompt:
    """A placed interaction: geometry plus polarity."""

    geometry: PointPrompt | BoxPrompt | ScribblePrompt | LassoPrompt
    polarity: str = POSITIVE

    def __post_init__(self):
        if self.polarity not in (POSITIVE, NEGATIVE):
            raise PromptError(f"unknown polarity {self.polarity!r}")

    @property
    def kind(self) -> str:
        return self.geometry.kind


@dataclass(frozen=True)
class GuidanceConfig:
    """Knobs for prompt simulation and channel layout."""

    layout: str = "shared"  # "shared" (2 guidance channels) or "per-type" (8)
    point_radius_range: tuple[int, int] = (1, 3)
    box_margin_range: tuple[int, int] = (2, 8)
    jitter_amplitude: float = 2.0
    wavy_amplitude: float = 1.5
    wavy_frequency: float = 0.15  # cycles per voxel of arc length
    lasso_jitter: float = 1.5

    def __post_init__(self):
        if self.layout not in ("shared", "per-type"):
            raise PromptError(f"unknown layout {self.layout!r}")

    @property
    def n_channels(self) -> int:
        """Total stack channels including image and previous segmentation."""
        return 4 if self.layout == "shared" else 10


# ---------------------------------------------------------------------------
# geometry helpers


def _polygon_area(verts: np.ndarray) -> float:
    y, x = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[1] - a[1]) * (c[0] - a[0]) - (b[0] - a[0]) * (c[1] - a[1])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return d1 != d2 and d3 != d4


def _polygon_is_simple(verts: np.ndarray) -> bool:
    n = len(verts)
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def _line_voxels(p0, p1):
    """Integer voxels along the segment p0->p1 (2D), supercover-style stepping."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    n = int(np.ceil(np.abs(p1 - p0).max())) * 2 + 1
    t = np.linspace(0.0, 1.0, n)
    pts = np.rint(p0[None, :] + t[:, None] * (p1 - p0)[None, :]).astype(int)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return pts[keep]


def _nearest_foreground(fg_slice: np.ndarray):
    """Return a function mapping (y, x) to the nearest foreground voxel."""
    _, indices = ndimage.distance_transform_edt(~fg_slice.astype(bool),
                                                return_indices=True)

    def snap(yx):
        y = int(np.clip(round(yx[0]), 0, fg_slice.shape[0] - 1))
        x = int(np.clip(round(yx[1]), 0, fg_slice.shape[1] - 1))
        return int(indices[0, y, x]), int(indices[1, y, x])

    return snap


# ---------------------------------------------------------------------------
# simulation samplers


def select_slice_weighted(mask: BinaryMask, rng: np.random.Generator,
                          min_area: int = 1) -> int:
    """Draw an axial slice index with probability proportional to tumor area.

    min_area excludes slices too small for a given gesture while keeping
    the remaining slices area-weighted.
    """
    areas = mask.data.sum(axis=(1, 2)).astype(np.float64)
    areas[areas < min_area] = 0.0
    total = areas.sum()
    if total == 0:
        raise PromptError("empty mask" if min_area <= 1 else
                          f"no slice with foreground area >= {min_area}")
    return int(rng.choice(len(areas), p=areas / total))


def simulate_point_prompts(mask: BinaryMask, rng: np.random.Generator,
                           cfg: GuidanceConfig) -> list[Prompt]:
    """1-2 positive points uniform over foreground voxels, random stamp radius."""
    fg = np.argwhere(mask.data > 0)
    if len(fg) == 0:
        raise PromptError("empty mask")
    count = int(rng.integers(1, 3))
    prompts = []
    for _ in range(count):
        z, y, x = fg[rng.integers(len(fg))]
        radius = int(rng.integers(cfg.point_radius_range[0], cfg.point_radius_range[1] + 1))
        prompts.append(Prompt(PointPrompt(center=(int(z), int(y), int(x)),
                                          radius=radius)))
    return prompts


def simulate_box_prompt(mask: BinaryMask, rng: np.random.Generator,
                        cfg: GuidanceConfig) -> Prompt:
    """A single box around one slice's foreground with random margin and jitter.

    The returned box always covers at least 90% of that slice's foreground;
    jitter is resampled up to 10 times, then dropped.
    """
    z = select_slice_weighted(mask, rng)
    sl = mask.data[z]
    ys, xs = np.nonzero(sl)
    area = len(ys)
    ny, nx = sl.shape
    tight_min = np.array([ys.min(), xs.min()])
    tight_max = np.array([ys.max() + 1, xs.max() + 1])  # upper-exclusive
    lo_m, hi_m = cfg.box_margin_range
    margin_lo = rng.integers(lo_m, hi_m + 1, size=2)
    margin_hi = rng.integers(lo_m, hi_m + 1, size=2)
    base_min = tight_min - margin_lo
    base_max = tight_max + margin_hi

    j = cfg.jitter_amplitude
    for attempt in range(11):
        if attempt < 10 and j > 0:
            jit_min = rng.integers(-int(j), int(j) + 1, size=2)
            jit_max = rng.integers(-int(j), int(j) + 1, size=2)
        else:
            jit_min = jit_max = np.zeros(2, dtype=int)
        bmin = np.clip(base_min + jit_min, 0, [ny - 1, nx - 1])
        bmax = np.clip(base_max + jit_max, bmin + 1, [ny, nx])
        covered = int(sl[bmin[0]:bmax[0], bmin[1]:bmax[1]].sum())
        if covered >= 0.9 * area:
            break
    return Prompt(BoxPrompt(slice=int(z),
                            min_corner=(int(bmin[0]), int(bmin[1])),
                            max_corner=(int(bmax[0]), int(bmax[1]))))


def simulate_scribble_prompt(mask: BinaryMask, rng: np.random.Generator,
                             cfg: GuidanceConfig) -> Prompt:
    """Freehand-style stroke through 2-8 random foreground points on a slice.

    Control points are visited in random order; the connecting polyline gets
    per-vertex jitter and a sinusoidal wavy offset, and every sample is
    snapped back to the nearest foreground voxel so the rasterized stroke
    stays inside the mask. The stored vertex list is the dense snapped path.
    """
    z = select_slice_weighted(mask, rng, min_area=2)
    sl = mask.data[z].astype(bool)
    fg = np.argwhere(sl)
    k = int(rng.integers(2, 9))
    k = min(k, len(fg))
    idx = rng.choice(len(fg), size=k, replace=False)
    control = fg[idx].astype(np.float64)
    rng.shuffle(control)
    control += rng.uniform(-cfg.jitter_amplitude, cfg.jitter_amplitude,
                           size=control.shape)

    snap = _nearest_foreground(sl)
    path = []
    for a, b in zip(control[:-1], control[1:]):
        seg = b - a
        length = float(np.hypot(*seg))
        n = max(int(np.ceil(length * 2)), 2)
        t = np.linspace(0.0, 1.0, n, endpoint=False)
        normal = np.array([-seg[1], seg[0]]) / max(length, 1e-9)
        phase = rng.uniform(0, 2 * np.pi)
        wave = cfg.wavy_amplitude * np.sin(
            2 * np.pi * cfg.wavy_frequency * t * length + phase)
        pts = a[None, :] + t[:, None] * seg[None, :] + wave[:, None] * normal[None, :]
        for p in pts:
            v = snap(p)
            if not path or v != path[-1]:
                path.append(v)
    end = snap(control[-1])
    if not path or end != path[-1]:
        path.append(end)
    # bridge any snap discontinuities so the stroke is a connected voxel path
    dense = [path[0]]
    for v in path[1:]:
        prev = dense[-1]
        if max(abs(v[0] - prev[0]), abs(v[1] - prev[1])) > 1:
            for q in _line_voxels(prev, v)[1:]:
                qv = snap(q)
                if qv != dense[-1]:
                    dense.append(qv)
            if dense[-1] != v:
                dense.append(v)
        else:
            dense.append(v)
    if len(dense) < 2:
        dense.append(snap((dense[0][0] + 1, dense[0][1])))
        if dense[0] == dense[1]:
            dense[1] = snap((dense[0][0], dense[0][1] + 1))
    if dense[0] == dense[1]:  # single-voxel foreground fallback
        raise PromptError(f"slice {z} foreground too small for a scribble")

    thickness = int(rng.integers(1, 3))
    stroke = np.zeros_like(sl)
    for a, b in zip(dense[:-1], dense[1:]):  # exactly what the rasterizer draws
        pts = _line_voxels(a, b)
        stroke[pts[:, 0], pts[:, 1]] = True
    if thickness == 2:
        # only thicken when the dilated stroke still fits in the mask
        if np.any(ndimage.binary_dilation(stroke) & ~sl):
            thickness = 1
    if np.any(stroke & ~sl):
        # snapping around a concavity left a stray voxel; fall back to the
        # straight stroke between two adjacent foreground voxels
        dense = _adjacent_foreground_pair(sl, fg, rng)
        thickness = 1
    return Prompt(ScribblePrompt(slice=int(z), vertices=tuple(dense),
                                 thickness=thickness))


def _adjacent_foreground_pair(sl, fg, rng):
    order = rng.permutation(len(fg))
    for i in order:
        y, x = fg[i]
        for dy, dx in ((0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1)):
            ny_, nx_ = y + dy, x + dx
            if 0 <= ny_ < sl.shape[0] and 0 <= nx_ < sl.shape[1] and sl[ny_, nx_]:
                return [(int(y), int(x)), (int(ny_), int(nx_))]
    raise PromptError("no adjacent foreground voxel pair on slice")


def simulate_lasso_prompt(mask: BinaryMask, rng: np.random.Generator,
                          cfg: GuidanceConfig) -> Prompt:
    """Closed contour of 4-12 radially-jittered boundary points on a slice."""
    z = select_slice_weighted(mask, rng, min_area=4)
    sl = mask.data[z].astype(bool)
    boundary = sl & ~ndimage.binary_erosion(sl)
    bpts = np.argwhere(boundary).astype(np.float64)
    centroid = np.argwhere(sl).mean(axis=0)
    angles = np.arctan2(bpts[:, 0] - centroid[0], bpts[:, 1] - centroid[1])
    radii = np.hypot(bpts[:, 0] - centroid[0], bpts[:, 1] - centroid[1])

    ny, nx = sl.shape

    def build(jitter_amp):
        k = int(rng.integers(4, 13))
        phase = rng.uniform(0, 2 * np.pi)
        verts = []
        for i in range(k):
            lo = phase + 2 * np.pi * i / k
            rel = np.mod(angles - lo, 2 * np.pi)
            inbin = rel < 2 * np.pi / k
            if not inbin.any():
                continue
            cand = np.where(inbin)[0]
            pick = cand[np.argmax(radii[cand])]  # outermost boundary point in bin
            r = radii[pick] + rng.uniform(-jitter_amp, jitter_amp)
            r = max(r, 0.5)
            ang = angles[pick]
            y = centroid[0] + r * np.sin(ang)
            x = centroid[1] + r * np.cos(ang)
            verts.append((float(np.clip(y, 0, ny - 1)), float(np.clip(x, 0, nx - 1))))
        return verts

    for attempt in range(11):
        verts = build(cfg.lasso_jitter if attempt < 10 else 0.0)
        if len(verts) < 4:
            continue
        arr = np.asarray(verts)
        if abs(_polygon_area(arr)) > 0 and _polygon_is_simple(arr):
            return Prompt(LassoPrompt(slice=int(z), vertices=tuple(verts)))
    raise PromptError(f"could not build a simple lasso polygon on slice {z}")


SIMULATORS = {
    "point": lambda mask, rng, cfg: simulate_point_prompts(mask, rng, cfg),
    "box": lambda mask, rng, cfg: [simulate_box_prompt(mask, rng, cfg)],
    "scribble": lambda mask, rng, cfg: [simulate_scribble_prompt(mask, rng, cfg)],
    "lasso": lambda mask, rng, cfg: [simulate_lasso_prompt(mask, rng, cfg)],
}


def simulate_prompts(mask: BinaryMask, kind: str, rng: np.random.Generator,
                     cfg: GuidanceConfig) -> list[Prompt]:
    """Dispatch to the sampler for one prompt kind."""
    if kind not in SIMULATORS:
        raise PromptError(f"unknown prompt kind {kind!r}")
    return SIMULATORS[kind](mask, rng, cfg)


# ---------------------------------------------------------------------------
# rasterization and encoding


def prompt_in_bounds(prompt: Prompt, shape) -> bool:
    nz, ny, nx = shape
    g = prompt.geometry
    if isinstance(g, PointPrompt):
        z, y, x = g.center
        return 0 <= z < nz and 0 <= y < ny and 0 <= x < nx
    if not (0 <= g.slice < nz):
        return False
    if isinstance(g, BoxPrompt):
        return (0 <= g.min_corner[0] and g.max_corner[0] <= ny
                and 0 <= g.min_corner[1] and g.max_corner[1] <= nx)
    verts = np.asarray(g.vertices, dtype=np.float64)
    return bool(np.all(verts[:, 0] >= 0) and np.all(verts[:, 0] <= ny - 1)
                and np.all(verts[:, 1] >= 0) and np.all(verts[:, 1] <= nx - 1))


def _fill_polygon(verts: np.ndarray, shape) -> np.ndarray:
    """Even-odd fill by voxel-center crossing test."""
    ny, nx = shape
    yy, xx = np.mgrid[0:ny, 0:nx]
    inside = np.zeros(shape, dtype=bool)
    n = len(verts)
    for i in range(n):
        y0, x0 = verts[i]
        y1, x1 = verts[(i + 1) % n]
        if y0 == y1:
            continue
        cond = (yy >= min(y0, y1)) & (yy < max(y0, y1))
        xi = x0 + (yy - y0) * (x1 - x0) / (y1 - y0)
        inside ^= cond & (xx < xi)
    return inside


def rasterize_prompt(prompt: Prompt, geometry: Geometry) -> BinaryMask:
    """Convert a prompt into a binary spatial map on the full grid."""
    shape = tuple(geometry.shape)
    if not prompt_in_bounds(prompt, shape):
        raise PromptError(f"prompt out of bounds for shape {shape}")
    out = np.zeros(shape, dtype=np.uint8)
    g = prompt.geometry

    if isinstance(g, PointPrompt):
        cz, cy, cx = g.center
        r = g.radius
        z0, z1 = max(cz - r, 0), min(cz + r + 1, shape[0])
        y0, y1 = max(cy - r, 0), min(cy + r + 1, shape[1])
        x0, x1 = max(cx - r, 0), min(cx + r + 1, shape[2])
        zz, yy, xx = np.mgrid[z0:z1, y0:y1, x0:x1]
        ball = (zz - cz) ** 2 + (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        out[z0:z1, y0:y1, x0:x1] = ball.astype(np.uint8)
    elif isinstance(g, BoxPrompt):
        (y0, x0), (y1, x1) = g.min_corner, g.max_corner
        out[g.slice, y0:y1, x0:x1] = 1
    elif isinstance(g, ScribblePrompt):
        plane = np.zeros(shape[1:], dtype=bool)
        verts = [tuple(v) for v in g.vertices]
        for a, b in zip(verts[:-1], verts[1:]):
            pts = _line_voxels(a, b)
            plane[pts[:, 0], pts[:, 1]] = True
        if g.thickness == 2:
            plane = ndimage.binary_dilation(plane)
        out[g.slice] = plane.astype(np.uint8)
    elif isinstance(g, LassoPrompt):
        # interior by even-odd voxel-center test, plus the drawn outline so
        # boundary voxels the contour passes through are included
        verts = np.asarray(g.vertices, dtype=np.float64)
        plane = _fill_polygon(verts, shape[1:])
        closed = [tuple(v) for v in g.vertices] + [tuple(g.vertices[0])]
        for a, b in zip(closed[:-1], closed[1:]):
            pts = _line_voxels(a, b)
            plane[pts[:, 0], pts[:, 1]] = True
        out[g.slice] = plane.astype(np.uint8)
    else:
        raise PromptError(f"unknown prompt geometry {type(g).__name__}")
    return BinaryMask(geometry=geometry, data=out)


def encode_guidance(prompts, prev_seg, image: ImageVolume,
                    cfg: GuidanceConfig) -> np.ndarray:
    """Build the channel stack: image, previous segmentation, guidance maps.

    Shared layout merges all positive prompts into one channel and all
    negatives into another (4 channels total); per-type layout gives every
    prompt kind its own positive/negative pair (10 total). Overlaps merge
    by max, so encoding is idempotent and order-independent.
    """
    shape = tuple(image.geometry.shape)
    stack = np.zeros((cfg.n_channels,) + shape, dtype=np.float32)
    stack[0] = image.data

    if prev_seg is not None:
        prev = prev_seg.data if isinstance(prev_seg, BinaryMask) else np.asarray(prev_seg)
        if prev.shape != shape:
            raise PromptError(f"previous segmentation shape {prev.shape} != {shape}")
        prev = prev.astype(np.float32)
        if prev.min() < 0 or prev.max() > 1:
            raise PromptError("previous segmentation values must lie in [0, 1]")
        stack[1] = prev

    for prompt in prompts:
        stamp = rasterize_prompt(prompt, image.geometry).data.astype(np.float32)
        if cfg.layout == "shared":
            ch = 2 if prompt.polarity == POSITIVE else 3
        else:
            base = 2 + 2 * PROMPT_KINDS.index(prompt.kind)
            ch = base if prompt.polarity == POSITIVE else base + 1
        np.maximum(stack[ch], stamp, out=stack[ch])
    return stack


# ---------------------------------------------------------------------------
# wire format


def prompt_to_json(prompt: Prompt) -> dict:
    g = prompt.geometry
    obj = {"kind": prompt.kind, "polarity": prompt.polarity}
    if isinstance(g, PointPrompt):
        obj["center"] = [int(c) for c in g.center]
        obj["radius"] = int(g.radius)
    elif isinstance(g, BoxPrompt):
        obj["slice"] = int(g.slice)
        obj["min"] = [int(c) for c in g.min_corner]
        obj["max"] = [int(c) for c in g.max_corner]
    elif isinstance(g, ScribblePrompt):
        obj["slice"] = int(g.slice)
        obj["vertices"] = [[float(y), float(x)] for y, x in g.vertices]
        obj["thickness"] = int(g.thickness)
    else:
        obj["slice"] = int(g.slice)
        obj["vertices"] = [[float(y), float(x)] for y, x in g.vertices]
    return obj


_REQUIRED_FIELDS = {
    "point": {"center", "radius"},
    "box": {"slice", "min", "max"},
    "scribble": {"slice", "vertices", "thickness"},
    "lasso": {"slice", "vertices"},
}


def prompt_from_json(obj: dict) -> Prompt:
    """Parse and validate the shared prompt wire schema."""
    if not isinstance(obj, dict):
        raise PromptError("prompt must be a JSON object")
    kind = obj.get("kind")
    if kind not in PROMPT_KINDS:
        raise PromptError(f"unknown prompt kind {kind!r}")
    polarity = obj.get("polarity")
    if polarity not in (POSITIVE, NEGATIVE):
        raise PromptError(f"unknown polarity {polarity!r}")
    fields = set(obj) - {"kind", "polarity"}
    required = _REQUIRED_FIELDS[kind]
    if fields != required:
        raise PromptError(
            f"{kind} prompt must carry exactly fields {sorted(required)}, got {sorted(fields)}")
    try:
        if kind == "point":
            geometry = PointPrompt(center=tuple(int(c) for c in obj["center"]),
                                   radius=int(obj["radius"]))
        elif kind == "box":
            geometry = BoxPrompt(slice=int(obj["slice"]),
                                 min_corner=tuple(int(c) for c in obj["min"]),
                                 max_corner=tuple(int(c) for c in obj["max"]))
        elif kind == "scribble":
            geometry = ScribblePrompt(slice=int(obj["slice"]),
                                      vertices=tuple(tuple(float(c) for c in v)
                                                     for v in obj["vertices"]),
                                      thickness=int(obj["thickness"]))
        else:
            geometry = LassoPrompt(slice=int(obj["slice"]),
                                   vertices=tuple(tuple(float(c) for c in v)
                                                  for v in obj["vertices"]))
    except (TypeError, ValueError) as e:
        if isinstance(e, PromptError):
            raise
        raise PromptError(f"malformed {kind} prompt: {e}") from e
    return Prompt(geometry=geometry, polarity=polarity)
