"""Minimal NIfTI-1 reader/writer for scalar 3D volumes.

Only the subset of the format this project needs: single-file .nii or
.nii.gz, 3D scalar data, sform affine. Arrays are exchanged in (z, y, x)
index order; on disk NIfTI stores x fastest, so the raw buffer reshapes
directly to (nz, ny, nx) in C order.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

HEADER_SIZE = 348
VOX_OFFSET = 352.0
MAGIC = b"n+1\x00"

# NIfTI datatype codes
_DTYPES = {
    2: np.uint8,
    4: np.int16,
    8: np.int32,
    16: np.float32,
    64: np.float64,
    256: np.int8,
    512: np.uint16,
    768: np.uint32,
}
_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}


class NiftiError(ValueError):
    pass


def _open(path, mode):
    path = Path(path)
    if path.suffix == ".gz":
        if "w" in mode:
            # fixed mtime keeps outputs byte-identical across runs
            return gzip.GzipFile(path, mode, mtime=0)
        return gzip.open(path, mode)
    return open(path, mode)


def read(path):
    """Read a NIfTI-1 file.

    Returns (data, spacing, origin, direction) with data in (z, y, x)
    order and spacing/origin/direction reordered to match.
    """
    with _open(path, "rb") as f:
        raw = f.read()
    if len(raw) < HEADER_SIZE:
        raise NiftiError(f"{path}: truncated header")
    sizeof_hdr = struct.unpack_from("<i", raw, 0)[0]
    if sizeof_hdr != HEADER_SIZE:
        raise NiftiError(f"{path}: not a little-endian NIfTI-1 file")
    if raw[344:348] not in (b"n+1\x00", b"ni1\x00"):
        raise NiftiError(f"{path}: bad magic")

    dim = struct.unpack_from("<8h", raw, 40)
    ndim = dim[0]
    if ndim != 3 and not (ndim == 4 and dim[4] == 1):
        raise NiftiError(f"{path}: expected 3D scalar volume, got {ndim}D")
    nx, ny, nz = dim[1], dim[2], dim[3]

    datatype = struct.unpack_from("<h", raw, 70)[0]
    if datatype not in _DTYPES:
        raise NiftiError(f"{path}: unsupported datatype code {datatype}")
    dtype = np.dtype(_DTYPES[datatype])

    pixdim = struct.unpack_from("<8f", raw, 76)
    vox_offset = int(struct.unpack_from("<f", raw, 108)[0])
    scl_slope, scl_inter = struct.unpack_from("<2f", raw, 112)
    sform_code = struct.unpack_from("<h", raw, 254)[0]
    srow = np.array(struct.unpack_from("<12f", raw, 280), dtype=np.float64).reshape(3, 4)

    count = nx * ny * nz
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=vox_offset)
    data = data.reshape(nz, ny, nx)  # x fastest on disk

    if scl_slope not in (0.0, 1.0) or scl_inter != 0.0:
        data = data.astype(np.float64) * scl_slope + scl_inter

    if sform_code > 0:
        affine = srow
        spacing_xyz = np.linalg.norm(affine[:, :3], axis=0)
        if np.any(spacing_xyz <= 0):
            raise NiftiError(f"{path}: degenerate sform")
        direction_xyz = affine[:, :3] / spacing_xyz
        origin_xyz = affine[:, 3]
    else:
        spacing_xyz = np.array([abs(pixdim[1]) or 1.0,
                                abs(pixdim[2]) or 1.0,
                                abs(pixdim[3]) or 1.0])
        direction_xyz = np.eye(3)
        origin_xyz = np.zeros(3)

    spacing = spacing_xyz[::-1].copy()
    origin = origin_xyz[::-1].copy()
    direction = direction_xyz[::-1, ::-1].copy()
    return np.ascontiguousarray(data), spacing, origin, direction


def write(path, data, spacing, origin, direction):
    """Write a 3D array in (z, y, x) order to a NIfTI-1 file."""
    data = np.ascontiguousarray(data)
    if data.ndim != 3:
        raise NiftiError("only 3D volumes are written")
    dtype = np.dtype(data.dtype)
    if dtype not in _CODES:
        raise NiftiError(f"unsupported dtype {dtype}")

    nz, ny, nx = data.shape
    spacing = np.asarray(spacing, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)

    spacing_xyz = spacing[::-1]
    affine = np.zeros((3, 4))
    affine[:, :3] = direction[::-1, ::-1] * spacing_xyz
    affine[:, 3] = origin[::-1]

    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    struct.pack_into("<8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, _CODES[dtype])
    struct.pack_into("<h", hdr, 72, dtype.itemsize * 8)
    struct.pack_into("<8f", hdr, 76, 1.0, spacing_xyz[0], spacing_xyz[1],
                     spacing_xyz[2], 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, VOX_OFFSET)
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)
    struct.pack_into("<2h", hdr, 252, 0, 1)  # qform off, sform on
    struct.pack_into("<12f", hdr, 280, *affine.ravel())
    hdr[344:348] = MAGIC

    with _open(path, "wb") as f:
        f.write(bytes(hdr))
        f.write(b"\x00" * 4)  # extension flag
        f.write(data.tobytes())
