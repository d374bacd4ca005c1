import numpy as np
import pytest

from promptseg.synthgen import PhantomConfig, generate_phantom
from promptseg.volgrid import BinaryMask, Geometry, ImageVolume


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def phantom(rng):
    """One easy 64-cube phantom (image, mask)."""
    return generate_phantom(PhantomConfig(seed=7), rng)


def ellipsoid_mask(shape=(48, 48, 48), center=None, radii=(10, 14, 8)):
    center = center or tuple(s // 2 for s in shape)
    grids = np.meshgrid(*(np.arange(n) for n in shape), indexing="ij")
    inside = sum(((g - c) / r) ** 2 for g, c, r in zip(grids, center, radii)) <= 1.0
    return BinaryMask(geometry=Geometry(shape=shape), data=inside.astype(np.uint8))


def box_volume(shape=(32, 32, 32), lo=10, hi=20, value=1.0):
    data = np.zeros(shape, dtype=np.float32)
    data[lo:hi, lo:hi, lo:hi] = value
    return ImageVolume(geometry=Geometry(shape=shape), data=data)
