"""Generate synthetic brain phantoms and save slice previews.

Each phantom is a noisy ellipsoidal "brain" with one or two bright
star-convex lesions and an exact ground-truth mask. The `hard` preset
lowers lesion contrast, adds lobulation, rims, and unlabeled distractor
lesions.

Run:  python demos/01_synthetic_phantoms.py out/phantoms
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image

from promptseg.synthgen import EASY, HARD, generate_phantom

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/phantoms")
out.mkdir(parents=True, exist_ok=True)

for name, cfg in [("easy", EASY), ("hard", HARD)]:
    rng = np.random.default_rng(7)
    volume, gt = generate_phantom(cfg, rng)
    # pick the axial slice with the most tumor
    z = int(gt.data.sum(axis=(1, 2)).argmax())
    plane = volume.data[z]
    gray = np.round(255 * (plane - plane.min())
                    / (plane.max() - plane.min())).astype(np.uint8)
    rgb = np.stack([gray, gray, gray], axis=-1)
    rgb[gt.data[z] > 0, 0] = 255  # tint the tumor red
    Image.fromarray(rgb).resize((256, 256), Image.NEAREST).save(
        out / f"{name}_z{z}.png")
    frac = gt.data.mean()
    print(f"{name}: shape={volume.data.shape}, tumor voxels={int(gt.data.sum())} "
          f"({100 * frac:.2f}%), preview {out / f'{name}_z{z}.png'}")
