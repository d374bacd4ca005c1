"""Simulate every prompt type from a ground-truth mask and render them.

Prompt simulation turns a GT mask into the kind of 2D interaction a human
would make on an axial slice: points inside the tumor, a loose bounding
box, a wavy interior scribble, a jittered lasso around the outline. Each
simulated prompt is rasterized into the guidance channels the network
sees.

Run:  python demos/02_prompt_simulation.py out/prompts
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image

from promptseg.promptsim import (GuidanceConfig, encode_guidance,
                                 prompt_to_json, rasterize_prompt,
                                 simulate_prompts)
from promptseg.synthgen import EASY, generate_phantom

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/prompts")
out.mkdir(parents=True, exist_ok=True)

rng = np.random.default_rng(3)
volume, gt = generate_phantom(EASY, rng)
cfg = GuidanceConfig()

for kind in ("point", "box", "scribble", "lasso"):
    prompts = simulate_prompts(gt, kind, rng, cfg)
    print(f"{kind}: {len(prompts)} prompt(s)")
    for p in prompts:
        print(f"  {prompt_to_json(p)}")
    stamp = np.zeros(gt.data.shape, dtype=np.uint8)
    for p in prompts:
        stamp |= rasterize_prompt(p, gt.geometry).data
    z = int(stamp.sum(axis=(1, 2)).argmax())
    plane = volume.data[z]
    gray = np.round(255 * (plane - plane.min())
                    / (plane.max() - plane.min())).astype(np.uint8)
    rgb = np.stack([gray, gray, gray], axis=-1)
    rgb[gt.data[z] > 0] = (90, 90, 160)      # tumor: blue-gray
    rgb[stamp[z] > 0] = (255, 220, 0)        # prompt stamp: yellow
    Image.fromarray(rgb).resize((256, 256), Image.NEAREST).save(
        out / f"{kind}_z{z}.png")

# the network input: image + previous seg + merged guidance channels
stack = encode_guidance(simulate_prompts(gt, "point", rng, cfg),
                        prev_seg=None, image=volume, cfg=cfg)
print(f"\nguidance stack: {stack.shape[0]} channels "
      f"(layout={cfg.layout!r}), values in "
      f"[{stack[2:].min():.0f}, {stack[2:].max():.0f}]")
