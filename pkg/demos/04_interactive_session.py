"""Drive an interactive refinement session and replay its transcript.

A session owns a preprocessed volume and an ordered prompt history; every
new prompt re-encodes the full history (with the previous prediction fed
back as a channel) and re-predicts. Undo is exact because states are
immutable. The saved transcript replays to a bit-identical mask.

This demo uses a stand-in predictor that stamps the prompts themselves,
so it runs in milliseconds without trained weights; swap in
`segnet.SlidingWindowPredictor(model, guidance_cfg)` for the real thing.

Run:  python demos/04_interactive_session.py
"""

import tempfile
from pathlib import Path

import numpy as np

from promptseg.evalkit import dice
from promptseg.promptsim import PointPrompt, Prompt, rasterize_prompt
from promptseg.session import (add_prompt, create_session, export_result,
                               replay_transcript, save_transcript, undo)
from promptseg.synthgen import EASY, generate_phantom
from promptseg.volgrid import BinaryMask, preprocess


def stamp_predictor(volume, prompts, prev_seg):
    """Union of positive prompt stamps — a stand-in for a trained model."""
    out = np.zeros(volume.data.shape, dtype=np.uint8)
    for p in prompts:
        if p.polarity == "positive":
            out |= rasterize_prompt(p, volume.geometry).data
    return out.astype(np.float64), BinaryMask(geometry=volume.geometry, data=out)


rng = np.random.default_rng(11)
volume, gt = generate_phantom(EASY, rng)
vol_pp, record = preprocess(volume)

state = create_session(vol_pp, stamp_predictor, case_id="demo",
                       preprocess_record=record)
print(f"session opened: shape {vol_pp.data.shape}, round {state.round}")

for center in [(20, 30, 30), (25, 32, 28), (30, 34, 30)]:
    prompt = Prompt(PointPrompt(center=center, radius=3))
    state, mask = add_prompt(state, prompt)
    print(f"round {state.round}: point at {center}, "
          f"mask voxels {int(mask.data.sum())}")

state = undo(state)
print(f"after undo: round {state.round}, "
      f"mask voxels {int(state.current_mask.data.sum())}")

exported = export_result(state)
print(f"exported mask in original geometry: shape {exported.data.shape}")

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "transcript.json"
    save_transcript(state, path)
    replayed = replay_transcript(path, vol_pp, stamp_predictor,
                                 preprocess_record=record)
    same = np.array_equal(replayed.current_mask.data, state.current_mask.data)
    print(f"transcript replay identical: {same} "
          f"(dice {dice(replayed.current_mask, state.current_mask):.3f})")
