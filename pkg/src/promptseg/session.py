"""Interactive refinement session: accumulate prompts, feed back, re-predict.

A session owns a preprocessed volume and an ordered prompt history. Every
added prompt re-encodes the full history with the latest prediction as the
previous-segmentation channel and runs full-volume inference. States are
immutable; operations return new states, so undo is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .promptsim import Prompt, prompt_from_json, prompt_in_bounds, prompt_to_json
from .volgrid import BinaryMask, ImageVolume, PreprocessRecord, restore_mask


class SessionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SessionState:
    case_id: str
    volume: ImageVolume
    predictor: object  # callable(volume, prompts, prev_seg) -> (probs, BinaryMask)
    prompts: tuple = ()
    predictions: tuple = ()  # ((probs, BinaryMask), ...) per round
    preprocess_record: PreprocessRecord | None = None
    use_probabilities: bool = False  # previous-seg channel: probs instead of mask
    seed: int = 0

    @property
    def round(self) -> int:
        return len(self.predictions)

    @property
    def current_mask(self) -> BinaryMask | None:
        return self.predictions[-1][1] if self.predictions else None

    @property
    def current_probs(self):
        return self.predictions[-1][0] if self.predictions else None


def create_session(volume: ImageVolume, predictor, case_id: str = "case",
                   preprocess_record: PreprocessRecord | None = None,
                   run_baseline: bool = False, seed: int = 0) -> SessionState:
    """New session; optionally runs a prompt-free round-0 baseline prediction."""
    state = SessionState(case_id=case_id, volume=volume, predictor=predictor,
                         preprocess_record=preprocess_record, seed=seed)
    if run_baseline:
        probs, mask = predictor(volume, [], None)
        state = replace(state, predictions=((probs, mask),))
    return state


def add_prompt(state: SessionState, prompt: Prompt) -> tuple[SessionState, BinaryMask]:
    """Append a prompt, re-encode the full history, and re-predict."""
    if not prompt_in_bounds(prompt, state.volume.data.shape):
        raise SessionError(
            f"prompt out of bounds for volume shape {state.volume.data.shape}")
    prompts = state.prompts + (prompt,)
    if state.predictions:
        prev = (state.current_probs.astype(np.float32) if state.use_probabilities
                else state.current_mask)
    else:
        prev = None
    probs, mask = state.predictor(state.volume, list(prompts), prev)
    new_state = replace(state, prompts=prompts,
                        predictions=state.predictions + ((probs, mask),))
    return new_state, mask


def undo(state: SessionState) -> SessionState:
    """Remove the last prompt and prediction; exact inverse of add_prompt."""
    if not state.prompts:
        raise SessionError("nothing to undo at round 0")
    return replace(state, prompts=state.prompts[:-1],
                   predictions=state.predictions[:-1])


def export_result(state: SessionState) -> BinaryMask:
    """Current mask mapped back to the original (pre-preprocessing) geometry."""
    mask = state.current_mask
    if mask is None:
        raise SessionError("no prediction to export yet")
    if state.preprocess_record is None:
        return mask
    return restore_mask(mask, state.preprocess_record)


def save_transcript(state: SessionState, path) -> None:
    """Prompt history as JSON, sufficient for bit-exact replay."""
    payload = {"case_id": state.case_id, "seed": state.seed,
               "prompts": [prompt_to_json(p) for p in state.prompts]}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)


def replay_transcript(path, volume: ImageVolume, predictor,
                      preprocess_record: PreprocessRecord | None = None) -> SessionState:
    with open(path) as f:
        payload = json.load(f)
    state = create_session(volume, predictor, case_id=payload["case_id"],
                           preprocess_record=preprocess_record,
                           seed=payload.get("seed", 0))
    for obj in payload["prompts"]:
        state, _ = add_prompt(state, prompt_from_json(obj))
    return state
