from dataclasses import replace

import numpy as np
import pytest

from promptseg.promptsim import PointPrompt, Prompt, rasterize_prompt
from promptseg.session import (SessionError, add_prompt, create_session,
                               export_result, replay_transcript,
                               save_transcript, undo)
from promptseg.volgrid import (BinaryMask, Geometry, ImageVolume, preprocess)

from conftest import box_volume


class StampPredictor:
    """Stub: current mask is the union of all positive prompt stamps.

    Records every call so tests can inspect what the session passed in.
    """

    def __init__(self):
        self.calls = []

    def __call__(self, volume, prompts, prev_seg):
        self.calls.append((list(prompts), prev_seg))
        out = np.zeros(volume.data.shape, dtype=np.uint8)
        for p in prompts:
            if p.polarity == "positive":
                out |= rasterize_prompt(p, volume.geometry).data
        mask = BinaryMask(geometry=volume.geometry, data=out)
        return out.astype(np.float64) * 0.9, mask


def _point(center=(16, 16, 16), radius=1, polarity="positive"):
    return Prompt(PointPrompt(center=center, radius=radius), polarity=polarity)


class TestLifecycle:
    def test_fresh_session_has_no_prediction(self):
        state = create_session(box_volume(), StampPredictor())
        assert state.round == 0
        assert state.current_mask is None
        assert state.prompts == ()
        with pytest.raises(SessionError):
            export_result(state)

    def test_baseline_runs_promptless_prediction(self):
        pred = StampPredictor()
        state = create_session(box_volume(), pred, run_baseline=True)
        assert state.round == 1
        assert state.prompts == ()
        assert pred.calls == [([], None)]
        assert state.current_mask.data.sum() == 0

    def test_add_prompt_predicts_stamp(self):
        state = create_session(box_volume(), StampPredictor())
        state, mask = add_prompt(state, _point(radius=1))
        assert state.round == 1
        # radius-1 ball: center plus 6 face neighbours
        assert mask.data.sum() == 7
        assert mask.data[16, 16, 16] == 1

    def test_second_prompt_gets_previous_mask(self):
        pred = StampPredictor()
        state = create_session(box_volume(), pred)
        state, first = add_prompt(state, _point((10, 10, 10)))
        state, second = add_prompt(state, _point((20, 20, 20)))
        prompts, prev = pred.calls[-1]
        assert len(prompts) == 2
        assert prev is first
        assert second.data.sum() == 14

    def test_probability_feedback_mode(self):
        pred = StampPredictor()
        state = create_session(box_volume(), pred, seed=3)
        state = replace(state, use_probabilities=True)
        state, _ = add_prompt(state, _point((10, 10, 10)))
        state, _ = add_prompt(state, _point((20, 20, 20)))
        _, prev = pred.calls[-1]
        assert prev.dtype == np.float32
        assert float(prev.max()) == pytest.approx(0.9)

    def test_out_of_bounds_prompt_rejected(self):
        state = create_session(box_volume(), StampPredictor())
        with pytest.raises(SessionError, match="out of bounds"):
            add_prompt(state, _point((40, 16, 16)))
        # the failed call must not have mutated the state
        assert state.round == 0 and state.prompts == ()


class TestUndo:
    def test_undo_is_exact_inverse(self):
        state0 = create_session(box_volume(), StampPredictor())
        state1, _ = add_prompt(state0, _point((10, 10, 10)))
        state2, _ = add_prompt(state1, _point((20, 20, 20)))
        back = undo(state2)
        assert back.prompts == state1.prompts
        assert back.predictions == state1.predictions

    def test_undo_empty_history_raises(self):
        state = create_session(box_volume(), StampPredictor())
        with pytest.raises(SessionError, match="round 0"):
            undo(state)

    def test_undo_keeps_baseline(self):
        state = create_session(box_volume(), StampPredictor(), run_baseline=True)
        with pytest.raises(SessionError):
            undo(state)
        assert state.round == 1


class TestExport:
    def test_export_maps_back_to_original_geometry(self):
        vol = ImageVolume(geometry=Geometry(shape=(32, 32, 32), spacing=(2.0, 1.0, 1.0)),
                          data=box_volume().data)
        vol_pp, record = preprocess(vol)
        state = create_session(vol_pp, StampPredictor(), preprocess_record=record)
        center = tuple(s // 2 for s in vol_pp.data.shape)
        state, _ = add_prompt(state, _point(center, radius=2))
        restored = export_result(state)
        assert restored.data.shape == (32, 32, 32)
        assert restored.geometry == vol.geometry
        assert restored.data.sum() > 0

    def test_export_without_record_is_identity(self):
        state = create_session(box_volume(), StampPredictor())
        state, mask = add_prompt(state, _point())
        assert np.array_equal(export_result(state).data, mask.data)


class TestTranscript:
    def test_replay_reproduces_masks_exactly(self, tmp_path):
        vol = box_volume()
        state = create_session(vol, StampPredictor(), case_id="abc", seed=11)
        state, _ = add_prompt(state, _point((10, 12, 14)))
        state, _ = add_prompt(state, _point((20, 18, 16), radius=3,
                                            polarity="negative"))
        path = tmp_path / "t.json"
        save_transcript(state, path)

        replayed = replay_transcript(path, vol, StampPredictor())
        assert replayed.case_id == "abc"
        assert replayed.seed == 11
        assert replayed.prompts == state.prompts
        assert np.array_equal(replayed.current_mask.data, state.current_mask.data)
