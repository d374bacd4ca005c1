"""End-to-end acceptance gate.

Each criterion is one test (criterion 5 is three facets of one trained
model) and finishes by printing a single PASS line; a failing assertion
is the FAIL line. Criterion 5 generates datasets and trains a toy network
from scratch, so this module dominates the suite's runtime.
"""

import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import torch

from promptseg import evalkit, rle, segnet, synthgen
from promptseg.evalkit import _preprocess_mask, dice, iou
from promptseg.promptsim import (GuidanceConfig, Prompt, PointPrompt,
                                 encode_guidance, prompt_to_json,
                                 rasterize_prompt, select_slice_weighted,
                                 simulate_prompts, _polygon_is_simple)
from promptseg.segnet.loss import dice_ce_from_logits
from promptseg.server import create_app
from promptseg.synthgen import EASY, HARD, generate_phantom
from promptseg.volgrid import (AugmentConfig, BinaryMask, Geometry,
                               ImageVolume, crop_to_foreground, load_mask,
                               load_volume, preprocess, resample, uncrop,
                               zscore_normalize)

pytestmark = pytest.mark.acceptance


def _passed(n, detail):
    print(f"\nACCEPTANCE CRITERION {n}: PASS ({detail})")


class TestCriterion1MetricOracle:
    def test_dice_iou_equal_brute_force(self):
        t0 = time.time()
        rng = np.random.default_rng(202)
        worst = 0.0
        for _ in range(100):
            a = (rng.uniform(size=(16, 16, 16)) > rng.uniform(0.2, 0.8))
            b = (rng.uniform(size=(16, 16, 16)) > rng.uniform(0.2, 0.8))
            tp = int(np.logical_and(a, b).sum())
            na, nb = int(a.sum()), int(b.sum())
            union = na + nb - tp
            brute_dsc = 1.0 if na + nb == 0 else 2 * tp / (na + nb)
            brute_iou = 1.0 if union == 0 else tp / union
            d, j = dice(a.astype(np.uint8), b.astype(np.uint8)), \
                iou(a.astype(np.uint8), b.astype(np.uint8))
            worst = max(worst, abs(d - brute_dsc), abs(j - brute_iou),
                        abs(j - d / (2 - d)))
            assert abs(d - brute_dsc) < 1e-12
            assert abs(j - brute_iou) < 1e-12
            assert abs(j - d / (2 - d)) < 1e-12
        elapsed = time.time() - t0
        assert elapsed < 5.0
        _passed(1, f"max abs error {worst:.2e} on 100 pairs, {elapsed:.2f}s")


class TestCriterion2PromptValidity:
    def test_thousand_draws_per_type(self):
        t0 = time.time()
        cfg = GuidanceConfig()
        phantoms = []
        for i in range(20):
            rng = np.random.default_rng(300 + i)
            phantoms.append(generate_phantom(EASY, rng)[1])

        rng = np.random.default_rng(99)
        counts = dict.fromkeys(("point", "box", "scribble", "lasso"), 0)
        while min(counts.values()) < 1000:
            gt = phantoms[rng.integers(len(phantoms))]
            for kind in counts:
                for p in simulate_prompts(gt, kind, rng, cfg):
                    counts[kind] += 1
                    if kind == "point":
                        assert gt.data[p.geometry.center] == 1
                    elif kind == "scribble":
                        stamp = rasterize_prompt(p, gt.geometry).data
                        assert int((stamp & ~gt.data).sum()) == 0
                    elif kind == "lasso":
                        assert 4 <= len(p.geometry.vertices) <= 12
                        assert _polygon_is_simple(
                            np.asarray(p.geometry.vertices))
                    else:
                        g = p.geometry
                        plane = gt.data[g.slice]
                        inside = plane[g.min_corner[0]:g.max_corner[0],
                                       g.min_corner[1]:g.max_corner[1]]
                        cover = inside.sum() / max(plane.sum(), 1)
                        assert cover >= 0.9
        elapsed = time.time() - t0
        assert elapsed < 60.0
        _passed(2, f"{counts} valid draws, {elapsed:.1f}s")

    def test_slice_selection_matches_area_weights(self):
        t0 = time.time()
        data = np.zeros((4, 8, 8), dtype=np.uint8)
        data[1, :2, :2] = 1      # area 4
        data[2, :4, :3] = 1      # area 12
        mask = BinaryMask(geometry=Geometry(shape=(4, 8, 8)), data=data)
        rng = np.random.default_rng(0)
        n = 100_000
        draws = np.array([select_slice_weighted(mask, rng) for _ in range(n)])
        for z, p in [(1, 4 / 16), (2, 12 / 16)]:
            freq = (draws == z).mean()
            sigma = np.sqrt(p * (1 - p) / n)
            assert abs(freq - p) < 3 * sigma, f"slice {z}: {freq} vs {p}"
        assert not np.isin(draws, [0, 3]).any()
        elapsed = time.time() - t0
        _passed(2.1, f"area-weighted frequencies within 3 sigma, {elapsed:.1f}s")


class TestCriterion3EncodingContract:
    def test_channel_counts_ranges_and_merge(self):
        t0 = time.time()
        rng = np.random.default_rng(42)
        vol, gt = generate_phantom(EASY, rng)
        vol = zscore_normalize(vol)
        prev = gt

        for layout, n_channels in [("shared", 4), ("per-type", 10)]:
            cfg = GuidanceConfig(layout=layout)
            assert cfg.n_channels == n_channels
            prompts = []
            for kind in ("point", "box", "scribble", "lasso"):
                prompts.extend(simulate_prompts(gt, kind, rng, cfg))
            stack = encode_guidance(prompts, prev, vol, cfg)
            assert stack.shape == (n_channels,) + vol.data.shape
            assert stack[1:].min() >= 0.0 and stack[1:].max() <= 1.0

            # idempotence: encoding the list twice merges to the same stack
            twice = encode_guidance(prompts + prompts, prev, vol, cfg)
            assert np.array_equal(stack, twice)
            # commutativity: order never matters
            perm = [prompts[i] for i in rng.permutation(len(prompts))]
            assert np.array_equal(stack, encode_guidance(perm, prev, vol, cfg))
        elapsed = time.time() - t0
        assert elapsed < 10.0
        _passed(3, f"4/10 channels, [0,1] ranges, max-merge laws, {elapsed:.1f}s")


class TestCriterion4GradientCheck:
    def test_analytic_vs_central_differences(self):
        t0 = time.time()
        torch.manual_seed(0)
        cfg = segnet.NetworkConfig(widths=(4, 8), blocks_per_stage=(1, 1))
        model = segnet.build_network(cfg, 0).double()
        x = torch.randn(2, 4, 4, 4, 4, dtype=torch.float64) * 0.5
        g = (torch.rand(2, 1, 4, 4, 4, dtype=torch.float64) > 0.6).double()

        loss = dice_ce_from_logits(model(x), g)
        loss.backward()

        rng = np.random.default_rng(5)
        h = 1e-5
        checked, worst = 0, 0.0
        for p in model.parameters():
            if p.grad is None:
                continue
            flat, gflat = p.data.view(-1), p.grad.view(-1)
            for idx in rng.choice(flat.numel(), size=min(4, flat.numel()),
                                  replace=False):
                analytic = float(gflat[idx])
                if abs(analytic) < 1e-6:
                    continue  # below the finite-difference noise floor
                orig = float(flat[idx])
                with torch.no_grad():
                    flat[idx] = orig + h
                    lp = float(dice_ce_from_logits(model(x), g))
                    flat[idx] = orig - h
                    lm = float(dice_ce_from_logits(model(x), g))
                    flat[idx] = orig
                fd = (lp - lm) / (2 * h)
                rel = abs(fd - analytic) / max(abs(fd), abs(analytic), 1e-8)
                worst = max(worst, rel)
                assert rel < 1e-4, f"analytic {analytic}, fd {fd}"
                checked += 1
        assert checked >= 20
        elapsed = time.time() - t0
        assert elapsed < 60.0
        _passed(4, f"{checked} parameters, worst rel err {worst:.2e}, "
                   f"{elapsed:.1f}s")


class TestCriterion6PreprocessingInvariants:
    def test_all_invariants(self, rng):
        t0 = time.time()
        data = rng.uniform(10.0, 50.0, size=(24, 24, 24))
        vol = ImageVolume(geometry=Geometry(shape=(24, 24, 24)), data=data)
        z = zscore_normalize(vol)
        assert abs(z.data.mean()) < 1e-6 and abs(z.data.std() - 1.0) < 1e-6

        same = resample(vol, (1.0, 1.0, 1.0))
        assert np.array_equal(same.data, vol.data)

        from conftest import ellipsoid_mask
        mask = ellipsoid_mask(shape=(64, 64, 64), radii=(18, 22, 16))
        coarse = resample(mask, (2.0, 2.0, 2.0), mode="nearest")
        back = resample(coarse, (1.0, 1.0, 1.0), mode="nearest")
        trimmed = back.data[:64, :64, :64]
        d = dice(trimmed, mask.data)
        assert d >= 0.95

        body = np.zeros((32, 32, 32), dtype=np.float64)
        body[8:24, 6:26, 10:20] = 5.0
        boxed = ImageVolume(geometry=Geometry(shape=(32, 32, 32)), data=body)
        cropped, record = crop_to_foreground(boxed)
        restored = uncrop(
            BinaryMask(geometry=cropped.geometry,
                       data=(cropped.data > 0).astype(np.uint8)), record)
        assert np.array_equal(restored.data, (body > 0).astype(np.uint8))
        elapsed = time.time() - t0
        assert elapsed < 30.0
        _passed(6, f"z-score, identity resample, round-trip dice {d:.3f}, "
                   f"crop/uncrop, {elapsed:.1f}s")


class TestCriterion7ServiceContract:
    def test_scripted_client_flow(self, tmp_path):
        from fastapi.testclient import TestClient
        from promptseg.volgrid import save_volume

        t0 = time.time()

        def stamp(volume, prompts, prev_seg):
            out = np.zeros(volume.data.shape, dtype=np.uint8)
            for p in prompts:
                if p.polarity == "positive":
                    out |= rasterize_prompt(p, volume.geometry).data
            return out.astype(np.float64), \
                BinaryMask(geometry=volume.geometry, data=out)

        client = TestClient(create_app(stamp))
        rng = np.random.default_rng(77)
        volume, _ = generate_phantom(EASY, rng)
        case = tmp_path / "case.nii.gz"
        save_volume(volume, case)

        info = client.post("/v1/sessions", content=case.read_bytes()).json()
        sid = info["session_id"]
        cz, cy, cx = (s // 2 for s in info["shape"])
        prompts = [
            {"kind": "point", "polarity": "positive",
             "center": [cz, cy, cx], "radius": 3},
            {"kind": "box", "polarity": "positive", "slice": cz,
             "min": [cy - 5, cx - 5], "max": [cy + 5, cx + 5]},
            {"kind": "scribble", "polarity": "positive", "slice": cz,
             "vertices": [[cy - 3, cx - 3], [cy, cx], [cy + 3, cx + 2]],
             "thickness": 1},
            {"kind": "lasso", "polarity": "positive", "slice": cz,
             "vertices": [[cy - 4, cx - 4], [cy - 4, cx + 4],
                          [cy + 4, cx + 4], [cy + 4, cx - 4]]},
        ]
        for i, prompt in enumerate(prompts, start=1):
            r = client.post(f"/v1/sessions/{sid}/prompts", json=prompt)
            assert r.status_code == 200, r.text
            assert r.json()["round"] == i

        payload = client.get(f"/v1/sessions/{sid}/mask").json()
        decoded = rle.decode(payload)
        assert rle.encode(decoded) == payload  # round-trip exact
        assert decoded.sum() > 0

        exported = client.get(f"/v1/sessions/{sid}/export")
        assert exported.status_code == 200
        out = tmp_path / "mask.nii.gz"
        out.write_bytes(exported.content)
        mask = load_volume(out)
        assert mask.data.shape == volume.data.shape
        assert mask.geometry.spacing == volume.geometry.spacing

        for remaining in (3, 2, 1, 0):
            assert client.post(f"/v1/sessions/{sid}/undo").json()["round"] \
                == remaining
        assert client.post(f"/v1/sessions/{sid}/undo").status_code == 409

        # replaying the transcript gives byte-identical RLE
        sid2 = client.post("/v1/sessions",
                           content=case.read_bytes()).json()["session_id"]
        for prompt in prompts:
            assert client.post(f"/v1/sessions/{sid2}/prompts",
                               json=prompt).status_code == 200
        replayed = client.get(f"/v1/sessions/{sid2}/mask")
        for prompt in prompts:  # restore the first session to compare
            client.post(f"/v1/sessions/{sid}/prompts", json=prompt)
        original = client.get(f"/v1/sessions/{sid}/mask")
        assert replayed.content == original.content

        elapsed = time.time() - t0
        assert elapsed < 60.0
        _passed(7, f"upload/4 prompts/RLE/undo/export/replay, {elapsed:.1f}s")


# --------------------------------------------------------------------------
# criterion 5: toy end-to-end


@pytest.fixture(scope="session")
def toy_run(tmp_path_factory):
    """Generate 200/50 easy + 20 hard-val phantoms, train the toy network."""
    root = tmp_path_factory.mktemp("toy")
    synthgen.generate_dataset(EASY, 200, 50, root / "easy")
    synthgen.generate_dataset(replace(HARD, seed=1), 0, 20, root / "hard")

    def cases(directory, split):
        manifest = synthgen.load_manifest(directory)
        return [(e["id"],
                 load_volume(Path(directory) / f"{e['id']}_img.nii.gz"),
                 load_mask(Path(directory) / f"{e['id']}_gt.nii.gz"))
                for e in manifest["cases"] if e["split"] == split]

    def preprocessed(case_list):
        out = []
        for _, volume, gt in case_list:
            vol_pp, record = preprocess(volume)
            out.append((vol_pp, _preprocess_mask(gt, record)))
        return out

    guidance_cfg = GuidanceConfig()
    net_cfg = segnet.NetworkConfig(widths=(8, 16, 32))
    train_cfg = segnet.TrainConfig.toy(rounds=2, seed=0)

    t0 = time.time()
    model, history = segnet.train(
        preprocessed(cases(root / "easy", "train")), net_cfg, train_cfg,
        guidance_cfg, val_dataset=preprocessed(cases(root / "easy", "val")),
        augment_cfg=AugmentConfig())
    train_seconds = time.time() - t0

    predictor = segnet.SlidingWindowPredictor(model, guidance_cfg,
                                              patch_size=(32, 32, 32))
    return {
        "predictor": predictor,
        "hard_val": cases(root / "hard", "val"),
        "train_seconds": train_seconds,
        "history": history,
    }


class TestCriterion5ToyEndToEnd:
    def test_training_fits_the_budget(self, toy_run):
        assert toy_run["train_seconds"] <= 30 * 60
        _passed("5 (budget)",
                f"toy training took {toy_run['train_seconds']:.0f}s")

    def test_point_prompts_beat_unprompted_by_5_dsc(self, toy_run):
        none = evalkit.run_benchmark(toy_run["predictor"], toy_run["hard_val"],
                                     "none", seed=0)
        point = evalkit.run_benchmark(toy_run["predictor"], toy_run["hard_val"],
                                      "point", seed=0)
        gap = point["summary"]["dsc_mean"] - none["summary"]["dsc_mean"]
        assert gap >= 0.05, \
            f"point {point['summary']['dsc_mean']:.3f} vs " \
            f"none {none['summary']['dsc_mean']:.3f}"
        _passed("5a", f"point {100 * point['summary']['dsc_mean']:.1f} vs "
                      f"none {100 * none['summary']['dsc_mean']:.1f} DSC "
                      f"(+{100 * gap:.1f})")

    def test_second_round_does_not_regress(self, toy_run):
        r1 = evalkit.run_benchmark(toy_run["predictor"], toy_run["hard_val"],
                                   "point", rounds=1, seed=0)
        r2 = evalkit.run_benchmark(toy_run["predictor"], toy_run["hard_val"],
                                   "point", rounds=2, seed=0)
        assert r2["summary"]["dsc_mean"] >= r1["summary"]["dsc_mean"]
        _passed("5b", f"round-2 {100 * r2['summary']['dsc_mean']:.1f} >= "
                      f"round-1 {100 * r1['summary']['dsc_mean']:.1f} DSC")

    def test_reports_are_byte_identical(self, toy_run):
        a = evalkit.report_to_json(
            evalkit.run_benchmark(toy_run["predictor"], toy_run["hard_val"],
                                  "point", seed=3))
        b = evalkit.report_to_json(
            evalkit.run_benchmark(toy_run["predictor"], toy_run["hard_val"],
                                  "point", seed=3))
        assert a.encode() == b.encode()
        _passed("5c", f"identical {len(a)}-byte reports across two runs")
