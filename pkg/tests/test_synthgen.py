import json

import numpy as np
import pytest
from scipy import ndimage

from promptseg.synthgen import (EASY, HARD, PhantomConfig, generate_dataset,
                                generate_phantom, load_manifest)


class TestGeneratePhantom:
    def test_deterministic(self):
        cfg = PhantomConfig(seed=3)
        a = generate_phantom(cfg, np.random.default_rng(42))
        b = generate_phantom(cfg, np.random.default_rng(42))
        np.testing.assert_array_equal(a[0].data, b[0].data)
        np.testing.assert_array_equal(a[1].data, b[1].data)

    def test_noiseless_separation(self):
        cfg = PhantomConfig(noise_sigma=0.0, contrast_range=(1.0, 1.0),
                            rim_probability=0.0)
        img, mask = generate_phantom(cfg, np.random.default_rng(0))
        fg = img.data[mask.data > 0]
        bg = img.data[mask.data == 0]
        assert fg.min() > bg.max()

    def test_component_count_matches_tumor_count(self):
        for seed in range(10):
            img, mask = generate_phantom(PhantomConfig(), np.random.default_rng(seed))
            _, n = ndimage.label(mask.data)
            assert n in (1, 2)
            assert mask.count() > 0

    def test_volume_fraction_bounds(self):
        # single ellipsoid, radii in [4, 10]: volume between 4/3*pi*4^3 and
        # 4/3*pi*10^3 voxels of a 64^3 grid -> fraction in [0.03%, 2.5%]
        cfg = PhantomConfig(tumor_count_range=(1, 1), rim_probability=0.0)
        for seed in range(200):
            _, mask = generate_phantom(cfg, np.random.default_rng(seed))
            frac = mask.count() / 64 ** 3
            assert 0.0003 <= frac <= 0.025

    def test_hard_preset_lobulated_still_connected(self):
        for seed in range(10):
            _, mask = generate_phantom(HARD, np.random.default_rng(seed))
            _, n = ndimage.label(mask.data)
            assert 1 <= n <= 2


class TestGenerateDataset:
    def test_manifest_counts_and_splits(self, tmp_path):
        manifest = generate_dataset(PhantomConfig(seed=1), 3, 2, tmp_path)
        assert len(manifest["cases"]) == 5
        train = {c["id"] for c in manifest["cases"] if c["split"] == "train"}
        val = {c["id"] for c in manifest["cases"] if c["split"] == "val"}
        assert len(train) == 3 and len(val) == 2
        assert not train & val
        for c in manifest["cases"]:
            assert (tmp_path / f"{c['id']}_img.nii.gz").exists()
            assert (tmp_path / f"{c['id']}_gt.nii.gz").exists()

    def test_rerun_identical_files(self, tmp_path):
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        generate_dataset(PhantomConfig(seed=5), 2, 1, a_dir)
        generate_dataset(PhantomConfig(seed=5), 2, 1, b_dir)
        for f in sorted(a_dir.iterdir()):
            assert f.read_bytes() == (b_dir / f.name).read_bytes()

    def test_load_manifest(self, tmp_path):
        generate_dataset(PhantomConfig(seed=2), 1, 1, tmp_path)
        manifest = load_manifest(tmp_path)
        assert manifest["seed"] == 2

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_manifest(tmp_path / "nowhere")
