"""Weights archive: parameter tensors + config fingerprint + metadata."""

from __future__ import annotations

import hashlib
import json

import torch

from .model import NetworkConfig, ResidualUNet3D


class WeightsError(RuntimeError):
    pass


def config_fingerprint(cfg: NetworkConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def save_weights(model: ResidualUNet3D, path, metadata: dict | None = None) -> None:
    torch.save({
        "state_dict": model.state_dict(),
        "config": model.cfg.to_dict(),
        "fingerprint": config_fingerprint(model.cfg),
        "metadata": metadata or {},
    }, path)


def load_weights(path, expected_config: NetworkConfig | None = None
                 ) -> tuple[ResidualUNet3D, dict]:
    """Rebuild the model from an archive; rejects fingerprint mismatches."""
    try:
        blob = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise WeightsError(f"cannot read weights file {path}: {e}") from e
    for key in ("state_dict", "config", "fingerprint"):
        if key not in blob:
            raise WeightsError(f"{path}: missing {key!r}, not a weights archive")
    cfg = NetworkConfig.from_dict(blob["config"])
    if config_fingerprint(cfg) != blob["fingerprint"]:
        raise WeightsError(f"{path}: config fingerprint mismatch, archive corrupt")
    if expected_config is not None and expected_config != cfg:
        raise WeightsError(
            f"{path}: archive config does not match the requested config")
    model = ResidualUNet3D(cfg)
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model, blob.get("metadata", {})
