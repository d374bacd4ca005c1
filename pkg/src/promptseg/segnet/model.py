"""Residual encoder-decoder 3D U-Net with a sigmoid head."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
import torch
from torch import nn


@dataclass(frozen=True)
class NetworkConfig:
    in_channels: int = 4                     # 4 shared layout, 10 per-type
    widths: tuple[int, ...] = (16, 32, 64)   # one entry per encoder stage
    blocks_per_stage: tuple[int, ...] = (1, 1, 1)
    kernel_size: int = 3
    norm: str = "instance"
    nonlin: str = "leaky_relu"

    def __post_init__(self):
        if len(self.widths) != len(self.blocks_per_stage):
            raise ValueError("widths and blocks_per_stage must have equal length")
        if any(a > b for a, b in zip(self.widths, self.widths[1:])):
            raise ValueError("encoder widths must be non-decreasing")
        if self.norm not in ("instance", "batch", "none"):
            raise ValueError(f"unknown norm {self.norm!r}")

    @property
    def n_stages(self) -> int:
        return len(self.widths)

    @property
    def downsample_factor(self) -> int:
        return 2 ** (self.n_stages - 1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        d = dict(d)
        d["widths"] = tuple(d["widths"])
        d["blocks_per_stage"] = tuple(d["blocks_per_stage"])
        return cls(**d)


# full-scale residual-encoder preset; not the desk-scale test target
RESENC_L = NetworkConfig(widths=(32, 64, 128, 256, 320, 320),
                         blocks_per_stage=(1, 3, 4, 6, 6, 6))


def _norm(kind, channels):
    if kind == "instance":
        return nn.InstanceNorm3d(channels, affine=True)
    if kind == "batch":
        return nn.BatchNorm3d(channels)
    return nn.Identity()


def _nonlin(kind):
    return nn.LeakyReLU(0.01, inplace=True) if kind == "leaky_relu" else nn.ReLU(inplace=True)


class ResidualBlock(nn.Module):
    def __init__(self, channels, cfg: NetworkConfig):
        super().__init__()
        k = cfg.kernel_size
        p = k // 2
        self.conv1 = nn.Conv3d(channels, channels, k, padding=p)
        self.norm1 = _norm(cfg.norm, channels)
        self.conv2 = nn.Conv3d(channels, channels, k, padding=p)
        self.norm2 = _norm(cfg.norm, channels)
        self.act = _nonlin(cfg.nonlin)

    def forward(self, x):
        h = self.act(self.norm1(self.conv1(x)))
        h = self.norm2(self.conv2(h))
        return self.act(h + x)


class ResidualUNet3D(nn.Module):
    """Encoder-decoder with residual encoder blocks and skip connections.

    Input (B, C, D, H, W) with spatial dims divisible by the total
    downsampling factor; output logits (B, 1, D, H, W).
    """

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        k, p = cfg.kernel_size, cfg.kernel_size // 2

        self.stem = nn.Sequential(
            nn.Conv3d(cfg.in_channels, cfg.widths[0], k, padding=p),
            _norm(cfg.norm, cfg.widths[0]), _nonlin(cfg.nonlin))

        self.enc_stages = nn.ModuleList()
        self.downs = nn.ModuleList()
        for i, (w, nb) in enumerate(zip(cfg.widths, cfg.blocks_per_stage)):
            self.enc_stages.append(nn.Sequential(
                *[ResidualBlock(w, cfg) for _ in range(nb)]))
            if i < cfg.n_stages - 1:
                self.downs.append(nn.Sequential(
                    nn.Conv3d(w, cfg.widths[i + 1], k, stride=2, padding=p),
                    _norm(cfg.norm, cfg.widths[i + 1]), _nonlin(cfg.nonlin)))

        self.ups = nn.ModuleList()
        self.dec_stages = nn.ModuleList()
        for i in range(cfg.n_stages - 1, 0, -1):
            self.ups.append(nn.ConvTranspose3d(cfg.widths[i], cfg.widths[i - 1],
                                               kernel_size=2, stride=2))
            self.dec_stages.append(nn.Sequential(
                nn.Conv3d(2 * cfg.widths[i - 1], cfg.widths[i - 1], k, padding=p),
                _norm(cfg.norm, cfg.widths[i - 1]), _nonlin(cfg.nonlin),
                ResidualBlock(cfg.widths[i - 1], cfg)))

        self.head = nn.Conv3d(cfg.widths[0], 1, kernel_size=1)

    def forward(self, x):
        if x.shape[1] != self.cfg.in_channels:
            raise ValueError(
                f"expected {self.cfg.in_channels} input channels, got {x.shape[1]}")
        f = self.cfg.downsample_factor
        if any(s % f for s in x.shape[2:]):
            raise ValueError(
                f"spatial shape {tuple(x.shape[2:])} not divisible by {f}")
        h = self.stem(x)
        skips = []
        for i, stage in enumerate(self.enc_stages):
            h = stage(h)
            if i < len(self.downs):
                skips.append(h)
                h = self.downs[i](h)
        for up, dec, skip in zip(self.ups, self.dec_stages, reversed(skips)):
            h = up(h)
            h = dec(torch.cat([h, skip], dim=1))
        return self.head(h)

    @torch.no_grad()
    def predict_logits(self, stack: np.ndarray) -> np.ndarray:
        """Logits for one (C, D, H, W) stack, padding to a valid shape as needed."""
        self.eval()
        f = self.cfg.downsample_factor
        spatial = stack.shape[1:]
        padded = [int(-(-s // f)) * f for s in spatial]
        pad = [(0, p - s) for s, p in zip(spatial, padded)]
        x = np.pad(stack, [(0, 0)] + pad)
        t = torch.from_numpy(x[None]).to(next(self.parameters()).dtype)
        out = self.forward(t)[0, 0].numpy()
        return out[: spatial[0], : spatial[1], : spatial[2]]


def build_network(cfg: NetworkConfig, rng: np.random.Generator | int | None = None
                  ) -> ResidualUNet3D:
    """Construct the network with seed-deterministic initialization."""
    if rng is not None:
        seed = rng if isinstance(rng, int) else int(rng.integers(2 ** 31 - 1))
        torch.manual_seed(seed)
    return ResidualUNet3D(cfg)
