"""Training loop: SGD with Nesterov momentum, poly LR decay, simulated prompts."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, field

import numpy as np
import torch

from ..promptsim import (GuidanceConfig, PointPrompt, Prompt, encode_guidance,
                         simulate_prompts)
from ..volgrid import AugmentConfig, BinaryMask, Geometry, ImageVolume, augment
from .loss import dice_ce_from_logits
from .model import NetworkConfig, build_network
from .weights import config_fingerprint


@dataclass(frozen=True)
class TrainConfig:
    patch_size: tuple[int, int, int] = (128, 128, 128)
    batch_size: int = 8
    epochs: int = 100
    steps_per_epoch: int = 250
    base_lr: float = 1e-2
    momentum: float = 0.9
    nesterov: bool = True
    poly_exponent: float = 0.9
    weight_decay: float = 0.0
    fg_bias: float = 0.7
    prompt_weights: dict = field(default_factory=lambda: {
        "point": 1.0, "box": 1.0, "lasso": 1.0, "scribble": 1.0})
    rounds: int = 1
    augment_prob: float = 0.5
    val_cases_per_epoch: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.base_lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")

    @classmethod
    def toy(cls, **overrides):
        """Desk-scale preset: minutes on a CPU instead of days on a GPU."""
        defaults = dict(patch_size=(32, 32, 32), batch_size=2, epochs=16,
                        steps_per_epoch=150, val_cases_per_epoch=8)
        defaults.update(overrides)
        return cls(**defaults)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict):
        d = dict(d)
        if "patch_size" in d:
            d["patch_size"] = tuple(d["patch_size"])
        return cls(**d)


def poly_lr(epoch: int, cfg: TrainConfig) -> float:
    """lr(e) = lr0 * (1 - e/E)^exponent; monotone, 0 at the final epoch."""
    frac = 1.0 - epoch / cfg.epochs
    return cfg.base_lr * max(frac, 0.0) ** cfg.poly_exponent


def _extract_patch(data: np.ndarray, start, size, pad_value=0.0):
    out = np.full(tuple(size), pad_value, dtype=data.dtype)
    src = tuple(slice(max(s, 0), min(s + p, n))
                for s, p, n in zip(start, size, data.shape))
    dst = tuple(slice(sl.start - s, sl.stop - s) for sl, s in zip(src, start))
    out[dst] = data[src]
    return out


def _sample_patch(volume: ImageVolume, mask: BinaryMask, cfg: TrainConfig,
                  rng: np.random.Generator):
    shape = volume.data.shape
    size = cfg.patch_size
    fg = np.argwhere(mask.data > 0)
    if len(fg) > 0 and rng.uniform() < cfg.fg_bias:
        # place the chosen foreground voxel uniformly inside the patch, not
        # dead center: a centered crop would let position stand in for the
        # label and the guidance channels would never be consulted
        center = fg[rng.integers(len(fg))]
        start = [int(c) - int(rng.integers(p // 4, p - p // 4 + 1))
                 for c, p in zip(center, size)]
    else:
        start = [int(rng.integers(0, max(n - p, 0) + 1)) for n, p in zip(shape, size)]
    start = [min(max(s, 0), max(n - p, 0)) for s, n, p in zip(start, shape, size)]
    img = _extract_patch(volume.data, start, size)
    tgt = _extract_patch(mask.data, start, size, pad_value=0)
    geom = Geometry(shape=tuple(size))
    return ImageVolume(geometry=geom, data=img), BinaryMask(geometry=geom, data=tgt)


def _draw_prompt_kind(cfg: TrainConfig, rng: np.random.Generator) -> str:
    kinds = sorted(cfg.prompt_weights)
    weights = np.array([cfg.prompt_weights[k] for k in kinds], dtype=np.float64)
    return kinds[int(rng.choice(len(kinds), p=weights / weights.sum()))]


def sample_training_instance(volume: ImageVolume, mask: BinaryMask,
                             train_cfg: TrainConfig, guidance_cfg: GuidanceConfig,
                             rng: np.random.Generator, model=None,
                             augment_cfg: AugmentConfig | None = None):
    """One (guidance stack, target) patch pair with simulated interactions.

    Round 1 encodes prompts drawn from ground truth with an empty previous
    segmentation. With rounds > 1 and a model supplied, half the instances
    instead mimic a refinement step: the model's own round-1 prediction
    becomes the previous-segmentation channel and one corrective positive
    point is drawn from the false-negative region.
    """
    img_p, tgt_p = _sample_patch(volume, mask, train_cfg, rng)
    if augment_cfg is not None and rng.uniform() < train_cfg.augment_prob:
        img_p, tgt_p = augment(img_p, tgt_p, augment_cfg, rng)

    kind = _draw_prompt_kind(train_cfg, rng)
    prompts: list[Prompt] = []
    if kind != "none" and tgt_p.count() >= 8:
        try:
            prompts = simulate_prompts(tgt_p, kind, rng, guidance_cfg)
        except Exception:
            prompts = []  # tiny or awkward patch foreground: train promptless

    stack = encode_guidance(prompts, None, img_p, guidance_cfg)

    if train_cfg.rounds > 1 and model is not None and rng.uniform() < 0.5:
        pred = model.predict_logits(stack) > 0
        fn = np.argwhere((tgt_p.data > 0) & ~pred)
        fp = np.argwhere((tgt_p.data == 0) & pred)
        # corrective click in an error region, weighted by region size:
        # positive in a miss, negative in a spurious blob
        total = len(fn) + len(fp)
        if total > 0:
            use_fn = rng.uniform() < len(fn) / total
            region, polarity = (fn, "positive") if use_fn else (fp, "negative")
            z, y, x = region[rng.integers(len(region))]
            prompts = prompts + [Prompt(PointPrompt(
                center=(int(z), int(y), int(x)),
                radius=int(rng.integers(guidance_cfg.point_radius_range[0],
                                        guidance_cfg.point_radius_range[1] + 1))),
                polarity=polarity)]
        prev = pred.astype(np.uint8)
        stack = encode_guidance(prompts, prev, img_p, guidance_cfg)

    return stack, tgt_p.data.astype(np.float32)


def train(dataset, net_cfg: NetworkConfig, train_cfg: TrainConfig,
          guidance_cfg: GuidanceConfig, val_dataset=None,
          augment_cfg: AugmentConfig | None = None, log=None,
          initial_model=None):
    """Train on preprocessed (volume, mask) pairs; returns (model, history).

    Checkpoints the best-validation state in memory and restores it at the
    end when a validation set is given.
    """
    if not dataset:
        raise ValueError("empty training dataset")
    if guidance_cfg.n_channels != net_cfg.in_channels:
        raise ValueError(
            f"network expects {net_cfg.in_channels} channels but guidance layout "
            f"produces {guidance_cfg.n_channels}")

    rng = np.random.default_rng(train_cfg.seed)
    torch.manual_seed(train_cfg.seed)
    model = initial_model if initial_model is not None \
        else build_network(net_cfg, train_cfg.seed)
    opt = torch.optim.SGD(model.parameters(), lr=train_cfg.base_lr,
                          momentum=train_cfg.momentum, nesterov=train_cfg.nesterov,
                          weight_decay=train_cfg.weight_decay)

    history = {"train_loss": [], "val_dsc": [], "lr": []}
    best_dsc, best_state = -1.0, None

    for epoch in range(train_cfg.epochs):
        lr = poly_lr(epoch, train_cfg)
        for group in opt.param_groups:
            group["lr"] = lr
        model.train()
        losses = []
        for _ in range(train_cfg.steps_per_epoch):
            stacks, targets = [], []
            for _ in range(train_cfg.batch_size):
                case = dataset[int(rng.integers(len(dataset)))]
                s, t = sample_training_instance(case[0], case[1], train_cfg,
                                                guidance_cfg, rng, model=model,
                                                augment_cfg=augment_cfg)
                stacks.append(s)
                targets.append(t)
            x = torch.from_numpy(np.stack(stacks))
            g = torch.from_numpy(np.stack(targets))[:, None]
            model.train()
            opt.zero_grad()
            loss = dice_ce_from_logits(model(x), g)
            if not torch.isfinite(loss):
                raise RuntimeError(f"training diverged at epoch {epoch}: loss {loss}")
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
        mean_loss = float(np.mean(losses))
        history["train_loss"].append(mean_loss)
        history["lr"].append(lr)

        val_dsc = float("nan")
        if val_dataset:
            val_dsc = _validate(model, val_dataset, train_cfg, guidance_cfg, epoch)
            if val_dsc >= best_dsc:
                best_dsc = val_dsc
                best_state = {k: v.detach().clone()
                              for k, v in model.state_dict().items()}
        history["val_dsc"].append(val_dsc)
        if log is not None:
            log(f"epoch {epoch + 1}/{train_cfg.epochs}  "
                f"loss {mean_loss:.4f}  val_dsc {val_dsc:.4f}  lr {lr:.5f}")

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    history["fingerprint"] = config_fingerprint(net_cfg)
    return model, history


def _validate(model, val_dataset, train_cfg, guidance_cfg, epoch) -> float:
    """Mean patch-level DSC with a single simulated point prompt."""
    rng = np.random.default_rng(10_000 + epoch)
    n = min(train_cfg.val_cases_per_epoch, len(val_dataset))
    scores = []
    model.eval()
    for volume, mask in val_dataset[:n]:
        img_p, tgt_p = _sample_patch(volume, mask, train_cfg, rng)
        prompts = []
        if tgt_p.count() >= 8:
            prompts = simulate_prompts(tgt_p, "point", rng, guidance_cfg)
        stack = encode_guidance(prompts, None, img_p, guidance_cfg)
        pred = model.predict_logits(stack) > 0
        gt = tgt_p.data > 0
        denom = pred.sum() + gt.sum()
        scores.append(1.0 if denom == 0 else 2.0 * (pred & gt).sum() / denom)
    return float(np.mean(scores))
