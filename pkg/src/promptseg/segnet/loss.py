"""Dice + binary cross-entropy loss over probability maps."""

from __future__ import annotations

import numpy as np
import torch

EPS = 1e-5


def _as_tensor(x):
    if isinstance(x, torch.Tensor):
        return x
    return torch.from_numpy(np.asarray(x))


def soft_dice(probs, target, eps: float = EPS):
    """Soft Dice coefficient summed over the whole patch: (2*sum(pg)+eps)/(sum(p)+sum(g)+eps)."""
    p = _as_tensor(probs)
    g = _as_tensor(target).to(p.dtype)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch {tuple(p.shape)} vs {tuple(g.shape)}")
    inter = (p * g).sum()
    return (2.0 * inter + eps) / (p.sum() + g.sum() + eps)


def dice_ce_loss(probs, target, w_dice: float = 1.0, w_ce: float = 1.0):
    """Loss = w_dice * (1 - softDice) + w_ce * mean BCE.

    Expects probabilities strictly inside (0, 1); callers clip logits'
    sigmoid output rather than this function silently clamping.
    """
    p = _as_tensor(probs)
    g = _as_tensor(target).to(p.dtype)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch {tuple(p.shape)} vs {tuple(g.shape)}")
    with torch.no_grad():
        pmin, pmax = float(p.min()), float(p.max())
    if pmin <= 0.0 or pmax >= 1.0:
        raise ValueError(f"probabilities must lie in (0, 1), got [{pmin}, {pmax}]")
    dice_term = 1.0 - soft_dice(p, g)
    ce_term = -(g * torch.log(p) + (1.0 - g) * torch.log(1.0 - p)).mean()
    return w_dice * dice_term + w_ce * ce_term


def dice_ce_from_logits(logits: torch.Tensor, target: torch.Tensor,
                        w_dice: float = 1.0, w_ce: float = 1.0):
    """Numerically stable variant used in the training loop."""
    g = target.to(logits.dtype)
    p = torch.sigmoid(logits)
    dice_term = 1.0 - soft_dice(p, g)
    ce_term = torch.nn.functional.binary_cross_entropy_with_logits(logits, g)
    return w_dice * dice_term + w_ce * ce_term
