"""Reference kernels for every training objective, with analytic gradients.

All losses operate on (H, W, 4) straight-alpha masks and return
(scalar, gradient-w.r.t.-prediction). Sums run over pixels (not means),
matching the objective definitions; pass normalize=True for per-pixel means.
The neural lip color regressor is stood in for by the exact masked-mean
estimator, which any differentiable estimator can replace.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np


def _check_dims(pred: np.ndarray, gt: np.ndarray) -> None:
    if pred.shape != gt.shape:
        raise ValueError(f"pred shape {pred.shape} != gt shape {gt.shape}")


def recon_alpha_weighted(
    pred: np.ndarray, gt: np.ndarray, normalize: bool = False
) -> tuple[float, np.ndarray]:
    """L1 RGB error weighted by the ground-truth alpha channel.

    Pixels the ground truth marks transparent contribute nothing, so the
    predictor is never penalized for colors under zero-opacity makeup.
    """
    _check_dims(pred, gt)
    w = gt[..., 3:4]
    diff = pred[..., :3] - gt[..., :3]
    loss = float(np.sum(w * np.abs(diff)))
    grad = np.zeros_like(pred)
    grad[..., :3] = w * np.sign(diff)
    if normalize:
        n = pred.shape[0] * pred.shape[1]
        return loss / n, grad / n
    return loss, grad


def alpha_l1(pred: np.ndarray, gt: np.ndarray, normalize: bool = False) -> tuple[float, np.ndarray]:
    """L1 loss between alpha channels."""
    _check_dims(pred, gt)
    diff = pred[..., 3] - gt[..., 3]
    loss = float(np.sum(np.abs(diff)))
    grad = np.zeros_like(pred)
    grad[..., 3] = np.sign(diff)
    if normalize:
        n = pred.shape[0] * pred.shape[1]
        return loss / n, grad / n
    return loss, grad


def masked_mean_color(
    mask: np.ndarray, M: np.ndarray, include_alpha: bool = False
) -> np.ndarray:
    """Mean color of the mask over the binary lip mask's support.

    Returns an RGB triple; include_alpha=True appends the mean alpha (the
    objective's channel sum is ambiguous there, RGB-only is the default).
    """
    M = np.asarray(M, dtype=np.float64)
    n = float(M.sum())
    if n <= 0.0:
        raise ValueError("empty lip mask")
    channels = 4 if include_alpha else 3
    return (mask[..., :channels] * M[..., None]).sum(axis=(0, 1)) / n


class MaskedMeanColor:
    """Reference color estimator: the exact masked mean, with known gradient.

    Stands in for a trained regressor; trained on this target its loss is
    identically zero, so only the transfer objective below is meaningful.
    """

    def __init__(self, include_alpha: bool = False):
        self.include_alpha = include_alpha

    def estimate(self, mask: np.ndarray, M: np.ndarray) -> np.ndarray:
        return masked_mean_color(mask, M, self.include_alpha)

    def grad(self, mask: np.ndarray, M: np.ndarray, upstream: np.ndarray) -> np.ndarray:
        M = np.asarray(M, dtype=np.float64)
        n = float(M.sum())
        g = np.zeros_like(mask)
        channels = 4 if self.include_alpha else 3
        for c in range(channels):
            g[..., c] = upstream[c] * M / n
        return g


def lip_color_loss(
    pred: np.ndarray,
    gt: np.ndarray,
    M: np.ndarray,
    estimator: MaskedMeanColor | None = None,
) -> tuple[float, np.ndarray]:
    """Euclidean distance between estimator outputs on pred and gt lip pixels.

    The estimator is frozen: gradient flows through it into pred only.
    """
    _check_dims(pred, gt)
    est = estimator or MaskedMeanColor()
    cp = est.estimate(pred, M)
    cg = est.estimate(gt, M)
    d = cp - cg
    loss = float(np.linalg.norm(d))
    if loss == 0.0:
        return 0.0, np.zeros_like(pred)
    return loss, est.grad(pred, M, d / loss)


def lip_color_loss_noreg(
    pred: np.ndarray, gt: np.ndarray, M: np.ndarray
) -> tuple[float, np.ndarray]:
    """Regressor-free ablation: distance between masked mean colors directly."""
    _check_dims(pred, gt)
    M = np.asarray(M, dtype=np.float64)
    n = float(M.sum())
    if n <= 0.0:
        raise ValueError("empty lip mask")
    d = masked_mean_color(pred, M) - masked_mean_color(gt, M)
    loss = float(np.linalg.norm(d))
    grad = np.zeros_like(pred)
    if loss == 0.0:
        return 0.0, grad
    up = d / loss
    for c in range(3):
        grad[..., c] = up[c] * M / n
    return loss, grad


def adversarial_bce(logits: np.ndarray, target_real: bool) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy with logits, in the stable log-sum-exp form."""
    z = np.asarray(logits, dtype=np.float64)
    t = 1.0 if target_real else 0.0
    loss = float(np.mean(np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))))
    sig = 1.0 / (1.0 + np.exp(-z))
    grad = (sig - t) / z.size
    return loss, grad


@dataclass(frozen=True)
class PartWeights:
    """Loss weights for one facial part (defaults from the training recipe)."""

    recon: float = 100.0
    alpha: float = 100.0
    adv: float = 10.0
    col: float = 0.0  # lip model only

    def __post_init__(self):
        if min(self.recon, self.alpha, self.adv, self.col) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class PartLosses:
    recon: float
    alpha: float
    adv_g: float
    adv_d: float
    col: float = 0.0


PARTS = ("lip", "eye", "cheek")


def default_part_weights() -> dict[str, PartWeights]:
    return {
        "lip": PartWeights(col=50.0),
        "eye": PartWeights(),
        "cheek": PartWeights(),
    }


def total_loss(
    part_losses: dict[str, PartLosses], weights: dict[str, PartWeights] | None = None
) -> float:
    """Weighted sum over facial parts; the color term applies to the lip part."""
    weights = weights or default_part_weights()
    total = 0.0
    for part, L in part_losses.items():
        w = weights[part]
        total += (
            w.recon * L.recon
            + w.alpha * L.alpha
            + w.col * L.col
            + w.adv * (L.adv_g + L.adv_d)
        )
    return total


# ---------------------------------------------------------------------------
# Gradient oracle
# ---------------------------------------------------------------------------

def finite_diff_check(lossfn, x: np.ndarray, step: float = 1e-3, max_coords: int | None = None,
                      rng: np.random.Generator | None = None) -> float:
    """Max relative error between analytic gradient and central differences.

    lossfn maps an array to (scalar, gradient). For L1-style losses the caller
    must keep x away from kinks (|pred - gt| >= 10 * step); see
    nudge_off_kinks.
    """
    _, grad = lossfn(x)
    flat = x.ravel()
    idxs = np.arange(flat.size)
    if max_coords is not None and flat.size > max_coords:
        rng = rng or np.random.default_rng(0)
        idxs = rng.choice(flat.size, size=max_coords, replace=False)
    worst = 0.0
    g = grad.ravel()
    for i in idxs:
        orig = flat[i]
        flat[i] = orig + step
        lo_p, _ = lossfn(x)
        flat[i] = orig - step
        lo_m, _ = lossfn(x)
        flat[i] = orig
        fd = (lo_p - lo_m) / (2.0 * step)
        denom = max(abs(fd), abs(g[i]), 1e-8)
        worst = max(worst, abs(fd - g[i]) / denom)
    return worst


def nudge_off_kinks(pred: np.ndarray, gt: np.ndarray, margin: float) -> np.ndarray:
    """Push pred away from gt wherever |pred - gt| < margin (L1 kink avoidance)."""
    d = pred - gt
    s = np.where(d >= 0.0, 1.0, -1.0)
    close = np.abs(d) < margin
    out = pred.copy()
    out[close] = gt[close] + s[close] * margin
    return out


# ---------------------------------------------------------------------------
# Golden loss-vector files
# ---------------------------------------------------------------------------

def _sha256(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).hexdigest()


def compute_loss_vectors(seed: int = 0, size: int = 8, step: float = 1e-3) -> dict:
    """Deterministic loss + gradient-check report for cross-implementation checks."""
    rng = np.random.default_rng(seed)
    gt = rng.random((size, size, 4))
    pred = nudge_off_kinks(rng.random((size, size, 4)), gt, 10.0 * step)
    M = (rng.random((size, size)) < 0.5).astype(np.float64)
    if M.sum() == 0:
        M[0, 0] = 1.0
    logits = rng.normal(0.0, 3.0, size=(size, size))

    recon, _ = recon_alpha_weighted(pred, gt)
    al1, _ = alpha_l1(pred, gt)
    col, _ = lip_color_loss(pred, gt, M)
    col_nr, _ = lip_color_loss_noreg(pred, gt, M)
    bce_r, _ = adversarial_bce(logits, True)
    bce_f, _ = adversarial_bce(logits, False)

    checks = {
        "recon_alpha_weighted": finite_diff_check(
            lambda x: recon_alpha_weighted(x, gt), pred.copy(), step
        ),
        "alpha_l1": finite_diff_check(lambda x: alpha_l1(x, gt), pred.copy(), step),
        "lip_color_loss": finite_diff_check(
            lambda x: lip_color_loss(x, gt, M), pred.copy(), step
        ),
        "lip_color_loss_noreg": finite_diff_check(
            lambda x: lip_color_loss_noreg(x, gt, M), pred.copy(), step
        ),
        "adversarial_bce": finite_diff_check(
            lambda z: adversarial_bce(z, True), logits.copy(), step
        ),
    }
    return {
        "seed": seed,
        "size": size,
        "step": step,
        "input_sha256": {
            "pred": _sha256(pred),
            "gt": _sha256(gt),
            "lip_mask": _sha256(M),
            "logits": _sha256(logits),
        },
        "losses": {
            "recon_alpha_weighted": recon,
            "alpha_l1": al1,
            "lip_color_loss": col,
            "lip_color_loss_noreg": col_nr,
            "adversarial_bce_real": bce_r,
            "adversarial_bce_fake": bce_f,
        },
        "max_rel_grad_error": checks,
    }


def write_loss_vectors(path, seed: int = 0, size: int = 8, step: float = 1e-3) -> dict:
    doc = compute_loss_vectors(seed, size, step)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
    return doc
