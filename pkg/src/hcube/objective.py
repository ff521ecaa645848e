"""Training objective: cross-view code alignment plus an anti-collapse
coding-rate regularizer, with exact analytic gradients.

The alignment term is a symmetric binary cross-entropy between each view's
probabilities and the *other* view's binarized codes; the codes are treated
as constants, so gradients flow only through the probability arguments.
The diversity term rewards batch logits that spread across all code
dimensions: row-normalized logits v_i form a Gram matrix
C = (1/B) sum_i v_i v_i^T and the penalty is -1/2 logdet(I + (b/B) C),
which is always <= 0 and most negative when C is isotropic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, FactorizationFailure, ShapeMismatch
from .heads import _backward, _forward_cache, sigmoid
from .types import CodeBatch, HashHead, LogitBatch, PairedBatch, ProbBatch, TrainConfig

# probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] inside the BCE so the
# loss stays bounded and gradients stay stable near saturation
PROB_EPS = 1e-7
# guard for row norms so the regularizer is defined at zero initialization
NORM_EPS = 1e-12


@dataclass(frozen=True)
class LossReport:
    """Scalar losses of one batch; ``total == align + lam * div`` exactly."""

    align: float
    div: float
    total: float


def _bce_mean(targets: np.ndarray, probs: np.ndarray) -> float:
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    y = targets.astype(np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def _bce_grad_probs_to_logits(targets: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """d(mean BCE)/d(logits) where probs = sigmoid(logits).

    The clamp makes the loss constant in a saturated entry, so its gradient
    there is exactly zero; elsewhere the usual (p - y) form applies.
    """
    inside = (probs > PROB_EPS) & (probs < 1.0 - PROB_EPS)
    y = targets.astype(np.float64)
    return np.where(inside, probs - y, 0.0) / probs.size


def bce(targets: CodeBatch, probs: ProbBatch) -> float:
    """Mean binary cross-entropy over all batch-by-bit entries."""
    if targets.values.shape != probs.values.shape:
        raise ShapeMismatch(
            f"targets {targets.values.shape} vs probs {probs.values.shape}"
        )
    return _bce_mean(targets.values, probs.values)


def _codes(probs: np.ndarray) -> np.ndarray:
    return (probs >= 0.5).astype(np.float64)


def align_loss(p_text: ProbBatch, p_obs: ProbBatch) -> float:
    """Symmetric cross-view BCE: each view's probabilities are scored against
    the other view's binarized codes. Symmetric in its arguments."""
    pt, po = p_text.values, p_obs.values
    if pt.shape != po.shape:
        raise ShapeMismatch(f"text {pt.shape} vs obs {po.shape}")
    return 0.5 * (_bce_mean(_codes(pt), po) + _bce_mean(_codes(po), pt))


def _coding_rate_raw(z: np.ndarray, with_grad: bool):
    batch, bits = z.shape
    norms = np.linalg.norm(z, axis=1)
    r = np.maximum(norms, NORM_EPS)
    v = z / r[:, None]
    gram = np.eye(bits) + (bits / (batch * batch)) * (v.T @ v)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:  # PSD by construction; a failure is a bug
        raise FactorizationFailure(f"I + (b/B)C was not positive definite: {exc}") from exc
    value = float(-np.sum(np.log(np.diag(chol))))
    if not with_grad:
        return value, None
    # d/dV of -1/2 logdet(I + (b/B^2) V^T V) = -(b/B^2) V A^{-1}
    g = -(bits / (batch * batch)) * np.linalg.solve(gram, v.T).T
    # chain through v_i = z_i / max(||z_i||, eps)
    guarded = norms > NORM_EPS
    proj = np.sum(g * v, axis=1, keepdims=True)
    dz = np.where(guarded[:, None], (g - proj * v) / r[:, None], g / NORM_EPS)
    return value, dz


def coding_rate(z: LogitBatch, bits: int) -> float:
    """Anti-collapse penalty -1/2 logdet(I + (b/B) C) of one logit batch.

    Invariant under positive row rescaling of z; always <= 0; minimized when
    the normalized rows spread isotropically.
    """
    if z.values.shape[1] != bits:
        raise ShapeMismatch(f"logits have {z.values.shape[1]} columns, expected {bits}")
    value, _ = _coding_rate_raw(z.values, with_grad=False)
    return value


def div_loss(z_text: LogitBatch, z_obs: LogitBatch, bits: int) -> float:
    """Mean of the coding-rate terms of the two views."""
    return 0.5 * (coding_rate(z_text, bits) + coding_rate(z_obs, bits))


def total_loss_and_grads(
    heads: tuple[HashHead, HashHead], batch: PairedBatch, cfg: TrainConfig
) -> tuple[LossReport, tuple[dict[str, np.ndarray], dict[str, np.ndarray]]]:
    """Combined objective align + lam * div and its exact parameter gradients.

    Binarized codes are constants under differentiation (stop-gradient), so
    the alignment term reaches each head only through that head's own
    probabilities. Deterministic given inputs.
    """
    head_text, head_obs = heads
    if head_text.bits != cfg.bits or head_obs.bits != cfg.bits:
        raise DimensionMismatch(
            f"head bits ({head_text.bits}, {head_obs.bits}) do not match cfg.bits={cfg.bits}"
        )
    z_t, cache_t = _forward_cache(head_text, batch.text_feats)
    z_o, cache_o = _forward_cache(head_obs, batch.obs_feats)
    p_t, p_o = sigmoid(z_t), sigmoid(z_o)
    y_t, y_o = _codes(p_t), _codes(p_o)

    align = 0.5 * (_bce_mean(y_t, p_o) + _bce_mean(y_o, p_t))
    dz_t = 0.5 * _bce_grad_probs_to_logits(y_o, p_t)
    dz_o = 0.5 * _bce_grad_probs_to_logits(y_t, p_o)

    reg_t, dreg_t = _coding_rate_raw(z_t, with_grad=cfg.lam > 0)
    reg_o, dreg_o = _coding_rate_raw(z_o, with_grad=cfg.lam > 0)
    div = 0.5 * (reg_t + reg_o)
    if cfg.lam > 0:
        dz_t = dz_t + cfg.lam * 0.5 * dreg_t
        dz_o = dz_o + cfg.lam * 0.5 * dreg_o

    report = LossReport(align=align, div=div, total=align + cfg.lam * div)
    grads_t = _backward(head_text, cache_t, dz_t)
    grads_o = _backward(head_obs, cache_o, dz_o)
    return report, (grads_t, grads_o)
