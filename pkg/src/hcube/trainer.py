"""Minibatch training loop for a pair of hashing heads.

Batches pair each observation row with the text row of its label, the text
side acting as a per-class anchor. The whole loop is deterministic for a
fixed config: head initialization and epoch shuffles derive from
``cfg.seed`` alone, and all updates run in float64 numpy.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import MissingTextForLabel, NonFiniteLoss
from .heads import encode, init_head
from .index import pack_codes
from .objective import total_loss_and_grads
from .storage import atomic_write
from .types import EmbeddingSet, HashHead, PairedBatch, TrainConfig, validate


@dataclass(frozen=True)
class EpochStats:
    """One epoch's mean losses plus collapse diagnostics of the observation
    codes: extreme per-bit activation fractions and the distinct-code count."""

    epoch: int
    align: float
    div: float
    total: float
    bit_lo: float
    bit_hi: float
    distinct_codes: int


@dataclass(frozen=True)
class TrainLog:
    epochs: tuple[EpochStats, ...]


def _text_row_for_label(text: EmbeddingSet) -> dict[int, int]:
    # first occurrence wins when a label has several text rows
    mapping: dict[int, int] = {}
    for i, label in enumerate(text.labels):
        mapping.setdefault(int(label), i)
    return mapping


def make_batches(
    text: EmbeddingSet, obs: EmbeddingSet, batch_size: int, seed: int, epoch: int
) -> list[PairedBatch]:
    """Shuffle observation rows and slice them into label-paired minibatches.

    The shuffle is keyed by (seed, epoch) so every epoch sees a fresh but
    reproducible order. A trailing batch of fewer than two rows is dropped
    because the diversity term is undefined for it.
    """
    anchor = _text_row_for_label(text)
    missing = sorted(set(int(l) for l in obs.labels) - set(anchor))
    if missing:
        raise MissingTextForLabel(
            f"observation labels {missing[:5]} have no text row to pair with"
        )
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch]))
    order = rng.permutation(obs.count)
    batches = []
    for start in range(0, obs.count, batch_size):
        idx = order[start : start + batch_size]
        if idx.size < 2:
            break
        text_idx = np.array([anchor[int(l)] for l in obs.labels[idx]])
        batches.append(
            PairedBatch(
                text_feats=text.rows[text_idx],
                obs_feats=obs.rows[idx],
                labels=obs.labels[idx],
            )
        )
    return batches


def initial_heads(dim_text: int, dim_obs: int, cfg: TrainConfig) -> tuple[HashHead, HashHead]:
    """Independent seeded initializations for the two heads, both derived
    from cfg.seed so runs are reproducible end to end."""
    seq_text, seq_obs = np.random.SeedSequence(cfg.seed).spawn(2)
    head_text = init_head(dim_text, cfg.bits, hidden=cfg.hidden_width, seed=seq_text)
    head_obs = init_head(dim_obs, cfg.bits, hidden=cfg.hidden_width, seed=seq_obs)
    return head_text, head_obs


class _Adam:
    """Standard bias-corrected Adam over a named parameter dict."""

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray],
             grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        out = {}
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            out[k] = p - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
        return out


def _code_stats(head: HashHead, obs: EmbeddingSet) -> tuple[float, float, int]:
    codes = encode(head, obs.rows)
    frac = codes.values.mean(axis=0)
    if codes.bits % 64 == 0:
        words = pack_codes(codes)
        distinct = np.unique(words, axis=0).shape[0]
    else:
        distinct = np.unique(codes.values, axis=0).shape[0]
    return float(frac.min()), float(frac.max()), int(distinct)


def train(
    text: EmbeddingSet,
    obs: EmbeddingSet,
    cfg: TrainConfig,
    on_epoch=None,
) -> tuple[HashHead, HashHead, TrainLog]:
    """Run the full optimization and return trained heads plus a log.

    Raises NonFiniteLoss and stops immediately if any batch loss leaves the
    reals; never silently continues past numerical failure.
    """
    validate(text)
    validate(obs)
    head_text, head_obs = initial_heads(text.dim, obs.dim, cfg)
    opt_text = _Adam(head_text.params(), cfg.learning_rate)
    opt_obs = _Adam(head_obs.params(), cfg.learning_rate)
    log: list[EpochStats] = []
    for epoch in range(cfg.epochs):
        batches = make_batches(text, obs, cfg.batch_size, cfg.seed, epoch)
        sums = np.zeros(3)
        for b, batch in enumerate(batches):
            report, (g_text, g_obs) = total_loss_and_grads((head_text, head_obs), batch, cfg)
            if not np.isfinite(report.total):
                raise NonFiniteLoss(
                    f"loss became {report.total} at epoch {epoch}, batch {b}"
                )
            sums += (report.align, report.div, report.total)
            head_text = head_text.with_params(opt_text.step(head_text.params(), g_text))
            head_obs = head_obs.with_params(opt_obs.step(head_obs.params(), g_obs))
        n = max(len(batches), 1)
        lo, hi, distinct = _code_stats(head_obs, obs)
        stats = EpochStats(
            epoch=epoch,
            align=float(sums[0] / n),
            div=float(sums[1] / n),
            total=float(sums[2] / n),
            bit_lo=lo,
            bit_hi=hi,
            distinct_codes=distinct,
        )
        log.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
    return head_text, head_obs, TrainLog(epochs=tuple(log))


def write_train_log(log: TrainLog, path) -> None:
    """One JSON object per epoch, in order."""
    with atomic_write(path) as f:
        for stats in log.epochs:
            f.write(json.dumps(asdict(stats)).encode() + b"\n")
