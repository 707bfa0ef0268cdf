"""Synthetic miscalibrated score sets with a controllable prior mismatch.

Each sample's log-scores are
``log(true_prior) + margin * onehot(label) + model_bias + noise``.
Without bias the scores carry the true class prior, so the mean posterior
tracks it; a non-zero ``model_bias`` shifts the model's implied prior away
from ``true_prior``, which is exactly what prior adaptation removes. With
Gaussian noise the posteriors are calibrated when ``margin == noise_scale**2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import prng
from .core import LabelVector, LogScoreMatrix, PriorVector

_LABEL_STREAM = 0
_NOISE_STREAM = 1


@dataclass(frozen=True, eq=False)
class SynthConfig:
    k: int
    n: int
    true_prior: Optional[PriorVector] = None
    model_bias: Optional[Sequence[float]] = None
    noise_scale: float = 1.0
    seed: int = 0
    margin: float = 2.0
    class_names: tuple = ()

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.noise_scale >= 0:
            raise ValueError("noise_scale must be >= 0")
        prior = self.true_prior
        if prior is None:
            prior = PriorVector.uniform(self.k)
        elif not isinstance(prior, PriorVector):
            prior = PriorVector(prior)
        if prior.k != self.k:
            raise ValueError(f"true_prior has {prior.k} classes, expected {self.k}")
        if np.any(prior.probs <= 0):
            raise ValueError("true_prior must be strictly positive")
        bias = np.zeros(self.k) if self.model_bias is None else np.asarray(self.model_bias, float)
        if bias.shape != (self.k,) or not np.all(np.isfinite(bias)):
            raise ValueError(f"model_bias must be {self.k} finite numbers")
        bias.setflags(write=False)
        prng.seed_key(self.seed)
        object.__setattr__(self, "true_prior", prior)
        object.__setattr__(self, "model_bias", bias)


def sample_labels(key, n: int, prior: PriorVector) -> np.ndarray:
    """Inverse-CDF draws from ``prior``; label ``i`` uses uniform ``i`` of the stream."""
    cdf = np.cumsum(prior.probs)
    cdf[-1] = 1.0
    u = prng.uniform(key, n)
    return np.minimum(np.searchsorted(cdf, u, side="right"), prior.k - 1)


def generate(cfg: SynthConfig) -> tuple[LogScoreMatrix, LabelVector]:
    """Draw ``cfg.n`` labelled samples of log-scores.

    Labels come from child stream 0 of the seed, noise from child stream 1
    (row-major, one standard normal per score).
    """
    root = prng.seed_key(cfg.seed)
    labels = sample_labels(prng.derive_key(root, _LABEL_STREAM), cfg.n, cfg.true_prior)
    scores = np.zeros((cfg.n, cfg.k))
    scores[np.arange(cfg.n), labels] = cfg.margin
    scores += np.log(cfg.true_prior.probs) + cfg.model_bias
    if cfg.noise_scale > 0:
        noise = prng.standard_normal(prng.derive_key(root, _NOISE_STREAM), cfg.n * cfg.k)
        scores += cfg.noise_scale * noise.reshape(cfg.n, cfg.k)
    ids = tuple(f"s{i}" for i in range(cfg.n))
    return (
        LogScoreMatrix(scores, cfg.class_names or (), ids),
        LabelVector(labels, cfg.k),
    )
