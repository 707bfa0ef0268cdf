"""Evaluation: error rate, cross-entropy, normalized cross-entropy, bootstrap."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import prng
from .core import LabelVector, PosteriorMatrix, PriorVector
from .errors import DegenerateReference, InvalidLabels, ZeroClassCount

METRICS = ("error_rate", "cross_entropy", "normalized_cross_entropy")


@dataclass(frozen=True)
class BootstrapConfig:
    n_resamples: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_resamples < 1:
            raise ValueError("n_resamples must be >= 1")
        prng.seed_key(self.seed)


@dataclass
class BootstrapSummary:
    n_resamples: int
    seed: int
    mean: dict
    std: dict
    values: dict = field(default_factory=dict)


@dataclass
class EvaluationReport:
    error_rate: float
    cross_entropy: float
    normalized_cross_entropy: Optional[float]
    naive_cross_entropy: float
    n_samples: int
    reference_prior: list
    bootstrap: Optional[BootstrapSummary] = None

    def to_dict(self) -> dict:
        out = {
            "n_samples": self.n_samples,
            "error_rate": self.error_rate,
            "cross_entropy": self.cross_entropy,
            "naive_cross_entropy": self.naive_cross_entropy,
            "normalized_cross_entropy": self.normalized_cross_entropy,
            "reference_prior": list(self.reference_prior),
        }
        if self.bootstrap is not None:
            b = self.bootstrap
            out["bootstrap"] = {
                "n_resamples": b.n_resamples,
                "seed": b.seed,
                "mean": dict(b.mean),
                "std": dict(b.std),
                "values": {m: list(v) for m, v in b.values.items()},
            }
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        boot = d.get("bootstrap")
        return cls(
            error_rate=d["error_rate"],
            cross_entropy=d["cross_entropy"],
            normalized_cross_entropy=d["normalized_cross_entropy"],
            naive_cross_entropy=d["naive_cross_entropy"],
            n_samples=d["n_samples"],
            reference_prior=list(d["reference_prior"]),
            bootstrap=None if boot is None else BootstrapSummary(
                boot["n_resamples"], boot["seed"], dict(boot["mean"]), dict(boot["std"]),
                {m: list(v) for m, v in boot["values"].items()},
            ),
        )


def _labels(labels, n=None, k=None) -> np.ndarray:
    y = labels.labels if isinstance(labels, LabelVector) else np.asarray(labels, dtype=np.int64)
    if n is not None and y.shape != (n,):
        raise InvalidLabels(f"expected {n} labels, got {y.size}")
    if k is not None and y.size and (y.min() < 0 or y.max() >= k):
        raise InvalidLabels(f"labels must lie in [0, {k})")
    return y


def _prior(prior) -> np.ndarray:
    return prior.probs if isinstance(prior, PriorVector) else PriorVector(prior).probs


def per_sample_errors(posteriors: PosteriorMatrix, labels) -> np.ndarray:
    y = _labels(labels, posteriors.n, posteriors.k)
    return (np.argmax(posteriors.values, axis=1) != y).astype(np.float64)


def per_sample_losses(posteriors: PosteriorMatrix, labels) -> np.ndarray:
    y = _labels(labels, posteriors.n, posteriors.k)
    return -posteriors.log()[np.arange(posteriors.n), y]


def error_rate(posteriors: PosteriorMatrix, labels) -> float:
    """Fraction of rows whose argmax (ties to lowest index) differs from the label."""
    return float(np.mean(per_sample_errors(posteriors, labels)))


def cross_entropy(posteriors: PosteriorMatrix, labels) -> float:
    """Mean negative log posterior of the true class, in nats."""
    return float(np.mean(per_sample_losses(posteriors, labels)))


def empirical_prior(labels, k: int) -> PriorVector:
    y = _labels(labels, k=k)
    if y.size == 0:
        raise InvalidLabels("no labels")
    return PriorVector(np.bincount(y, minlength=k) / y.size)


def naive_cross_entropy(prior, labels) -> float:
    """Cross-entropy of a system that outputs ``prior`` for every sample."""
    p = _prior(prior)
    y = _labels(labels, k=p.size)
    present = np.unique(y)
    if np.any(p[present] <= 0):
        zero = present[p[present] <= 0].tolist()
        raise ZeroClassCount(f"reference prior is zero for classes {zero} present in the labels", zero)
    return float(-np.mean(np.log(p[y])))


def normalized_cross_entropy(posteriors: PosteriorMatrix, labels, reference_prior=None) -> float:
    """Cross-entropy divided by that of the prior-only system.

    The reference prior defaults to the class frequencies of ``labels``.
    Values above one mean the system is worse than the naive one.
    """
    if reference_prior is None:
        reference_prior = empirical_prior(labels, posteriors.k)
    denom = naive_cross_entropy(reference_prior, labels)
    if denom <= 0:
        raise DegenerateReference("naive cross-entropy is zero (a single class is present)")
    return cross_entropy(posteriors, labels) / denom


def bootstrap_indices(cfg: BootstrapConfig, n: int) -> np.ndarray:
    """``(n_resamples, n)`` index matrix; row ``r`` depends only on ``(seed, r)``."""
    root = prng.seed_key(cfg.seed)
    return np.stack([
        prng.integers(prng.derive_key(root, r), n, n) for r in range(cfg.n_resamples)
    ])


def _population_std(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean((values - values.mean()) ** 2)))


def bootstrap_evaluate(
    posteriors: PosteriorMatrix,
    labels,
    cfg: Optional[BootstrapConfig] = BootstrapConfig(),
    reference_prior=None,
    indices=None,
) -> EvaluationReport:
    """Point metrics on the full set plus their bootstrap distribution.

    The reference prior is resolved once on the full set and held fixed over
    resamples. ``indices`` overrides the generated resample index matrix.
    Standard deviations are population (ddof=0) over resamples.
    """
    n, k = posteriors.n, posteriors.k
    y = _labels(labels, n, k)
    ref = empirical_prior(y, k) if reference_prior is None else PriorVector(_prior(reference_prior))
    naive = naive_cross_entropy(ref, y)
    err_i = per_sample_errors(posteriors, y)
    loss_i = per_sample_losses(posteriors, y)
    ce = float(np.mean(loss_i))
    report = EvaluationReport(
        error_rate=float(np.mean(err_i)),
        cross_entropy=ce,
        normalized_cross_entropy=ce / naive if naive > 0 else None,
        naive_cross_entropy=naive,
        n_samples=n,
        reference_prior=ref.probs.tolist(),
    )
    if cfg is None and indices is None:
        return report
    if indices is None:
        if n < 2:
            raise InvalidLabels("bootstrap needs at least 2 samples")
        indices = bootstrap_indices(cfg, n)
    idx = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    errs = err_i[idx].mean(axis=1)
    ces = loss_i[idx].mean(axis=1)
    values = {"error_rate": errs, "cross_entropy": ces}
    if naive > 0:
        values["normalized_cross_entropy"] = ces / naive
    report.bootstrap = BootstrapSummary(
        n_resamples=idx.shape[0],
        seed=cfg.seed if cfg is not None else None,
        mean={m: float(np.mean(v)) for m, v in values.items()},
        std={m: _population_std(v) for m, v in values.items()},
        values={m: v.tolist() for m, v in values.items()},
    )
    return report
