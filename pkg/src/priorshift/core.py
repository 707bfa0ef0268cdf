"""Numeric value types, score normalization and prediction.

All values are immutable: arrays are copied on construction and marked
read-only, so instances can be shared between threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyLabel,
    InvalidLabels,
    InvalidPosteriors,
    InvalidPrior,
    InvalidScores,
    InvalidTokenProb,
)

#: Smallest log-probability used anywhere; linear outputs are floored at exp(LOG_FLOOR).
LOG_FLOOR = -700.0
PROB_FLOOR = float(np.exp(LOG_FLOOR))
SUM_TOL = 1e-9


def _frozen(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_names(class_names, k):
    names = tuple(str(c) for c in class_names)
    if len(names) != k:
        raise InvalidScores(f"expected {k} class names, got {len(names)}")
    if len(set(names)) != k:
        raise InvalidScores(f"class names are not unique: {list(names)}")
    return names


def _check_ids(ids, n):
    if ids is None:
        return None
    ids = tuple(str(i) for i in ids)
    if len(ids) != n:
        raise InvalidScores(f"expected {n} ids, got {len(ids)}")
    return ids


def default_class_names(k: int) -> tuple[str, ...]:
    return tuple(f"class_{i}" for i in range(k))


@dataclass(frozen=True, eq=False)
class LogScoreMatrix:
    """N x K raw log-scores from a black-box classifier.

    ``ids`` optionally carries one identifier per row (used by file I/O).
    """

    values: np.ndarray
    class_names: tuple[str, ...] = ()
    ids: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2:
            raise InvalidScores(f"log-scores must be 2-D, got shape {v.shape}")
        n, k = v.shape
        if n < 1 or k < 2:
            raise InvalidScores(f"need N >= 1 and K >= 2, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise InvalidScores(f"non-finite log-score at row {bad[0]}, column {bad[1]}")
        names = self.class_names or default_class_names(k)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "class_names", _check_names(names, k))
        object.__setattr__(self, "ids", _check_ids(self.ids, n))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class PosteriorMatrix:
    """N x K row-stochastic matrix of class posteriors."""

    values: np.ndarray
    class_names: tuple[str, ...] = ()
    ids: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 2:
            raise InvalidPosteriors(f"posteriors must be N x K with N >= 1, K >= 2; got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise InvalidPosteriors("posterior entries must lie in [0, 1]")
        err = np.abs(v.sum(axis=1) - 1.0)
        if np.any(err > SUM_TOL):
            row = int(np.argmax(err))
            raise InvalidPosteriors(f"row {row} sums to {v[row].sum()!r}, not 1")
        names = self.class_names or default_class_names(v.shape[1])
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "class_names", _check_names(names, v.shape[1]))
        object.__setattr__(self, "ids", _check_ids(self.ids, v.shape[0]))

    @classmethod
    def from_log(cls, log_values, class_names=(), ids=None) -> "PosteriorMatrix":
        """Build from per-row normalized log-probabilities, flooring at ``PROB_FLOOR``."""
        return cls(np.maximum(np.exp(log_values), PROB_FLOOR), class_names, ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def log(self) -> np.ndarray:
        """Log-posteriors with zeros mapped to ``LOG_FLOOR``."""
        with np.errstate(divide="ignore"):
            return np.maximum(np.log(self.values), LOG_FLOOR)

    def take(self, rows) -> "PosteriorMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        ids = None if self.ids is None else tuple(self.ids[i] for i in rows)
        return PosteriorMatrix(self.values[rows], self.class_names, ids)


@dataclass(frozen=True, eq=False)
class PriorVector:
    """Probability vector over K classes."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size < 2:
            raise InvalidPrior(f"prior must be a vector of length >= 2, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise InvalidPrior(f"prior entries must lie in [0, 1]: {p.tolist()}")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise InvalidPrior(f"prior sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, k: int) -> "PriorVector":
        return cls(np.full(k, 1.0 / k))

    @property
    def k(self) -> int:
        return self.probs.size

    def __len__(self):
        return self.probs.size


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Class indices in ``[0, k)``, one per sample."""

    labels: np.ndarray
    k: Optional[int] = field(default=None)

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 1:
            raise InvalidLabels(f"labels must be 1-D, got shape {raw.shape}")
        if raw.size and not np.all(np.equal(np.mod(raw, 1), 0)):
            raise InvalidLabels("labels must be integers")
        lab = _frozen(raw, dtype=np.int64)
        if np.any(lab < 0):
            raise InvalidLabels("labels must be non-negative")
        if self.k is not None and np.any(lab >= self.k):
            raise InvalidLabels(f"label {int(lab.max())} out of range for K={self.k}")
        object.__setattr__(self, "labels", lab)

    def __len__(self):
        return self.labels.size

    def counts(self, k: Optional[int] = None) -> np.ndarray:
        k = k if k is not None else self.k
        return np.bincount(self.labels, minlength=k or 0)


def log_normalize(log_values: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax with the row maximum subtracted first."""
    shifted = log_values - np.max(log_values, axis=1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))


def normalize_scores(scores: LogScoreMatrix) -> PosteriorMatrix:
    """Turn raw log-scores into posteriors, ``exp(s_ik) / sum_k' exp(s_ik')``."""
    if not isinstance(scores, LogScoreMatrix):
        scores = LogScoreMatrix(scores)
    return PosteriorMatrix.from_log(log_normalize(scores.values), scores.class_names, scores.ids)


def compose_label_score(token_logprobs: Sequence[float]) -> float:
    """Log-score of a multi-token label name: the sum of its token log-probs."""
    tokens = np.asarray(token_logprobs, dtype=np.float64).reshape(-1)
    if tokens.size == 0:
        raise EmptyLabel("label has no token log-probabilities")
    if not np.all(np.isfinite(tokens)):
        raise InvalidTokenProb(f"non-finite token log-probability in {tokens.tolist()}")
    if np.any(tokens > 0):
        raise InvalidTokenProb(f"token log-probabilities must be <= 0, got {tokens.tolist()}")
    return math.fsum(tokens.tolist())


def predict(posteriors: PosteriorMatrix) -> LabelVector:
    """Row-wise argmax; ties go to the lowest class index."""
    values = posteriors.values if isinstance(posteriors, PosteriorMatrix) else np.asarray(posteriors)
    return LabelVector(np.argmax(values, axis=1), values.shape[1])
