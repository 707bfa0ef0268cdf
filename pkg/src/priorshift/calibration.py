"""Supervised affine calibration of log-posteriors.

The calibrated log-posterior is ``alpha * log P(y_k|q) + beta_k`` renormalized
per row. ``alpha`` is a single scalar shared by all classes. Three families are
supported: both parameters free, ``alpha`` fixed at one, and ``beta`` fixed at
zero (temperature scaling).
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import LabelVector, PosteriorMatrix, log_normalize
from .errors import InvalidLabels, ZeroClassCount

logger = logging.getLogger(__name__)


class CalibrationMode(str, enum.Enum):
    FULL = "affine"
    ALPHA_FIXED_ONE = "alpha1"
    TEMPERATURE_ONLY = "temperature"

    @property
    def alpha_free(self) -> bool:
        return self is not CalibrationMode.ALPHA_FIXED_ONE

    @property
    def beta_free(self) -> bool:
        return self is not CalibrationMode.TEMPERATURE_ONLY


@dataclass(frozen=True, eq=False)
class AffineParams:
    """Scale ``alpha`` and per-class shift ``beta``.

    Fitting also records the mode, final training loss, iteration count and
    whether the gradient tolerance was met.
    """

    alpha: float
    beta: np.ndarray
    mode: CalibrationMode = CalibrationMode.FULL
    loss: Optional[float] = None
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        b = np.array(self.beta, dtype=np.float64).reshape(-1)
        if not np.isfinite(self.alpha) or not np.all(np.isfinite(b)):
            raise ValueError("affine parameters must be finite")
        b.setflags(write=False)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "mode", CalibrationMode(self.mode))

    @classmethod
    def identity(cls, k: int, mode=CalibrationMode.FULL) -> "AffineParams":
        return cls(1.0, np.zeros(k), mode)


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-8
    initial: Optional[AffineParams] = field(default=None)
    # Armijo sufficient-decrease constant.
    armijo_c: float = 1e-4

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be > 0")


def _labels_array(labels, n: int, k: int) -> np.ndarray:
    y = labels.labels if isinstance(labels, LabelVector) else np.asarray(labels, dtype=np.int64)
    if y.shape != (n,):
        raise InvalidLabels(f"expected {n} labels, got {y.shape[0] if y.ndim else 0}")
    if y.size and (y.min() < 0 or y.max() >= k):
        raise InvalidLabels(f"labels must lie in [0, {k})")
    return y


def _calibrated_log(logp: np.ndarray, alpha: float, beta: np.ndarray) -> np.ndarray:
    return log_normalize(alpha * logp + beta)


def apply_affine(posteriors: PosteriorMatrix, params: AffineParams) -> PosteriorMatrix:
    """Calibrated posteriors ``softmax(alpha * log P + beta)`` per row."""
    if params.beta.shape != (posteriors.k,):
        raise ValueError(f"beta has {params.beta.size} entries, expected {posteriors.k}")
    logq = _calibrated_log(posteriors.log(), params.alpha, params.beta)
    return PosteriorMatrix.from_log(logq, posteriors.class_names, posteriors.ids)


def _loss_and_grad(logp, y, alpha, beta):
    n = logp.shape[0]
    logq = _calibrated_log(logp, alpha, beta)
    rows = np.arange(n)
    loss = -np.mean(logq[rows, y])
    resid = np.exp(logq)
    resid[rows, y] -= 1.0
    d_alpha = np.sum(resid * logp) / n
    d_beta = resid.mean(axis=0)
    return loss, d_alpha, d_beta


def cross_entropy_loss(posteriors: PosteriorMatrix, labels, params: AffineParams) -> float:
    """Mean negative log calibrated posterior of the true class, in nats."""
    y = _labels_array(labels, posteriors.n, posteriors.k)
    logq = _calibrated_log(posteriors.log(), params.alpha, params.beta)
    return float(-np.mean(logq[np.arange(posteriors.n), y]))


def loss_gradient(posteriors: PosteriorMatrix, labels, params: AffineParams):
    """Analytic gradient ``(dL/dalpha, dL/dbeta)`` of :func:`cross_entropy_loss`.

    ``dL/dbeta_k = mean_i(Q_ik - [y_i = k])`` and
    ``dL/dalpha = mean_i sum_k (Q_ik - [y_i = k]) log P_ik`` where ``Q`` are the
    calibrated posteriors.
    """
    y = _labels_array(labels, posteriors.n, posteriors.k)
    _, d_alpha, d_beta = _loss_and_grad(posteriors.log(), y, params.alpha, params.beta)
    return float(d_alpha), d_beta


def fit_affine(
    train_posteriors: PosteriorMatrix,
    labels,
    mode=CalibrationMode.FULL,
    cfg: FitConfig = FitConfig(),
) -> AffineParams:
    """Minimize training cross-entropy over the affine family selected by ``mode``.

    Full-batch gradient descent from the identity transform. Each step tries
    the Barzilai-Borwein step length (1.0 on the first step) and halves it
    until the Armijo condition holds, so the loss never increases. The
    objective is convex in ``(alpha, beta)``.

    Raises :class:`ZeroClassCount` when ``beta`` is free and a class has no
    training label, because its optimal shift is minus infinity.
    """
    mode = CalibrationMode(mode)
    n, k = train_posteriors.n, train_posteriors.k
    y = _labels_array(labels, n, k)
    if mode.beta_free:
        counts = np.bincount(y, minlength=k)
        if np.any(counts == 0):
            missing = np.flatnonzero(counts == 0).tolist()
            raise ZeroClassCount(
                f"classes {missing} have no training labels; beta would diverge", missing
            )

    logp = train_posteriors.log()
    init = cfg.initial or AffineParams.identity(k)
    theta = np.concatenate([[1.0 if not mode.alpha_free else init.alpha],
                            np.zeros(k) if not mode.beta_free else init.beta])
    mask = np.concatenate([[float(mode.alpha_free)], np.full(k, float(mode.beta_free))])

    def evaluate(th):
        loss, da, db = _loss_and_grad(logp, y, th[0], th[1:])
        return loss, np.concatenate([[da], db]) * mask

    loss, grad = evaluate(theta)
    prev_theta = prev_grad = None
    converged = False
    it = 0
    for it in range(cfg.max_iterations + 1):
        if np.max(np.abs(grad)) < cfg.gradient_tolerance:
            converged = True
            break
        if it == cfg.max_iterations:
            break
        step = 1.0
        if prev_theta is not None:
            s, g = theta - prev_theta, grad - prev_grad
            sg = float(s @ g)
            if sg > 0:
                step = float(s @ s) / sg
        gg = float(grad @ grad)
        while True:
            cand = theta - step * grad
            cand_loss, cand_grad = evaluate(cand)
            if np.isfinite(cand_loss) and cand_loss <= loss - cfg.armijo_c * step * gg:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if step < 1e-20:
            logger.warning("line search stalled at iteration %d", it)
            break
        prev_theta, prev_grad = theta, grad
        theta, loss, grad = cand, cand_loss, cand_grad

    if not converged:
        logger.warning("affine fit stopped after %d iterations, |grad| = %.3g",
                       it, float(np.max(np.abs(grad))))
    return AffineParams(theta[0], theta[1:], mode, float(loss), it, converged)
