"""Prior adaptation of black-box posteriors.

Two estimators share this module:

* the naive reweighting ``P(y|q) * target(y) / model(y)``, renormalized per
  row, where ``model`` is the mean posterior over unlabelled queries;
* the iterative solution of the same shift ``beta`` as the optimum of affine
  calibration with the scale fixed to one (:func:`solve_beta_fixed_point`).

Uniform target priors give the unsupervised variants; empirical or explicit
target priors give the semi-supervised ones.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import LabelVector, PosteriorMatrix, PriorVector, log_normalize
from .errors import (
    DegenerateColumn,
    DegeneratePrior,
    EmptyTrainingSet,
    InvalidLabels,
    InvalidPrior,
    ZeroClassCount,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Uniform:
    """Target prior ``1/K`` for every class."""


@dataclass(frozen=True, eq=False)
class Empirical:
    """Target prior from class frequencies, ``(N_k + smoothing) / (N + K * smoothing)``."""

    labels: LabelVector
    smoothing: float = 0.0

    def __post_init__(self):
        if not isinstance(self.labels, LabelVector):
            object.__setattr__(self, "labels", LabelVector(self.labels))
        if not (self.smoothing >= 0 and np.isfinite(self.smoothing)):
            raise ValueError(f"smoothing must be a non-negative number, got {self.smoothing}")


@dataclass(frozen=True, eq=False)
class Explicit:
    """A target prior supplied by the caller."""

    prior: PriorVector

    def __post_init__(self):
        if not isinstance(self.prior, PriorVector):
            object.__setattr__(self, "prior", PriorVector(self.prior))


TargetPriorSpec = Union[Uniform, Empirical, Explicit]


@dataclass(frozen=True)
class FixedPointConfig:
    max_iterations: int = 100
    tolerance: float = 1e-8
    damping: float = 1.0

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class AdaptationResult:
    """Outcome of an adaptation run.

    ``beta`` is the per-class log shift that maps the input posteriors to
    ``adapted`` (up to per-row renormalization). For the naive method it is
    ``log target - log model``; for the iterative method it is the fixed point.
    """

    adapted: PosteriorMatrix
    model_prior: PriorVector
    target_prior: PriorVector
    beta: Optional[np.ndarray] = None
    iterations_used: int = 0
    converged: bool = True

    def __post_init__(self):
        if self.beta is not None:
            b = np.array(self.beta, dtype=np.float64)
            if not np.all(np.isfinite(np.exp(b))):
                raise ValueError("exp(beta) must be finite")
            b.setflags(write=False)
            object.__setattr__(self, "beta", b)


def _column_mean(posteriors: PosteriorMatrix) -> np.ndarray:
    return posteriors.values.mean(axis=0)


def estimate_model_prior(train_posteriors: PosteriorMatrix) -> PriorVector:
    """Model prior as the column mean of posteriors over unlabelled queries."""
    if train_posteriors is None or train_posteriors.n == 0:
        raise EmptyTrainingSet("cannot estimate a prior from zero samples")
    return PriorVector(_column_mean(train_posteriors))


def resolve_target_prior(spec: TargetPriorSpec, k: int) -> PriorVector:
    """Concrete target prior over ``k`` classes."""
    if isinstance(spec, Uniform):
        return PriorVector.uniform(k)
    if isinstance(spec, Explicit):
        if spec.prior.k != k:
            raise InvalidPrior(f"explicit prior has {spec.prior.k} classes, expected {k}")
        return spec.prior
    if isinstance(spec, Empirical):
        labels = spec.labels.labels
        if labels.size == 0:
            raise EmptyTrainingSet("no labels to estimate a target prior from")
        if labels.max() >= k:
            raise InvalidLabels(f"label {int(labels.max())} out of range for K={k}")
        counts = np.bincount(labels, minlength=k).astype(np.float64)
        if spec.smoothing == 0 and np.any(counts == 0):
            missing = np.flatnonzero(counts == 0).tolist()
            raise ZeroClassCount(
                f"classes {missing} have zero training count; "
                "pass a positive smoothing or an explicit prior",
                missing,
            )
        return PriorVector((counts + spec.smoothing) / (labels.size + k * spec.smoothing))
    raise TypeError(f"unknown target prior spec: {spec!r}")


def _require_positive(prior: PriorVector, what: str):
    if np.any(prior.probs <= 0):
        zeros = np.flatnonzero(prior.probs <= 0).tolist()
        raise DegeneratePrior(f"{what} is zero for classes {zeros}")


def _naive_beta(model_probs: np.ndarray, target_probs: np.ndarray) -> np.ndarray:
    return np.log(target_probs) - np.log(model_probs)


def apply_beta(posteriors: PosteriorMatrix, beta) -> PosteriorMatrix:
    """Add a per-class log shift to every row and renormalize."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (posteriors.k,) or not np.all(np.isfinite(beta)):
        raise ValueError(f"beta must be {posteriors.k} finite numbers")
    logp = log_normalize(posteriors.log() + beta)
    return PosteriorMatrix.from_log(logp, posteriors.class_names, posteriors.ids)


def adapt_naive(
    test_posteriors: PosteriorMatrix,
    model_prior: PriorVector,
    target_prior: PriorVector,
) -> AdaptationResult:
    """Replace the model prior by the target prior in every posterior row.

    Row ``i`` becomes ``P_ik * target_k / model_k`` renormalized to sum to one.
    With a content-free training set (e.g. "N/A", "[MASK]" and the empty
    string) as the source of ``model_prior`` and a uniform target this is
    contextual calibration.
    """
    k = test_posteriors.k
    if model_prior.k != k or target_prior.k != k:
        raise InvalidPrior(f"priors must have {k} classes")
    _require_positive(model_prior, "model prior")
    _require_positive(target_prior, "target prior")
    beta = _naive_beta(model_prior.probs, target_prior.probs)
    return AdaptationResult(
        adapted=apply_beta(test_posteriors, beta),
        model_prior=model_prior,
        target_prior=target_prior,
        beta=beta,
        iterations_used=0,
        converged=True,
    )


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def solve_beta_fixed_point(
    train_posteriors: PosteriorMatrix,
    target_prior: PriorVector,
    cfg: FixedPointConfig = FixedPointConfig(),
) -> AdaptationResult:
    """Iterate ``beta_k = log t_k - log mean_i(P_ik exp(gamma_i))`` to a fixed point.

    ``gamma_i = -log sum_k P_ik exp(beta_k)`` is the row normalizer of the
    shifted posteriors. The first iterate uses ``gamma = 0`` and therefore
    equals the naive shift exactly. At the fixed point the mean shifted
    posterior of every class equals ``t_k``, which is the first-order
    condition of cross-entropy training of ``beta`` with the scale fixed at 1.

    Training posteriors stay fixed across iterations. Non-convergence is
    reported through ``converged`` rather than raised.
    """
    if train_posteriors is None or train_posteriors.n == 0:
        raise EmptyTrainingSet("cannot solve for beta on zero samples")
    k = train_posteriors.k
    if target_prior.k != k:
        raise InvalidPrior(f"target prior has {target_prior.k} classes, expected {k}")
    _require_positive(target_prior, "target prior")
    model = _column_mean(train_posteriors)
    if np.any(model <= 0):
        cols = np.flatnonzero(model <= 0).tolist()
        raise DegenerateColumn(f"classes {cols} receive no posterior mass in the training set")

    logp = train_posteriors.log()
    log_t = np.log(target_prior.probs)
    log_n = np.log(train_posteriors.n)

    beta = _naive_beta(model, target_prior.probs)
    converged = False
    it = 1
    while it < cfg.max_iterations:
        gamma = -_logsumexp(logp + beta, axis=1)
        new = log_t - (_logsumexp(logp + gamma[:, None], axis=0) - log_n)
        if cfg.damping != 1.0:
            new = (1.0 - cfg.damping) * beta + cfg.damping * new
        step = np.max(np.abs(new - beta))
        beta = new
        it += 1
        if not np.all(np.isfinite(beta)):
            logger.warning("fixed point diverged after %d iterations", it)
            break
        if step < cfg.tolerance:
            converged = True
            break
    if not converged:
        logger.warning("fixed point did not converge in %d iterations", it)

    return AdaptationResult(
        adapted=apply_beta(train_posteriors, beta) if np.all(np.isfinite(beta)) else train_posteriors,
        model_prior=PriorVector(model),
        target_prior=target_prior,
        beta=beta if np.all(np.isfinite(beta)) else None,
        iterations_used=it,
        converged=converged,
    )
